// End-to-end merge pipeline for one agent pair: loop detection, direction
// disambiguation, per-match scale estimation, registration of the three
// adjacent matches, and the merge methods built on top of them (direct
// merge, center-match-only merge, and the three pose-graph baselines).

#pragma once

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/loop_detect.hpp"
#include "loopbox/metrics.hpp"
#include "loopbox/pose_graph.hpp"
#include "loopbox/registration.hpp"
#include "loopbox/scale_estimation.hpp"
#include "loopbox/scenario.hpp"

namespace loopbox {

using json = nlohmann::json;

struct PipelineParams {
  DetectionParams detection;
  ScaleFilterParams scale_filter;
  IcpParams icp;
  double cov_epsilon = 0.01;  // Eq.-3 per-point measurement noise
  Mat6 odometry_information = [] {
    Mat6 m = Mat6::Identity();
    m.diagonal() << 1e4, 1e4, 1e4, 4e4, 4e4, 4e4;
    return m;
  }();
  PgoParams pgo;
};

namespace detail {

inline double seconds_since(
    const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

struct MatchRegistration {
  AlignChainResult aligned;
  IcpResult icp;
  Sim3Transform match_final;   // Eq.-8 product for this match
  Sim3Transform world_target;  // target world -> merged frame, this match
  Mat6 information = Mat6::Identity();
  double seconds = 0.0;
};

// Everything the pipeline derives from one loop closure between two agents.
struct PairPipeline {
  std::string source_id, target_id;
  LoopClosure lc;
  DirectionVerdict verdict = DirectionVerdict::Same;
  MatchTriple triple;
  std::array<ScaleEstimate, 3> estimates;
  double r_vol = 1.0;
  OptimalScale chosen;
  bool fallback_center = false;  // no acceptable pair; center match used
  double sigma_star = 1.0;
  Sim3Transform sigma_scaling;
  std::array<MatchRegistration, 3> registrations;  // by z + 1
  Sim3Transform final_tf;  // center-match Eq. 8

  double t_detect = 0.0;
  double t_scale = 0.0;
  double t_merge = 0.0;  // reference cost of applying a merge to the maps

  const MatchRegistration& center_registration() const {
    return registrations[1];
  }
};

// Re-expresses an initial guess estimated at source frame i+from_z in the
// frame of source keyframe i+to_z, adjusting its scale from sigma_from to
// sigma_to. Exact at zero noise.
inline Sim3Transform transfer_initial_guess(const Sim3Transform& guess,
                                            double sigma_from, double sigma_to,
                                            const SE3Transform& pose_from,
                                            const SE3Transform& pose_to) {
  const Sim3Transform rel =
      Sim3Transform::from_se3(pose_to.inverse() * pose_from);
  return Sim3Transform::from_scale(sigma_to) * rel *
         Sim3Transform::from_scale(sigma_from).inverse() * guess *
         rel.inverse();
}

// Runs scale estimation and registration for a detected loop closure.
inline PairPipeline run_pair_pipeline(const AgentTrack& source,
                                      const AgentTrack& target,
                                      const LoopClosure& lc,
                                      const PipelineParams& params,
                                      double detect_seconds = 0.0) {
  PairPipeline pp;
  pp.source_id = source.agent_id;
  pp.target_id = target.agent_id;
  pp.lc = lc;
  pp.t_detect = detect_seconds;

  const auto t_scale0 = std::chrono::steady_clock::now();
  pp.verdict = determine_direction(source, target, lc, params.detection);
  pp.triple =
      build_match_triple(source, target, lc, pp.verdict, params.detection);

  for (int z = -1; z <= 1; ++z) {
    const auto& match = pp.triple.at_offset(z);
    const auto& pose_s =
        source.keyframes.at(static_cast<size_t>(match.source_frame.index))
            .pose_local;
    const auto& pose_t =
        target.keyframes.at(static_cast<size_t>(match.target_frame.index))
            .pose_local;
    pp.estimates[static_cast<size_t>(z + 1)] =
        estimate_match_scale(match, pose_s, pose_t, z, params.scale_filter);
  }

  {
    const auto& center = pp.triple.at_offset(0);
    const auto& kf_s =
        source.keyframes.at(static_cast<size_t>(center.source_frame.index));
    const auto& kf_t =
        target.keyframes.at(static_cast<size_t>(center.target_frame.index));
    pp.r_vol = volume_ratio(
        transform_cloud(Sim3Transform::from_se3(kf_s.pose_local), kf_s.cloud),
        transform_cloud(Sim3Transform::from_se3(kf_t.pose_local), kf_t.cloud));
  }

  try {
    pp.chosen = optimal_scale(pp.estimates, pp.r_vol);
  } catch (const NoAcceptablePair&) {
    const auto& center = pp.estimates[1];
    pp.chosen.sigma_star = center.sigma_z;
    pp.chosen.initial_guess = center.initial_guess;
    pp.chosen.chosen_z = 0;
    pp.chosen.gamma_star = center.gamma_z;
    pp.chosen.branch = ScaleBranch::CenterLowOverlap;
    pp.fallback_center = true;
  }
  pp.sigma_star = pp.chosen.sigma_star;
  pp.sigma_scaling = Sim3Transform::from_scale(pp.sigma_star);
  pp.t_scale = detail::seconds_since(t_scale0);

  const double sigma_from =
      pp.estimates[static_cast<size_t>(pp.chosen.chosen_z + 1)].sigma_z;
  const auto& chosen_match = pp.triple.at_offset(pp.chosen.chosen_z);
  const auto& pose_chosen =
      source.keyframes
          .at(static_cast<size_t>(chosen_match.source_frame.index))
          .pose_local;

  for (int z = -1; z <= 1; ++z) {
    const auto t_reg0 = std::chrono::steady_clock::now();
    auto& reg = pp.registrations[static_cast<size_t>(z + 1)];
    const auto& match = pp.triple.at_offset(z);
    const auto& kf_s =
        source.keyframes.at(static_cast<size_t>(match.source_frame.index));
    const auto& kf_t =
        target.keyframes.at(static_cast<size_t>(match.target_frame.index));

    const Sim3Transform guess =
        transfer_initial_guess(pp.chosen.initial_guess, sigma_from,
                               pp.sigma_star, pose_chosen, kf_s.pose_local);
    reg.aligned = align_chain(kf_s.cloud, kf_t.cloud, kf_s.pose_local,
                              kf_t.pose_local, pp.sigma_star, guess);
    reg.icp = icp_point_to_point(reg.aligned.star, reg.aligned.plus, params.icp);
    reg.aligned.chain.icp_refinement =
        Sim3Transform::from_se3(reg.icp.transform);
    reg.match_final = final_transform(reg.aligned.chain);

    const Sim3Transform conj = pp.sigma_scaling *
                               Sim3Transform::from_se3(kf_s.pose_local) *
                               pp.sigma_scaling.inverse();
    reg.world_target = conj * reg.match_final *
                       Sim3Transform::from_se3(kf_t.pose_local).inverse();

    std::vector<Vec3> p, q;
    p.reserve(reg.icp.final_pairs.size());
    q.reserve(reg.icp.final_pairs.size());
    for (const auto& [ti, si] : reg.icp.final_pairs) {
      p.push_back(reg.aligned.plus.points[ti]);
      q.push_back(reg.aligned.star.points[si]);
    }
    reg.information =
        icp_information_matrix(p, q, reg.icp.transform, params.cov_epsilon)
            .matrix;
    reg.seconds = detail::seconds_since(t_reg0);
  }
  pp.final_tf = pp.center_registration().match_final;

  // Reference merge cost, measured once and charged to every method.
  const auto t_merge0 = std::chrono::steady_clock::now();
  (void)apply_merge(source, target, pp.sigma_scaling, pp.final_tf,
                    pp.lc.source_frame.index, pp.lc.target_frame.index);
  pp.t_merge = detail::seconds_since(t_merge0);
  return pp;
}

enum class MergeMethod {
  LoopBox,
  PcrProDirect,
  PgoStraight,
  PgoFullyConnected,
  PgoTopMatches,
};

inline const char* to_string(MergeMethod m) {
  switch (m) {
    case MergeMethod::LoopBox: return "LoopBox";
    case MergeMethod::PcrProDirect: return "PcrProDirect";
    case MergeMethod::PgoStraight: return "PgoStraight";
    case MergeMethod::PgoFullyConnected: return "PgoFullyConnected";
    case MergeMethod::PgoTopMatches: return "PgoTopMatches";
  }
  return "?";
}

inline std::optional<MergeMethod> merge_method_from_string(
    const std::string& s) {
  for (const MergeMethod m :
       {MergeMethod::LoopBox, MergeMethod::PcrProDirect,
        MergeMethod::PgoStraight, MergeMethod::PgoFullyConnected,
        MergeMethod::PgoTopMatches})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct MethodRun {
  MergeMethod method = MergeMethod::LoopBox;
  MergedMap map;
  double wall_seconds = 0.0;  // pipeline stages only, shared stages included
  double sigma_used = 1.0;
};

// Applies one merge method on top of the shared pipeline products.
inline MethodRun run_method(const PairPipeline& pp, const AgentTrack& source,
                            const AgentTrack& target, MergeMethod method,
                            const PipelineParams& params) {
  MethodRun run;
  run.method = method;
  const int i = pp.lc.source_frame.index;
  const int j = pp.lc.target_frame.index;
  const auto& a_i = source.keyframes.at(static_cast<size_t>(i)).pose_local;
  const auto& b_j = target.keyframes.at(static_cast<size_t>(j)).pose_local;

  switch (method) {
    case MergeMethod::LoopBox: {
      run.sigma_used = pp.sigma_star;
      run.map = apply_merge(source, target, pp.sigma_scaling, pp.final_tf, i, j);
      run.wall_seconds =
          pp.t_scale + pp.center_registration().seconds + pp.t_merge;
      break;
    }
    case MergeMethod::PcrProDirect: {
      // Center match only, closed-form alignment, no ICP refinement.
      const auto& center = pp.estimates[1];
      run.sigma_used = center.sigma_z;
      const Sim3Transform scaling = Sim3Transform::from_scale(center.sigma_z);
      const Sim3Transform fin = center.initial_guess *
                                Sim3Transform::from_se3(a_i.inverse()) *
                                Sim3Transform::from_se3(b_j);
      run.map = apply_merge(source, target, scaling, fin, i, j);
      run.wall_seconds = pp.t_scale + pp.t_merge;
      break;
    }
    case MergeMethod::PgoStraight:
    case MergeMethod::PgoFullyConnected:
    case MergeMethod::PgoTopMatches: {
      const auto t0 = std::chrono::steady_clock::now();
      const PgoConfiguration config =
          method == MergeMethod::PgoStraight ? PgoConfiguration::Straight
          : method == MergeMethod::PgoFullyConnected
              ? PgoConfiguration::FullyConnected
              : PgoConfiguration::TopMatches;
      std::array<MatchEstimate, 3> est;
      for (int z = -1; z <= 1; ++z) {
        auto& e = est[static_cast<size_t>(z + 1)];
        e.z_offset = z;
        e.gamma = pp.triple.at_offset(z).gamma;
        e.world_target = pp.registrations[static_cast<size_t>(z + 1)].world_target;
        e.information = pp.registrations[static_cast<size_t>(z + 1)].information;
      }
      PoseGraph graph = build_graph(config, pp.triple, est, source, target,
                                    pp.sigma_star, params.odometry_information);
      const PgoResult opt = optimize(graph, params.pgo);
      // Read the merged relative transform off the middle S2 / T2 pair,
      // anchored at the original scaled source pose.
      const auto& x_s2 = opt.graph.nodes.at(pp.lc.source_frame);
      const auto& x_t2 = opt.graph.nodes.at(pp.lc.target_frame);
      const Sim3Transform anchor = pp.sigma_scaling *
                                   Sim3Transform::from_se3(a_i) *
                                   pp.sigma_scaling.inverse();
      const Sim3Transform w_target =
          anchor * (x_s2.inverse() * x_t2) *
          Sim3Transform::from_se3(b_j).inverse();
      const double pgo_seconds = detail::seconds_since(t0);
      run.sigma_used = pp.sigma_star;
      run.map = build_merged_map({&source, &target},
                                 {pp.sigma_scaling, w_target});
      double reg_seconds = 0.0;
      for (const auto& reg : pp.registrations) reg_seconds += reg.seconds;
      run.wall_seconds = pp.t_scale + reg_seconds + pgo_seconds + pp.t_merge;
      break;
    }
  }
  return run;
}

// Ground-truth global trajectory of every keyframe, concatenated in the
// same order a merged map lists them.
inline Trajectory ground_truth_trajectory(
    const std::vector<const AgentTrack*>& tracks) {
  Trajectory out;
  for (const auto* t : tracks)
    for (const auto& kf : t->keyframes) out.push_back(kf.pose_gt_global);
  return out;
}

inline Trajectory merged_trajectory(const MergedMap& map) {
  Trajectory out;
  out.reserve(map.keyframes.size());
  for (const auto& kf : map.keyframes) out.push_back(kf.pose_merged.se3());
  return out;
}

inline double trajectory_extent(const Trajectory& t) {
  Aabb box;
  for (const auto& pose : t) box.extend(pose.translation);
  return box.diagonal();
}

struct ComparisonRow {
  MergeMethod method = MergeMethod::LoopBox;
  double rmse = 0.0;
  double wall_time_seconds = 0.0;
  double scale_error_percent = 0.0;
  std::string error;  // non-empty when the method failed
};

// Runs the requested methods (all four baselines plus LoopBox by default)
// on identical pipeline products, reporting RMSE against ground truth and
// per-method wall time. Per-method failures are recorded, not fatal.
inline std::vector<ComparisonRow> compare_configurations(
    const Scenario& scenario, const PairPipeline& pp,
    const std::vector<MergeMethod>& methods, const PipelineParams& params) {
  const auto& source = scenario.track(pp.source_id);
  const auto& target = scenario.track(pp.target_id);
  const Trajectory gt = ground_truth_trajectory({&source, &target});
  const double sigma_gt = scenario.gt_scale_ratio(pp.source_id, pp.target_id);

  std::vector<ComparisonRow> rows;
  for (const MergeMethod m : methods) {
    ComparisonRow row;
    row.method = m;
    try {
      const MethodRun run = run_method(pp, source, target, m, params);
      row.rmse =
          metric_rmse(merged_trajectory(run.map), gt, TrajectoryAlignment::Sim3)
              .rmse;
      row.wall_time_seconds = run.wall_seconds;
      row.scale_error_percent =
          100.0 * std::abs(run.sigma_used - sigma_gt) / sigma_gt;
    } catch (const Error& err) {
      row.error = err.what();
    }
    rows.push_back(row);
  }
  return rows;
}

// Loop-closure report record.
inline json loop_report(const PairPipeline& pp) {
  json per_pair = json::array();
  for (int z = -1; z <= 1; ++z) {
    const auto& m = pp.triple.at_offset(z);
    per_pair.push_back({{"z", z},
                        {"source_index", m.source_frame.index},
                        {"target_index", m.target_frame.index},
                        {"gamma", m.gamma}});
  }
  return json{{"source_agent", pp.source_id},
              {"target_agent", pp.target_id},
              {"source_index", pp.lc.source_frame.index},
              {"target_index", pp.lc.target_frame.index},
              {"gamma", pp.lc.gamma},
              {"verdict", to_string(pp.verdict)},
              {"pairing_mode", to_string(pp.triple.pairing_mode)},
              {"pairs", per_pair}};
}

// Scale-estimation report record.
inline json scale_report(const PairPipeline& pp) {
  json per_z = json::array();
  for (int z = -1; z <= 1; ++z) {
    const auto& e = pp.estimates[static_cast<size_t>(z + 1)];
    per_z.push_back(
        {{"z", z}, {"sigma", e.sigma_z}, {"gamma", e.gamma_z}});
  }
  const char* branch = pp.fallback_center ? "fallback_center"
                       : pp.chosen.branch == ScaleBranch::CenterLowOverlap
                           ? "center_low_overlap"
                           : "pair_accepted";
  return json{{"estimates", per_z},
              {"r_vol", pp.r_vol},
              {"branch", branch},
              {"sigma_star", pp.sigma_star},
              {"delta_star", pp.chosen.delta_star},
              {"gamma_star", pp.chosen.gamma_star},
              {"chosen_z", pp.chosen.chosen_z}};
}

}  // namespace loopbox
