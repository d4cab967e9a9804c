// Pose-graph baseline: the straight / fully-connected / top-matches edge
// configurations over the three adjacent matches, optimized by
// Levenberg-Marquardt over information-weighted relative-pose residuals.
// Scales are resolved before graph construction, so the optimization runs
// on the SE(3) part of each node.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/loop_detect.hpp"
#include "loopbox/registration.hpp"
#include "loopbox/scenario.hpp"

namespace loopbox {

struct Edge {
  FrameId from;
  FrameId to;
  Sim3Transform measurement;  // from-frame -> to-frame relative pose
  Mat6 information = Mat6::Identity();
};

struct PoseGraph {
  std::map<FrameId, Sim3Transform> nodes;
  std::vector<Edge> edges;
  std::optional<FrameId> gauge;
};

enum class PgoConfiguration { Straight, FullyConnected, TopMatches };

inline const char* to_string(PgoConfiguration c) {
  switch (c) {
    case PgoConfiguration::Straight: return "straight";
    case PgoConfiguration::FullyConnected: return "fully_connected";
    case PgoConfiguration::TopMatches: return "top_matches";
  }
  return "?";
}

// Registration products of one adjacent match, as needed for graph edges.
struct MatchEstimate {
  int z_offset = 0;
  int gamma = 0;
  Sim3Transform world_target;  // target world -> merged frame, this match
  Mat6 information = Mat6::Identity();
};

// Builds the configured graph over the six triple keyframes. Odometry edges
// run along each track; inter-agent edges carry the per-match registration
// results. Node initial values put the scaled source poses and the
// center-match-merged target poses in one frame.
inline PoseGraph build_graph(PgoConfiguration config, const MatchTriple& triple,
                             const std::array<MatchEstimate, 3>& estimates,
                             const AgentTrack& source, const AgentTrack& target,
                             double sigma_star,
                             const Mat6& odometry_information) {
  for (int z = -1; z <= 1; ++z)
    if (estimates[static_cast<size_t>(z + 1)].z_offset != z)
      throw MissingEstimate("estimate for z=" + std::to_string(z) +
                            " is missing");

  PoseGraph g;
  std::array<FrameId, 3> s_id, t_id;
  std::array<Sim3Transform, 3> s_init, t_init;
  for (int z = -1; z <= 1; ++z) {
    const auto k = static_cast<size_t>(z + 1);
    const auto& match = triple.at_offset(z);
    const auto& est = estimates[k];
    s_id[k] = match.source_frame;
    t_id[k] = match.target_frame;
    const auto& a_pose =
        source.keyframes.at(static_cast<size_t>(match.source_frame.index))
            .pose_local;
    const auto& b_pose =
        target.keyframes.at(static_cast<size_t>(match.target_frame.index))
            .pose_local;
    s_init[k] = Sim3Transform::from_se3(scale_translation(a_pose, sigma_star));
    // All target nodes start from the center match's merge.
    const Sim3Transform merged =
        estimates[1].world_target * Sim3Transform::from_se3(b_pose);
    t_init[k] = Sim3Transform{1.0, merged.rotation, merged.translation};
    (void)est;
  }
  for (size_t k = 0; k < 3; ++k) {
    g.nodes[s_id[k]] = s_init[k];
    g.nodes[t_id[k]] = t_init[k];
  }
  g.gauge = s_id[0];

  auto relative = [](const Sim3Transform& a, const Sim3Transform& b) {
    return a.inverse() * b;
  };

  // Odometry edges in increasing keyframe order along each track.
  std::array<size_t, 3> t_order{0, 1, 2};
  std::sort(t_order.begin(), t_order.end(), [&](size_t a, size_t b) {
    return t_id[a].index < t_id[b].index;
  });
  for (size_t k = 0; k + 1 < 3; ++k) {
    const auto rel_s = scale_translation(
        source.keyframes.at(static_cast<size_t>(s_id[k].index))
                .pose_local.inverse() *
            source.keyframes.at(static_cast<size_t>(s_id[k + 1].index))
                .pose_local,
        sigma_star);
    g.edges.push_back({s_id[k], s_id[k + 1], Sim3Transform::from_se3(rel_s),
                       odometry_information});
    const auto ta = t_order[k], tb = t_order[k + 1];
    const auto rel_t =
        target.keyframes.at(static_cast<size_t>(t_id[ta].index))
            .pose_local.inverse() *
        target.keyframes.at(static_cast<size_t>(t_id[tb].index)).pose_local;
    g.edges.push_back({t_id[ta], t_id[tb], Sim3Transform::from_se3(rel_t),
                       odometry_information});
  }

  auto inter_edge = [&](size_t s_k, size_t t_k) {
    const auto& est = estimates[t_k];
    const auto& b_pose =
        target.keyframes.at(static_cast<size_t>(t_id[t_k].index)).pose_local;
    Sim3Transform t_meas = est.world_target * Sim3Transform::from_se3(b_pose);
    t_meas = Sim3Transform{1.0, t_meas.rotation, t_meas.translation};
    g.edges.push_back(
        {s_id[s_k], t_id[t_k], relative(s_init[s_k], t_meas), est.information});
  };

  switch (config) {
    case PgoConfiguration::Straight:
      for (size_t k = 0; k < 3; ++k) inter_edge(k, k);
      break;
    case PgoConfiguration::FullyConnected:
      for (size_t k = 0; k < 3; ++k) inter_edge(k, k);
      // Cross pairs (T1,S2), (T2,S1), (T2,S3), (T3,S2).
      inter_edge(1, 0);
      inter_edge(0, 1);
      inter_edge(2, 1);
      inter_edge(1, 2);
      break;
    case PgoConfiguration::TopMatches: {
      size_t best = 0;
      for (size_t k = 1; k < 3; ++k)
        if (estimates[k].gamma > estimates[best].gamma) best = k;
      inter_edge(best, best);
      break;
    }
  }
  return g;
}

struct PgoParams {
  int max_iterations = 100;
  double rel_tolerance = 1e-9;
  double huber_delta = 0.0;  // <= 0 disables the robust kernel
};

namespace detail {

inline Vec6 se3_log(const SE3Transform& t) {
  Vec6 v;
  v.head<3>() = t.translation;
  v.tail<3>() = t.rotation.log();
  return v;
}

inline SE3Transform se3_exp(const Vec6& v) {
  return {Rotation::from_axis_angle(v.tail<3>()), v.head<3>()};
}

inline Vec6 edge_residual(const Edge& e, const Sim3Transform& x_from,
                          const Sim3Transform& x_to) {
  const SE3Transform pred = x_from.se3().inverse() * x_to.se3();
  return se3_log(e.measurement.se3().inverse() * pred);
}

}  // namespace detail

struct PgoResult {
  PoseGraph graph;
  std::vector<double> cost_trace;
  int iterations = 0;
};

// Levenberg-Marquardt over the SE(3) part of every non-gauge node, with
// right-multiplied exponential updates (equivariant under a common left
// transform of all initial values).
inline PgoResult optimize(const PoseGraph& input, const PgoParams& params = {}) {
  if (!input.gauge || !input.nodes.count(*input.gauge))
    throw GaugeUnfixed("pose graph has no gauge node");
  if (input.nodes.size() > 1 && input.edges.empty())
    throw NotConnected("pose graph has no edges");

  // Connectivity.
  std::map<FrameId, FrameId> parent;
  for (const auto& [id, _] : input.nodes) parent[id] = id;
  std::function<FrameId(FrameId)> find = [&](FrameId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : input.edges) {
    if (!input.nodes.count(e.from) || !input.nodes.count(e.to))
      throw Error("edge endpoint missing from node set");
    parent[find(e.from)] = find(e.to);
  }
  const FrameId root = find(*input.gauge);
  for (const auto& [id, _] : input.nodes)
    if (find(id) != root) throw NotConnected("pose graph is not connected");

  PgoResult result;
  result.graph = input;
  auto& nodes = result.graph.nodes;

  std::vector<FrameId> free_ids;
  for (const auto& [id, _] : nodes)
    if (id != *input.gauge) free_ids.push_back(id);
  std::map<FrameId, size_t> slot;
  for (size_t k = 0; k < free_ids.size(); ++k) slot[free_ids[k]] = k;

  const size_t n_res = 6 * input.edges.size();
  const size_t n_var = 6 * free_ids.size();

  auto weight_residual = [&](const Edge& e, Vec6 r) {
    Eigen::LLT<Mat6> llt(e.information);
    Vec6 w = llt.matrixL().transpose() * r;
    if (params.huber_delta > 0) {
      const double norm = w.norm();
      if (norm > params.huber_delta)
        w *= std::sqrt(2.0 * params.huber_delta * norm -
                       params.huber_delta * params.huber_delta) /
             norm;
    }
    return w;
  };

  auto residual_vector = [&](const std::map<FrameId, Sim3Transform>& vals) {
    Eigen::VectorXd r(n_res);
    for (size_t k = 0; k < input.edges.size(); ++k) {
      const auto& e = input.edges[k];
      r.segment<6>(static_cast<Eigen::Index>(6 * k)) = weight_residual(
          e, detail::edge_residual(e, vals.at(e.from), vals.at(e.to)));
    }
    return r;
  };

  auto apply_delta = [&](const std::map<FrameId, Sim3Transform>& vals,
                         const Eigen::VectorXd& delta) {
    auto out = vals;
    for (const auto& id : free_ids) {
      const Vec6 d = delta.segment<6>(static_cast<Eigen::Index>(6 * slot[id]));
      auto& x = out[id];
      const SE3Transform updated = x.se3() * detail::se3_exp(d);
      x = Sim3Transform{x.scale, updated.rotation, updated.translation};
    }
    return out;
  };

  Eigen::VectorXd r = residual_vector(nodes);
  double cost = r.squaredNorm();
  result.cost_trace.push_back(cost);
  if (n_var == 0) return result;

  double lambda = 1e-6;
  constexpr double kJacStep = 1e-7;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    Eigen::MatrixXd jac(n_res, n_var);
    for (size_t v = 0; v < n_var; ++v) {
      Eigen::VectorXd d = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_var));
      d[static_cast<Eigen::Index>(v)] = kJacStep;
      const Eigen::VectorXd rp = residual_vector(apply_delta(nodes, d));
      d[static_cast<Eigen::Index>(v)] = -kJacStep;
      const Eigen::VectorXd rm = residual_vector(apply_delta(nodes, d));
      jac.col(static_cast<Eigen::Index>(v)) = (rp - rm) / (2.0 * kJacStep);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal().array() += lambda;
      const Eigen::VectorXd delta = lhs.ldlt().solve(-jtr);
      const auto trial = apply_delta(nodes, delta);
      const Eigen::VectorXd rt = residual_vector(trial);
      const double trial_cost = rt.squaredNorm();
      if (trial_cost <= cost) {
        nodes = trial;
        r = rt;
        const double drop = cost - trial_cost;
        cost = trial_cost;
        result.cost_trace.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        result.iterations = iter + 1;
        if (drop <= params.rel_tolerance * std::max(cost, 1e-300))
          return result;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }
  return result;
}

// g2o-style text export. SE(3) vertices use VERTEX_SE3:QUAT; vertices with
// non-unit scale use the VERTEX_SIM3:QUAT extension
// (id tx ty tz qx qy qz qw scale).
inline void write_g2o(std::ostream& os, const PoseGraph& g) {
  std::map<FrameId, int> ids;
  int next = 0;
  os.precision(12);
  for (const auto& [id, pose] : g.nodes) {
    ids[id] = next;
    const auto q = pose.rotation.quaternion();
    const auto& t = pose.translation;
    if (std::abs(pose.scale - 1.0) < 1e-15) {
      os << "VERTEX_SE3:QUAT " << next;
    } else {
      os << "VERTEX_SIM3:QUAT " << next;
    }
    os << " " << t.x() << " " << t.y() << " " << t.z() << " " << q.x() << " "
       << q.y() << " " << q.z() << " " << q.w();
    if (std::abs(pose.scale - 1.0) >= 1e-15) os << " " << pose.scale;
    os << "\n";
    ++next;
  }
  for (const auto& e : g.edges) {
    const auto q = e.measurement.rotation.quaternion();
    const auto& t = e.measurement.translation;
    os << "EDGE_SE3:QUAT " << ids.at(e.from) << " " << ids.at(e.to) << " "
       << t.x() << " " << t.y() << " " << t.z() << " " << q.x() << " " << q.y()
       << " " << q.z() << " " << q.w();
    for (int row = 0; row < 6; ++row)
      for (int col = row; col < 6; ++col) os << " " << e.information(row, col);
    os << "\n";
  }
}

inline PoseGraph read_g2o(std::istream& is) {
  PoseGraph g;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "VERTEX_SE3:QUAT" || tag == "VERTEX_SIM3:QUAT") {
      int id;
      double tx, ty, tz, qx, qy, qz, qw, s = 1.0;
      ls >> id >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
      if (tag == "VERTEX_SIM3:QUAT") ls >> s;
      g.nodes[FrameId{"v", id}] = Sim3Transform{
          s, Rotation::from_quaternion({qw, qx, qy, qz}), Vec3(tx, ty, tz)};
    } else if (tag == "EDGE_SE3:QUAT") {
      int from, to;
      double tx, ty, tz, qx, qy, qz, qw;
      ls >> from >> to >> tx >> ty >> tz >> qx >> qy >> qz >> qw;
      Edge e;
      e.from = FrameId{"v", from};
      e.to = FrameId{"v", to};
      e.measurement = Sim3Transform{
          1.0, Rotation::from_quaternion({qw, qx, qy, qz}), Vec3(tx, ty, tz)};
      for (int row = 0; row < 6; ++row)
        for (int col = row; col < 6; ++col) {
          ls >> e.information(row, col);
          e.information(col, row) = e.information(row, col);
        }
      g.edges.push_back(e);
    }
  }
  return g;
}

}  // namespace loopbox
