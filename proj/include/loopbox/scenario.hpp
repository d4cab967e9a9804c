// Synthetic multi-agent scenario generation.
//
// Worlds are metric and z-up; agents move in the z = camera_height plane.
// Each agent's own map is expressed in its anchor frame (first camera pose)
// with every translation divided by the agent's local_scale — the monocular
// gauge freedom the rest of the pipeline has to resolve.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/point_cloud.hpp"

namespace loopbox {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

struct LandmarkObs {
  std::int64_t landmark_id = 0;
  Vec3 position_cam = Vec3::Zero();  // agent-local units, positive depth
  Eigen::VectorXd descriptor;
};

struct Keyframe {
  FrameId frame;
  SE3Transform pose_local;  // camera -> agent world frame, agent-local units
  SE3Transform pose_gt_global;  // camera -> metric global frame (instrumentation)
  std::vector<LandmarkObs> landmarks_obs;
  PointCloud cloud;  // camera frame, agent-local units
};

struct AgentTrack {
  std::string agent_id;
  std::vector<Keyframe> keyframes;
  double local_scale = 1.0;
};

enum class ScenarioState {
  SameDirManyLC,
  SameDirSingleLC,
  OppositeDirManyLC,
  OppositeDirSingleLC,
};

inline const char* to_string(ScenarioState s) {
  switch (s) {
    case ScenarioState::SameDirManyLC: return "same_dir_many_lc";
    case ScenarioState::SameDirSingleLC: return "same_dir_single_lc";
    case ScenarioState::OppositeDirManyLC: return "opposite_dir_many_lc";
    case ScenarioState::OppositeDirSingleLC: return "opposite_dir_single_lc";
  }
  return "?";
}

inline std::optional<ScenarioState> scenario_state_from_string(
    const std::string& s) {
  if (s == "same_dir_many_lc" || s == "a") return ScenarioState::SameDirManyLC;
  if (s == "same_dir_single_lc" || s == "b")
    return ScenarioState::SameDirSingleLC;
  if (s == "opposite_dir_many_lc" || s == "c")
    return ScenarioState::OppositeDirManyLC;
  if (s == "opposite_dir_single_lc" || s == "d")
    return ScenarioState::OppositeDirSingleLC;
  return std::nullopt;
}

// Inclusive keyframe index ranges where two agents co-observe landmarks.
struct CovisibleWindow {
  std::string agent_a, agent_b;
  int a_begin = 0, a_end = -1;
  int b_begin = 0, b_end = -1;
};

struct Scenario {
  ScenarioState state = ScenarioState::SameDirSingleLC;
  std::uint64_t rng_seed = 0;
  std::vector<AgentTrack> agents;
  std::vector<Vec3> landmarks;  // metric world frame
  std::map<std::string, Sim3Transform> ground_truth;  // agent world -> global
  std::vector<CovisibleWindow> windows;

  const AgentTrack& track(const std::string& id) const {
    for (const auto& a : agents)
      if (a.agent_id == id) return a;
    throw Error("unknown agent " + id);
  }

  const CovisibleWindow* window(const std::string& a,
                                const std::string& b) const {
    for (const auto& w : windows)
      if ((w.agent_a == a && w.agent_b == b) ||
          (w.agent_a == b && w.agent_b == a))
        return &w;
    return nullptr;
  }

  // Ground-truth scale ratio sigma* for merging source onto target.
  double gt_scale_ratio(const std::string& source,
                        const std::string& target) const {
    return ground_truth.at(source).scale / ground_truth.at(target).scale;
  }
};

struct ScenarioConfig {
  int keyframes_per_agent = 60;
  double keyframe_spacing = 0.5;
  int window_keyframes = 9;
  double lateral_offset = 0.25;  // target corridor offset inside the window
  double approach_distance = 7.0;
  double visibility_radius = 3.5;
  double min_depth = 0.1;
  double fov_tan_half = 1.19;  // ~100 degrees
  double camera_height = 1.2;
  int descriptor_dim = 16;
  int corridor_landmarks = 170;
  int window_landmarks = 90;
  int leg_landmarks = 70;
  int cloud_points = 240;
  int window_min_shared = 8;
  std::vector<double> agent_scales{1.0, 1.0};

  // Noise. Odometry sigma is a fraction of the step length, per step.
  double odom_sigma_t_frac = 0.005;
  double odom_sigma_r = 0.002;
  double descriptor_noise = 0.04;
  double obs_noise = 0.004;   // metric, camera-frame landmark positions
  double cloud_noise = 0.008;  // metric

  ScenarioConfig with_zero_noise() const {
    ScenarioConfig c = *this;
    c.odom_sigma_t_frac = 0.0;
    c.odom_sigma_r = 0.0;
    c.descriptor_noise = 0.0;
    c.obs_noise = 0.0;
    c.cloud_noise = 0.0;
    return c;
  }

  ScenarioConfig with_scales(std::vector<double> scales) const {
    ScenarioConfig c = *this;
    c.agent_scales = std::move(scales);
    return c;
  }
};

// Cumulative Gaussian perturbation of the relative pose chain. Zero sigmas
// return the track unchanged.
inline AgentTrack perturb_odometry(const AgentTrack& track, double sigma_t,
                                   double sigma_r, std::uint64_t seed) {
  if (sigma_t < 0 || sigma_r < 0)
    throw ConfigError("odometry noise sigmas must be >= 0");
  if (sigma_t == 0.0 && sigma_r == 0.0) return track;
  AgentTrack out = track;
  std::mt19937_64 rng(mix_seed(seed, 0x0d0a37a1u));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (size_t k = 1; k < out.keyframes.size(); ++k) {
    const SE3Transform rel =
        track.keyframes[k - 1].pose_local.inverse() *
        track.keyframes[k].pose_local;
    const Vec3 dt(sigma_t * gauss(rng), sigma_t * gauss(rng),
                  sigma_t * gauss(rng));
    const Vec3 dr(sigma_r * gauss(rng), sigma_r * gauss(rng),
                  sigma_r * gauss(rng));
    const SE3Transform noisy = rel * SE3Transform{Rotation::from_axis_angle(dr), dt};
    out.keyframes[k].pose_local = out.keyframes[k - 1].pose_local * noisy;
  }
  return out;
}

namespace detail {

struct WallSegment {
  Vec3 a, b;      // base line at z = 0
  double height = 2.6;
};

struct LandmarkField {
  Vec3 a, b;  // scatter along this segment
  int count = 0;
  double lateral = 3.2;
};

struct PathSpec {
  std::string id;
  std::vector<Vec3> waypoints;
  double scale = 1.0;
};

struct WorldSpec {
  std::vector<PathSpec> paths;
  std::vector<WallSegment> walls;
  std::vector<LandmarkField> fields;
};

inline Rotation heading_rotation(const Vec3& forward_in) {
  Vec3 f = forward_in;
  f.z() = 0.0;
  const double n = f.norm();
  f = n > 1e-12 ? Vec3(f / n) : Vec3(1, 0, 0);
  const Vec3 right(f.y(), -f.x(), 0.0);
  const Vec3 down(0, 0, -1);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = f;
  return Rotation::project(r);
}

// Sample camera centers every `spacing` of arc length along the polyline.
inline void sample_polyline(const std::vector<Vec3>& wp, double spacing,
                            std::vector<Vec3>& centers,
                            std::vector<Vec3>& headings) {
  double next = 0.0;  // arc distance of the next sample within the segment
  for (size_t s = 0; s + 1 < wp.size(); ++s) {
    const Vec3 a = wp[s], b = wp[s + 1];
    const double len = (b - a).norm();
    if (len < 1e-12) continue;
    const Vec3 dir = (b - a) / len;
    while (next < len) {
      centers.push_back(a + next * dir);
      headings.push_back(dir);
      next += spacing;
    }
    next -= len;
  }
}

inline bool visible(const SE3Transform& cam_pose, const Vec3& world_pt,
                    const ScenarioConfig& cfg, Vec3* cam_pt) {
  const Vec3 x = cam_pose.inverse().apply(world_pt);
  if (x.z() < cfg.min_depth) return false;
  if (x.norm() > cfg.visibility_radius) return false;
  if (std::hypot(x.x(), x.y()) > x.z() * cfg.fov_tan_half) return false;
  if (cam_pt) *cam_pt = x;
  return true;
}

inline Eigen::VectorXd base_descriptor(std::int64_t id, int dim) {
  std::mt19937_64 rng(splitmix64(static_cast<std::uint64_t>(id) * 0x9e3779b1u + 17u));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd d(dim);
  for (int i = 0; i < dim; ++i) d[i] = gauss(rng);
  d.normalize();
  return d;
}

}  // namespace detail

// Generates a scenario from explicit world geometry. The four Fig-2 style
// states and the chained / disjoint layouts below all funnel through here.
inline Scenario generate_from_world(const detail::WorldSpec& world,
                                    ScenarioState state,
                                    const ScenarioConfig& cfg,
                                    std::uint64_t seed) {
  if (cfg.window_keyframes < 3)
    throw ConfigError("covisible window must span at least 3 keyframes");
  if (cfg.odom_sigma_t_frac < 0 || cfg.descriptor_noise < 0 ||
      cfg.obs_noise < 0 || cfg.cloud_noise < 0)
    throw ConfigError("noise levels must be >= 0");

  Scenario sc;
  sc.state = state;
  sc.rng_seed = seed;

  // Landmarks.
  std::mt19937_64 lm_rng(mix_seed(seed, 0x11aa22bbu));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (const auto& field : world.fields) {
    const Vec3 dir = field.b - field.a;
    const double len = dir.norm();
    const Vec3 unit = len > 1e-12 ? Vec3(dir / len) : Vec3(1, 0, 0);
    const Vec3 perp(unit.y(), -unit.x(), 0.0);
    for (int i = 0; i < field.count; ++i) {
      const double along = u01(lm_rng) * len;
      const double side = u01(lm_rng) < 0.5 ? -1.0 : 1.0;
      const double lat = side * (0.45 + u01(lm_rng) * (field.lateral - 0.45));
      const double height = 0.3 + u01(lm_rng) * 2.3;
      Vec3 p = field.a + along * unit + lat * perp;
      p.z() = height;
      sc.landmarks.push_back(p);
    }
  }
  if (sc.landmarks.empty()) throw ConfigError("no landmarks in world");

  // Per-agent tracks.
  for (size_t ai = 0; ai < world.paths.size(); ++ai) {
    const auto& path = world.paths[ai];
    if (!(path.scale > 0)) throw ConfigError("agent scale must be positive");

    std::vector<Vec3> centers, headings;
    detail::sample_polyline(path.waypoints, cfg.keyframe_spacing, centers,
                            headings);
    if (centers.size() < 4)
      throw ConfigError("path too short for agent " + path.id);

    AgentTrack track;
    track.agent_id = path.id;
    track.local_scale = path.scale;

    std::vector<SE3Transform> gt_poses(centers.size());
    for (size_t k = 0; k < centers.size(); ++k)
      gt_poses[k] = {detail::heading_rotation(headings[k]), centers[k]};

    sc.ground_truth[path.id] = Sim3Transform{
        path.scale, gt_poses[0].rotation, gt_poses[0].translation};

    std::mt19937_64 obs_rng(mix_seed(seed, 0x5151u + 31u * ai));
    std::normal_distribution<double> gauss(0.0, 1.0);

    const SE3Transform anchor_inv = gt_poses[0].inverse();
    for (size_t k = 0; k < centers.size(); ++k) {
      Keyframe kf;
      kf.frame = FrameId{path.id, static_cast<std::int32_t>(k)};
      kf.pose_gt_global = gt_poses[k];
      const SE3Transform in_anchor = anchor_inv * gt_poses[k];
      kf.pose_local = {in_anchor.rotation,
                       in_anchor.translation / path.scale};

      // Landmark observations from the ground-truth camera pose.
      for (size_t li = 0; li < sc.landmarks.size(); ++li) {
        Vec3 cam_pt;
        if (!detail::visible(gt_poses[k], sc.landmarks[li], cfg, &cam_pt))
          continue;
        LandmarkObs obs;
        obs.landmark_id = static_cast<std::int64_t>(li);
        if (cfg.obs_noise > 0)
          cam_pt += cfg.obs_noise *
                    Vec3(gauss(obs_rng), gauss(obs_rng), gauss(obs_rng));
        obs.position_cam = cam_pt / path.scale;
        obs.descriptor =
            detail::base_descriptor(obs.landmark_id, cfg.descriptor_dim);
        if (cfg.descriptor_noise > 0)
          for (int d = 0; d < cfg.descriptor_dim; ++d)
            obs.descriptor[d] += cfg.descriptor_noise * gauss(obs_rng);
        kf.landmarks_obs.push_back(std::move(obs));
      }

      // Local point cloud: ground plane, corridor walls, landmark clusters.
      std::mt19937_64 cloud_rng(
          mix_seed(seed, 0xc10cd5u + 131u * ai + 7919u * k));
      std::normal_distribution<double> cgauss(0.0, 1.0);
      std::uniform_real_distribution<double> cu(0.0, 1.0);
      std::vector<const detail::WallSegment*> near_walls;
      for (const auto& w : world.walls) {
        const Vec3 mid = 0.5 * (w.a + w.b);
        const double seg_len = (w.b - w.a).norm();
        if ((mid - centers[k]).norm() <
            cfg.visibility_radius + 0.5 * seg_len + 1.0)
          near_walls.push_back(&w);
      }
      auto& pts = kf.cloud.points;
      pts.reserve(static_cast<size_t>(cfg.cloud_points));
      int guard = 0;
      while (static_cast<int>(pts.size()) < cfg.cloud_points &&
             guard++ < cfg.cloud_points * 30) {
        const double pick = cu(cloud_rng);
        Vec3 world_pt;
        if (pick < 0.35 && !near_walls.empty()) {
          const auto& w = *near_walls[static_cast<size_t>(
              cu(cloud_rng) * static_cast<double>(near_walls.size()))];
          world_pt = w.a + cu(cloud_rng) * (w.b - w.a);
          world_pt.z() = cu(cloud_rng) * w.height;
        } else if (pick < 0.72) {
          const double d =
              1.05 + cu(cloud_rng) * (cfg.visibility_radius - 1.1);
          const double lat = (cu(cloud_rng) * 2.0 - 1.0) * d * 0.8;
          const Vec3 fwd = headings[k];
          const Vec3 right(fwd.y(), -fwd.x(), 0.0);
          world_pt = centers[k] + d * fwd + lat * right;
          world_pt.z() = 0.0;
        } else {
          const auto& lm = sc.landmarks[static_cast<size_t>(
              cu(cloud_rng) * static_cast<double>(sc.landmarks.size()))];
          world_pt = lm + 0.12 * Vec3(cgauss(cloud_rng), cgauss(cloud_rng),
                                      cgauss(cloud_rng));
        }
        Vec3 cam_pt;
        if (!detail::visible(gt_poses[k], world_pt, cfg, &cam_pt)) continue;
        if (cfg.cloud_noise > 0)
          cam_pt += cfg.cloud_noise * Vec3(cgauss(cloud_rng),
                                           cgauss(cloud_rng),
                                           cgauss(cloud_rng));
        pts.push_back(cam_pt / path.scale);
      }

      track.keyframes.push_back(std::move(kf));
    }

    const double step_local = cfg.keyframe_spacing / path.scale;
    track = perturb_odometry(track, cfg.odom_sigma_t_frac * step_local,
                             cfg.odom_sigma_r,
                             mix_seed(seed, 0x0d0u + 997u * ai));
    sc.agents.push_back(std::move(track));
  }

  // Covisibility record, from shared landmark ids.
  std::vector<std::vector<std::vector<std::int64_t>>> ids(sc.agents.size());
  for (size_t a = 0; a < sc.agents.size(); ++a)
    for (const auto& kf : sc.agents[a].keyframes) {
      std::vector<std::int64_t> v;
      v.reserve(kf.landmarks_obs.size());
      for (const auto& o : kf.landmarks_obs) v.push_back(o.landmark_id);
      std::sort(v.begin(), v.end());
      ids[a].push_back(std::move(v));
    }
  // A pair of keyframes is covisible once it shares 3+ ids; a window is
  // recorded only when its best pair reaches window_min_shared.
  for (size_t a = 0; a < sc.agents.size(); ++a)
    for (size_t b = a + 1; b < sc.agents.size(); ++b) {
      CovisibleWindow w;
      w.agent_a = sc.agents[a].agent_id;
      w.agent_b = sc.agents[b].agent_id;
      int a_lo = INT32_MAX, a_hi = -1, b_lo = INT32_MAX, b_hi = -1;
      int best_shared = 0;
      std::vector<std::int64_t> shared;
      for (size_t i = 0; i < ids[a].size(); ++i)
        for (size_t j = 0; j < ids[b].size(); ++j) {
          shared.clear();
          std::set_intersection(ids[a][i].begin(), ids[a][i].end(),
                                ids[b][j].begin(), ids[b][j].end(),
                                std::back_inserter(shared));
          best_shared = std::max(best_shared, static_cast<int>(shared.size()));
          if (static_cast<int>(shared.size()) >= 3) {
            a_lo = std::min(a_lo, static_cast<int>(i));
            a_hi = std::max(a_hi, static_cast<int>(i));
            b_lo = std::min(b_lo, static_cast<int>(j));
            b_hi = std::max(b_hi, static_cast<int>(j));
          }
        }
      if (a_hi >= 0 && best_shared >= cfg.window_min_shared) {
        w.a_begin = a_lo;
        w.a_end = a_hi;
        w.b_begin = b_lo;
        w.b_end = b_hi;
        sc.windows.push_back(w);
      }
    }

  return sc;
}

// The four key challenging states, two agents "A" (source) and "B" (target).
inline Scenario generate(ScenarioState state, const ScenarioConfig& cfg,
                         std::uint64_t seed) {
  if (cfg.agent_scales.size() != 2)
    throw ConfigError("two-agent states need exactly 2 agent scales");

  const double h = cfg.camera_height;
  const double len =
      static_cast<double>(cfg.keyframes_per_agent - 1) * cfg.keyframe_spacing;
  const double mid = 0.5 * len;
  const double wlen =
      static_cast<double>(cfg.window_keyframes) * cfg.keyframe_spacing;
  const double x0 = mid - 0.5 * wlen;
  const double x1 = mid + 0.5 * wlen;
  const double off = cfg.lateral_offset;
  const double app = cfg.approach_distance;

  detail::WorldSpec world;
  world.paths.push_back(
      {"A", {Vec3(0, 0, h), Vec3(len, 0, h)}, cfg.agent_scales[0]});

  std::vector<Vec3> bwp;
  const bool same_dir = state == ScenarioState::SameDirManyLC ||
                        state == ScenarioState::SameDirSingleLC;
  const bool single = state == ScenarioState::SameDirSingleLC ||
                      state == ScenarioState::OppositeDirSingleLC;
  if (single) {
    bwp = {Vec3(x0 - app, app, h), Vec3(x0, off, h), Vec3(x1, off, h),
           Vec3(x1 + app, app, h)};
  } else {
    bwp = {Vec3(0, off, h), Vec3(len, off, h)};
  }
  if (!same_dir) std::reverse(bwp.begin(), bwp.end());
  world.paths.push_back({"B", bwp, cfg.agent_scales[1]});

  world.walls.push_back(
      {Vec3(-1, -3.5, 0), Vec3(len + 1, -3.5, 0), 2.6});
  world.walls.push_back({Vec3(-1, 3.5, 0), Vec3(len + 1, 3.5, 0), 2.6});

  world.fields.push_back(
      {Vec3(0, 0, h), Vec3(len, 0, h), cfg.corridor_landmarks, 3.2});
  world.fields.push_back(
      {Vec3(x0 - 1.0, 0, h), Vec3(x1 + 1.0, 0, h), cfg.window_landmarks, 2.8});
  if (single) {
    world.fields.push_back({Vec3(x0 - app, app, h), Vec3(x0, off, h),
                            cfg.leg_landmarks, 2.5});
    world.fields.push_back({Vec3(x1, off, h), Vec3(x1 + app, app, h),
                            cfg.leg_landmarks, 2.5});
  }

  Scenario sc = generate_from_world(world, state, cfg, seed);
  if (sc.window("A", "B") == nullptr)
    throw Error("generated scenario has no covisible landmarks");
  return sc;
}

// Three agents in a chain: A<->B share a window, B<->C share another, while
// A and C never meet. Needs 3 entries in agent_scales.
inline Scenario make_three_agent_chain(const ScenarioConfig& cfg,
                                       std::uint64_t seed) {
  if (cfg.agent_scales.size() != 3)
    throw ConfigError("chained scenario needs exactly 3 agent scales");

  const double h = cfg.camera_height;
  const double len =
      static_cast<double>(cfg.keyframes_per_agent - 1) * cfg.keyframe_spacing;
  const double wlen =
      static_cast<double>(cfg.window_keyframes) * cfg.keyframe_spacing;
  const double off = cfg.lateral_offset;
  const double app = cfg.approach_distance;
  const double mid1 = 0.35 * len;
  const double x2 = len + 10.0;
  const double ymid2 = 8.0;

  detail::WorldSpec world;
  world.paths.push_back(
      {"A", {Vec3(0, 0, h), Vec3(len, 0, h)}, cfg.agent_scales[0]});
  world.paths.push_back({"B",
                         {Vec3(mid1 - 0.5 * wlen - app, app, h),
                          Vec3(mid1 - 0.5 * wlen, off, h),
                          Vec3(mid1 + 0.5 * wlen, off, h),
                          Vec3(mid1 + 0.5 * wlen + app, app, h),
                          Vec3(x2 - app, ymid2 - 0.5 * wlen - app, h),
                          Vec3(x2 + off, ymid2 - 0.5 * wlen, h),
                          Vec3(x2 + off, ymid2 + 0.5 * wlen, h)},
                         cfg.agent_scales[1]});
  world.paths.push_back({"C",
                         {Vec3(x2, ymid2 - 0.5 * wlen - 4.0, h),
                          Vec3(x2, ymid2 + 0.5 * wlen + 4.0, h)},
                         cfg.agent_scales[2]});

  world.walls.push_back({Vec3(-1, -3.5, 0), Vec3(len + 1, -3.5, 0), 2.6});
  world.walls.push_back({Vec3(-1, 3.5, 0), Vec3(len + 1, 3.5, 0), 2.6});
  world.walls.push_back({Vec3(x2 - 3.5, ymid2 - 8.0, 0),
                         Vec3(x2 - 3.5, ymid2 + 8.0, 0), 2.6});
  world.walls.push_back({Vec3(x2 + 3.5, ymid2 - 8.0, 0),
                         Vec3(x2 + 3.5, ymid2 + 8.0, 0), 2.6});

  world.fields.push_back(
      {Vec3(0, 0, h), Vec3(len, 0, h), cfg.corridor_landmarks, 3.2});
  world.fields.push_back({Vec3(mid1 - 0.5 * wlen - 1, 0, h),
                          Vec3(mid1 + 0.5 * wlen + 1, 0, h),
                          cfg.window_landmarks, 2.8});
  world.fields.push_back({Vec3(x2, ymid2 - 8.0, h), Vec3(x2, ymid2 + 8.0, h),
                          cfg.corridor_landmarks, 3.2});
  world.fields.push_back({Vec3(x2, ymid2 - 0.5 * wlen - 1, h),
                          Vec3(x2, ymid2 + 0.5 * wlen + 1, h),
                          cfg.window_landmarks, 2.8});
  world.fields.push_back({Vec3(mid1 + 0.5 * wlen, off, h),
                          Vec3(x2 - app, ymid2 - 0.5 * wlen - app, h),
                          cfg.leg_landmarks, 2.5});

  Scenario sc =
      generate_from_world(world, ScenarioState::SameDirSingleLC, cfg, seed);
  if (!sc.window("A", "B") || !sc.window("B", "C"))
    throw Error("chained scenario is missing a covisible window");
  if (sc.window("A", "C"))
    throw Error("chained scenario unexpectedly links A and C");
  return sc;
}

// Two agents exploring unrelated places; no loop closure exists.
inline Scenario make_disjoint(const ScenarioConfig& cfg, std::uint64_t seed) {
  const double h = cfg.camera_height;
  const double len =
      static_cast<double>(cfg.keyframes_per_agent - 1) * cfg.keyframe_spacing;
  detail::WorldSpec world;
  world.paths.push_back(
      {"A", {Vec3(0, 0, h), Vec3(len, 0, h)}, cfg.agent_scales.at(0)});
  world.paths.push_back(
      {"B", {Vec3(0, 200, h), Vec3(len, 200, h)}, cfg.agent_scales.at(1)});
  world.fields.push_back(
      {Vec3(0, 0, h), Vec3(len, 0, h), cfg.corridor_landmarks, 3.2});
  world.fields.push_back(
      {Vec3(0, 200, h), Vec3(len, 200, h), cfg.corridor_landmarks, 3.2});
  world.walls.push_back({Vec3(-1, -3.5, 0), Vec3(len + 1, -3.5, 0), 2.6});
  world.walls.push_back({Vec3(-1, 196.5, 0), Vec3(len + 1, 196.5, 0), 2.6});
  return generate_from_world(world, ScenarioState::SameDirSingleLC, cfg, seed);
}

}  // namespace loopbox
