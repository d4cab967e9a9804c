// Trajectory evaluation: RMSE after optional SE(3)/Sim(3) alignment plus
// relative pose error statistics over consecutive increments.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "loopbox/alignment.hpp"
#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"

namespace loopbox {

enum class TrajectoryAlignment { None, SE3, Sim3 };

inline const char* to_string(TrajectoryAlignment a) {
  switch (a) {
    case TrajectoryAlignment::None: return "none";
    case TrajectoryAlignment::SE3: return "se3";
    case TrajectoryAlignment::Sim3: return "sim3";
  }
  return "?";
}

struct Stats {
  double mean = 0.0, median = 0.0, max = 0.0;
};

inline Stats make_stats(std::vector<double> v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  s.max = *std::max_element(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  s.median = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
    s.median = 0.5 * (s.median + lo);
  }
  return s;
}

inline double median_of(std::vector<double> v) { return make_stats(std::move(v)).median; }

struct TrajectoryMetric {
  double rmse = 0.0;
  Stats rpe_translation;
  Stats rpe_rotation;  // radians
  TrajectoryAlignment alignment_used = TrajectoryAlignment::None;
};

using Trajectory = std::vector<SE3Transform>;

inline Trajectory trajectory_of(const std::vector<Sim3Transform>& poses) {
  Trajectory t;
  t.reserve(poses.size());
  for (const auto& p : poses) t.push_back(p.se3());
  return t;
}

// RMSE of translational residuals between index-associated poses, after
// optionally removing a fitted rigid / similarity motion from `estimated`.
inline TrajectoryMetric metric_rmse(const Trajectory& estimated,
                                    const Trajectory& reference,
                                    TrajectoryAlignment mode) {
  if (estimated.size() != reference.size())
    throw LengthMismatch("trajectories differ in length: " +
                         std::to_string(estimated.size()) + " vs " +
                         std::to_string(reference.size()));
  if (estimated.empty()) throw LengthMismatch("empty trajectories");

  TrajectoryMetric out;
  out.alignment_used = mode;

  Trajectory est = estimated;
  if (mode != TrajectoryAlignment::None && est.size() >= 3) {
    std::vector<Vec3> src, dst;
    for (size_t k = 0; k < est.size(); ++k) {
      src.push_back(est[k].translation);
      dst.push_back(reference[k].translation);
    }
    const Sim3Transform fit =
        similarity_align(src, dst, mode == TrajectoryAlignment::Sim3);
    for (auto& pose : est)
      pose = {fit.rotation * pose.rotation, fit.apply(pose.translation)};
  }

  double acc = 0.0;
  for (size_t k = 0; k < est.size(); ++k)
    acc += (est[k].translation - reference[k].translation).squaredNorm();
  out.rmse = std::sqrt(acc / static_cast<double>(est.size()));

  std::vector<double> dt, dr;
  for (size_t k = 0; k + 1 < est.size(); ++k) {
    const SE3Transform rel_ref = reference[k].inverse() * reference[k + 1];
    const SE3Transform rel_est = est[k].inverse() * est[k + 1];
    const SE3Transform err = rel_ref.inverse() * rel_est;
    dt.push_back(err.translation.norm());
    dr.push_back(err.rotation.angle());
  }
  out.rpe_translation = make_stats(std::move(dt));
  out.rpe_rotation = make_stats(std::move(dr));
  return out;
}

inline Trajectory read_tum(std::istream& is) {
  Trajectory out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw Error("malformed TUM line: " + line);
    out.push_back({Rotation::from_quaternion({qw, qx, qy, qz}),
                   Vec3(tx, ty, tz)});
  }
  return out;
}

inline Trajectory read_tum_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return read_tum(is);
}

}  // namespace loopbox
