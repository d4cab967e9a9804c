// Inter-agent scale-difference estimation: normalized eight-point relative
// camera pose per match, a scalar Kalman filter over depth ratios of
// rotationally aligned landmark offsets, and the finest-tuning pair search
// that selects the optimal sigma* from the three adjacent matches.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "loopbox/alignment.hpp"
#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/loop_detect.hpp"

namespace loopbox {

// Per-match scale estimate: sigma_z with its supporting relative camera
// pose (translation up to scale) and closed-form initial-guess transform.
struct ScaleEstimate {
  int z_offset = 0;
  double sigma_z = 1.0;
  int gamma_z = 0;
  SE3Transform relative_cam;     // target cam frame -> source cam frame
  Sim3Transform initial_guess;   // Eq-7-style correction within F_s
};

struct ScaleSearchState {
  double delta_star = 5.0;
  int gamma_star = 0;
  double sigma_star = 0.0;
  double r_vol = 1.0;
};

namespace detail {

inline Eigen::Matrix3d normalizer(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mu += p;
  mu /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - mu).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 1e-15 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * mu.x();
  t(1, 2) = -s * mu.y();
  return t;
}

}  // namespace detail

// Normalized eight-point algorithm over (source, target) pairs of
// normalized image coordinates, decomposed into the cheirality-positive
// (R, t) with |t| = 1 such that X_s = R X_t + t.
inline SE3Transform eight_point_relative_pose(
    const std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>& corr) {
  const size_t n = corr.size();
  if (n < 8)
    throw InsufficientMatches("eight-point needs >= 8 correspondences, got " +
                              std::to_string(n));

  std::vector<Eigen::Vector2d> ps(n), pt(n);
  for (size_t k = 0; k < n; ++k) {
    ps[k] = corr[k].first;
    pt[k] = corr[k].second;
  }
  const Eigen::Matrix3d hs = detail::normalizer(ps);
  const Eigen::Matrix3d ht = detail::normalizer(pt);

  // Rows encode xs^T E xt = 0 in normalized coordinates.
  Eigen::MatrixXd a(n, 9);
  for (size_t k = 0; k < n; ++k) {
    const Eigen::Vector3d xs = hs * Eigen::Vector3d(ps[k].x(), ps[k].y(), 1);
    const Eigen::Vector3d xt = ht * Eigen::Vector3d(pt[k].x(), pt[k].y(), 1);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        a(static_cast<Eigen::Index>(k), 3 * r + c) = xs[r] * xt[c];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // The nullspace is expected; rank below 8 is not.
  if (sv[7] <= 0 || sv[0] / sv[7] > 1e8)
    throw DegenerateGeometry("eight-point design matrix is rank-deficient");
  const Eigen::Matrix<double, 9, 1> e = svd.matrixV().col(8);
  Eigen::Matrix3d essential;
  essential << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
  essential = hs.transpose() * essential * ht;

  Eigen::JacobiSVD<Eigen::Matrix3d> esvd(
      essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = esvd.matrixU();
  Eigen::Matrix3d v = esvd.matrixV();
  if (u.determinant() < 0) u *= -1;
  if (v.determinant() < 0) v *= -1;

  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const std::array<Mat3, 2> rots = {u * w * v.transpose(),
                                    u * w.transpose() * v.transpose()};
  const Vec3 tdir = u.col(2);

  // Cheirality: pick the candidate with the most points at positive depth
  // in both cameras, triangulating lambda_s xs = R lambda_t xt + t.
  int best_count = -1;
  SE3Transform best;
  for (const auto& rm : rots) {
    for (const double sign : {1.0, -1.0}) {
      const Vec3 t = sign * tdir;
      int count = 0;
      for (size_t k = 0; k < n; ++k) {
        const Vec3 xs(ps[k].x(), ps[k].y(), 1.0);
        const Vec3 xt(pt[k].x(), pt[k].y(), 1.0);
        Eigen::Matrix<double, 3, 2> m;
        m.col(0) = xs;
        m.col(1) = -(rm * xt);
        const Eigen::Vector2d depths =
            m.colPivHouseholderQr().solve(t);
        if (depths[0] > 0 && depths[1] > 0) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best = SE3Transform{Rotation::project(rm), t};
      }
    }
  }
  if (best_count <= 0)
    throw DegenerateGeometry("essential decomposition has no cheiral points");
  return best;
}

struct KalmanScaleResult {
  double sigma = 1.0;
  double variance = 0.0;
};

// One-dimensional Kalman filter used to fuse scalar ratio measurements.
class ScalarKalman {
 public:
  ScalarKalman(double prior_mean, double prior_var, double process_var,
               double meas_var)
      : mean_(prior_mean),
        var_(prior_var),
        process_var_(process_var),
        meas_var_(meas_var) {}

  void update(double measurement) {
    var_ += process_var_;
    const double gain = var_ / (var_ + meas_var_);
    mean_ += gain * (measurement - mean_);
    var_ *= (1.0 - gain);
  }

  double mean() const { return mean_; }
  double variance() const { return var_; }

 private:
  double mean_, var_, process_var_, meas_var_;
};

// Runs the filter over per-correspondence depth ratios |target| / |source|.
// The prior is diffuse, so with constant measurements the posterior equals
// the measurement for any realistic sequence length.
inline KalmanScaleResult kalman_scale(
    const std::vector<std::pair<Vec3, Vec3>>& corr_3d,
    double process_var = 0.0, double meas_var = 0.05 * 0.05) {
  if (corr_3d.empty())
    throw InsufficientMatches("kalman_scale needs at least 1 correspondence");
  ScalarKalman kf(1.0, 1e8, process_var, meas_var);
  for (const auto& [src, dst] : corr_3d) {
    const double sn = src.norm();
    if (sn < 1e-12)
      throw NumericalError("source vector norm below 1e-12 in kalman_scale");
    kf.update(dst.norm() / sn);
  }
  return {kf.mean(), kf.variance()};
}

struct ScaleFilterParams {
  double process_var = 0.0;
  double meas_var = 0.05 * 0.05;
};

// Full per-match estimate: eight-point pose, Kalman scale over centered
// (translation-free) landmark offsets, and the Umeyama initial guess that
// carries the naively world-chained target landmarks onto the sigma-scaled
// source landmarks, expressed in the source camera frame.
inline ScaleEstimate estimate_match_scale(const LoopClosure& match,
                                          const SE3Transform& pose_source,
                                          const SE3Transform& pose_target,
                                          int z_offset = 0,
                                          const ScaleFilterParams& fp = {}) {
  if (static_cast<int>(match.correspondences.size()) < 8)
    throw InsufficientMatches("match has fewer than 8 correspondences");

  std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> img;
  img.reserve(match.correspondences.size());
  for (const auto& c : match.correspondences) {
    const Vec3& s = c.source.position_cam;
    const Vec3& t = c.target.position_cam;
    img.emplace_back(Eigen::Vector2d(s.x() / s.z(), s.y() / s.z()),
                     Eigen::Vector2d(t.x() / t.z(), t.y() / t.z()));
  }
  ScaleEstimate est;
  est.z_offset = z_offset;
  est.gamma_z = match.gamma;
  est.relative_cam = eight_point_relative_pose(img);

  // Centering removes the (scale-ambiguous) relative translation, leaving
  // the pure depth ratio between the two maps.
  const Rotation r_ts = est.relative_cam.rotation.transposed();
  Vec3 mu_s = Vec3::Zero(), mu_t = Vec3::Zero();
  for (const auto& c : match.correspondences) {
    mu_s += c.source.position_cam;
    mu_t += c.target.position_cam;
  }
  mu_s /= static_cast<double>(match.correspondences.size());
  mu_t /= static_cast<double>(match.correspondences.size());
  std::vector<std::pair<Vec3, Vec3>> ratios;
  ratios.reserve(match.correspondences.size());
  for (const auto& c : match.correspondences) {
    const Vec3 u = r_ts * (c.source.position_cam - mu_s);
    const Vec3 v = c.target.position_cam - mu_t;
    if (u.norm() < 1e-9) continue;  // landmark at the centroid carries no ratio
    ratios.emplace_back(u, v);
  }
  if (ratios.size() < 2)
    throw DegenerateGeometry("not enough off-centroid landmarks for scale");
  const auto kf = kalman_scale(ratios, fp.process_var, fp.meas_var);
  if (!(kf.sigma > 0))
    throw NumericalError("non-positive scale estimate");
  est.sigma_z = kf.sigma;

  // Initial guess fitted in the source camera frame.
  std::vector<Vec3> from, to;
  from.reserve(match.correspondences.size());
  to.reserve(match.correspondences.size());
  const SE3Transform source_inv = pose_source.inverse();
  for (const auto& c : match.correspondences) {
    from.push_back(source_inv.apply(pose_target.apply(c.target.position_cam)));
    to.push_back(est.sigma_z * c.source.position_cam);
  }
  est.initial_guess = similarity_align(from, to, true);
  return est;
}

enum class ScaleBranch { PairAccepted, CenterLowOverlap };

struct OptimalScale {
  double sigma_star = 1.0;
  Sim3Transform initial_guess;  // raw guess of the chosen member
  int chosen_z = 0;             // member whose initial guess was taken
  std::array<int, 2> pair{0, 0};
  double delta_star = 5.0;
  int gamma_star = 0;
  ScaleBranch branch = ScaleBranch::PairAccepted;
};

// Finest tuning for the optimal scale estimate. With low cloud overlap
// (r_vol <= 0.5) the center match wins outright; otherwise unordered pairs
// are folded in canonical order (-1,0), (-1,1), (0,1) under the acceptance
// conditions gamma* < gamma_xy, delta* > delta, delta* != 0. A pair with
// delta == 0 freezes the state by setting delta* = 0.
inline OptimalScale optimal_scale(const std::array<ScaleEstimate, 3>& est,
                                  double r_vol) {
  for (int z = -1; z <= 1; ++z)
    if (est[static_cast<size_t>(z + 1)].z_offset != z)
      throw Error("estimates must carry distinct z offsets -1, 0, +1");

  OptimalScale out;
  if (r_vol <= 0.5) {
    const auto& center = est[1];
    out.sigma_star = center.sigma_z;
    out.initial_guess = center.initial_guess;
    out.chosen_z = 0;
    out.gamma_star = center.gamma_z;
    out.branch = ScaleBranch::CenterLowOverlap;
    return out;
  }

  double delta_star = 5.0;
  int gamma_star = 0;
  bool accepted = false;
  std::array<int, 2> best_pair{0, 0};
  double sigma_star = 0.0;
  static constexpr std::array<std::array<int, 2>, 3> kPairs{
      {{-1, 0}, {-1, 1}, {0, 1}}};
  for (const auto& p : kPairs) {
    const auto& ex = est[static_cast<size_t>(p[0] + 1)];
    const auto& ey = est[static_cast<size_t>(p[1] + 1)];
    const double delta = std::abs(ex.sigma_z - ey.sigma_z);
    const int gamma_xy = std::min(ex.gamma_z, ey.gamma_z);
    if (gamma_star < gamma_xy && delta_star > delta && delta_star != 0.0) {
      sigma_star = 0.5 * (ex.sigma_z + ey.sigma_z);
      delta_star = delta;
      gamma_star = gamma_xy;
      best_pair = p;
      accepted = true;
    }
  }
  if (!accepted)
    throw NoAcceptablePair("no match pair within the scale gap bound");

  const auto& ex = est[static_cast<size_t>(best_pair[0] + 1)];
  const auto& ey = est[static_cast<size_t>(best_pair[1] + 1)];
  const ScaleEstimate* chosen = &ex;
  if (ey.gamma_z > ex.gamma_z) {
    chosen = &ey;
  } else if (ey.gamma_z == ex.gamma_z &&
             std::abs(ey.z_offset) < std::abs(ex.z_offset)) {
    chosen = &ey;
  }
  out.sigma_star = sigma_star;
  out.initial_guess = chosen->initial_guess;
  out.chosen_z = chosen->z_offset;
  out.pair = best_pair;
  out.delta_star = delta_star;
  out.gamma_star = gamma_star;
  out.branch = ScaleBranch::PairAccepted;
  return out;
}

}  // namespace loopbox
