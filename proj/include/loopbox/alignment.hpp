// Closed-form least-squares alignment of corresponding 3-D point sets.

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"

namespace loopbox {

// Finds the similarity (or rigid, when with_scale is false) transform T
// minimizing sum_k |dst_k - T(src_k)|^2, Umeyama's closed form.
inline Sim3Transform similarity_align(const std::vector<Vec3>& src,
                                      const std::vector<Vec3>& dst,
                                      bool with_scale) {
  if (src.size() != dst.size())
    throw LengthMismatch("correspondence sets differ in size");
  const size_t n = src.size();
  if (n < 3) throw InsufficientMatches("alignment needs >= 3 correspondences");

  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (size_t k = 0; k < n; ++k) {
    mu_s += src[k];
    mu_d += dst[k];
  }
  mu_s /= static_cast<double>(n);
  mu_d /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  double var_s = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const Vec3 ps = src[k] - mu_s;
    const Vec3 pd = dst[k] - mu_d;
    cov += pd * ps.transpose();
    var_s += ps.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_s /= static_cast<double>(n);
  if (var_s < 1e-18)
    throw DegenerateGeometry("source points are coincident");

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0)
    s(2, 2) = -1;

  Sim3Transform t;
  t.rotation = Rotation::project(svd.matrixU() * s * svd.matrixV().transpose());
  t.scale = with_scale
                ? (svd.singularValues().asDiagonal() * s).trace() / var_s
                : 1.0;
  if (!(t.scale > 0)) throw DegenerateGeometry("non-positive aligned scale");
  t.translation = mu_d - t.scale * (t.rotation * mu_s);
  return t;
}

inline SE3Transform rigid_align(const std::vector<Vec3>& src,
                                const std::vector<Vec3>& dst) {
  return similarity_align(src, dst, false).se3();
}

}  // namespace loopbox
