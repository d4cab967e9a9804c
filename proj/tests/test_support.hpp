// Shared helpers for the test suites: seeded random geometry and dense
// 4x4 matrix oracles kept independent of the Sim3 composition path.

#pragma once

#include <random>

#include <Eigen/Dense>

#include "loopbox/geometry.hpp"

namespace loopbox::testing {

inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  while (q.norm() < 1e-6) q = {g(rng), g(rng), g(rng), g(rng)};
  return Rotation::from_quaternion(q);
}

inline Vec3 random_vec3(std::mt19937_64& rng, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Sim3Transform random_sim3(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> logs(std::log(0.2), std::log(5.0));
  Sim3Transform t;
  t.scale = std::exp(logs(rng));
  t.rotation = random_rotation(rng);
  t.translation = random_vec3(rng);
  return t;
}

inline SE3Transform random_se3(std::mt19937_64& rng, double tscale = 10.0) {
  return {random_rotation(rng), random_vec3(rng, tscale)};
}

// Dense homogeneous-matrix product, the oracle for composition results.
inline Mat4 matrix_oracle_compose(const Sim3Transform& a,
                                  const Sim3Transform& b) {
  return a.matrix() * b.matrix();
}

inline Vec3 matrix_oracle_apply(const Sim3Transform& t, const Vec3& p) {
  Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
  const Eigen::Vector4d r = t.matrix() * h;
  return r.head<3>() / r[3];
}

inline double matrix_gap(const Mat4& a, const Mat4& b) {
  return (a - b).norm();
}

}  // namespace loopbox::testing
