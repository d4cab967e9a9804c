// SO(3) / SE(3) / Sim(3) value types shared by the whole library.
//
// Convention fixed here and inherited everywhere: a transform acts on points
// expressed in its source frame and yields coordinates in its destination
// frame. Poses are camera-to-world maps.

#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "loopbox/errors.hpp"

namespace loopbox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Orthonormal rotation matrix with det +1.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return {}; }

  // Validates orthonormality (1e-9 Frobenius) and det = +1.
  static Rotation from_matrix(const Mat3& m) {
    if (((m.transpose() * m) - Mat3::Identity()).norm() > 1e-9 ||
        std::abs(m.determinant() - 1.0) > 1e-9) {
      throw NumericalError("matrix is not a rotation within tolerance");
    }
    Rotation r;
    r.m_ = m;
    return r;
  }

  // Nearest rotation in Frobenius norm (polar decomposition via SVD).
  static Rotation project(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
      Mat3 flip = Mat3::Identity();
      flip(2, 2) = -1;
      r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    Rotation out;
    out.m_ = r;
    return out;
  }

  static Rotation from_axis_angle(const Vec3& aa) {
    const double angle = aa.norm();
    if (angle < 1e-15) return identity();
    Rotation r;
    r.m_ = Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
    return r;
  }

  static Rotation from_quaternion(const Eigen::Quaterniond& q) {
    Rotation r;
    r.m_ = q.normalized().toRotationMatrix();
    return r;
  }

  const Mat3& matrix() const { return m_; }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_); }

  Rotation transposed() const {
    Rotation r;
    r.m_ = m_.transpose();
    return r;
  }

  Vec3 log() const {
    Eigen::AngleAxisd aa(m_);
    return aa.angle() * aa.axis();
  }

  double angle() const { return Eigen::AngleAxisd(m_).angle(); }

  // Re-projects onto SO(3); call after long composition chains.
  Rotation renormalized() const { return project(m_); }

  Vec3 operator*(const Vec3& p) const { return m_ * p; }

  Rotation operator*(const Rotation& o) const {
    Rotation r;
    r.m_ = m_ * o.m_;
    return r;
  }

 private:
  Mat3 m_;
};

// Rigid-body transform (rotation + translation).
struct SE3Transform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static SE3Transform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  SE3Transform inverse() const {
    SE3Transform out;
    out.rotation = rotation.transposed();
    out.translation = -(out.rotation * translation);
    return out;
  }

  SE3Transform operator*(const SE3Transform& o) const {
    SE3Transform out;
    out.rotation = rotation * o.rotation;
    out.translation = rotation * o.translation + translation;
    return out;
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }
};

// Similarity transform, as the homogeneous matrix [[s R, t], [0, 1]].
struct Sim3Transform {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static Sim3Transform identity() { return {}; }

  static Sim3Transform from_scale(double s) {
    Sim3Transform t;
    t.scale = s;
    return t;
  }

  static Sim3Transform from_se3(const SE3Transform& se3) {
    Sim3Transform t;
    t.rotation = se3.rotation;
    t.translation = se3.translation;
    return t;
  }

  // Drops the scale factor, keeping rotation and translation.
  SE3Transform se3() const { return {rotation, translation}; }

  Vec3 apply(const Vec3& p) const {
    return scale * (rotation * p) + translation;
  }

  Sim3Transform inverse() const {
    Sim3Transform out;
    out.scale = 1.0 / scale;
    out.rotation = rotation.transposed();
    out.translation = -(out.scale * (out.rotation * translation));
    return out;
  }

  Sim3Transform operator*(const Sim3Transform& o) const {
    Sim3Transform out;
    out.scale = scale * o.scale;
    out.rotation = rotation * o.rotation;
    out.translation = scale * (rotation * o.translation) + translation;
    return out;
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = scale * rotation.matrix();
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  // Row-major 16-float homogeneous layout, for debugging dumps.
  std::array<double, 16> flat() const {
    std::array<double, 16> out{};
    const Mat4 m = matrix();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) out[static_cast<size_t>(r * 4 + c)] = m(r, c);
    return out;
  }

  static Sim3Transform from_flat(const std::array<double, 16>& a) {
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = a[static_cast<size_t>(r * 4 + c)];
    return from_matrix(m);
  }

  static Sim3Transform from_matrix(const Mat4& m) {
    const Mat3 sr = m.topLeftCorner<3, 3>();
    const double s = std::cbrt(sr.determinant());
    if (!(s > 0)) throw NumericalError("homogeneous block has non-positive scale");
    Sim3Transform t;
    t.scale = s;
    t.rotation = Rotation::project(sr / s);
    t.translation = m.topRightCorner<3, 1>();
    return t;
  }
};

inline Sim3Transform compose(const Sim3Transform& a, const Sim3Transform& b) {
  return a * b;
}

inline Sim3Transform inverse(const Sim3Transform& t) { return t.inverse(); }

inline Vec3 transform_point(const Sim3Transform& t, const Vec3& p) {
  return t.apply(p);
}

inline SE3Transform compose(const SE3Transform& a, const SE3Transform& b) {
  return a * b;
}

inline SE3Transform inverse(const SE3Transform& t) { return t.inverse(); }

// SE(3) with translation multiplied by s; the conjugation S_s * T * S_s^-1.
inline SE3Transform scale_translation(const SE3Transform& t, double s) {
  return {t.rotation, s * t.translation};
}

// Identifies one keyframe of one agent. index == kWorldIndex marks the
// agent's own world frame.
struct FrameId {
  static constexpr std::int32_t kWorldIndex = -1;

  std::string agent;
  std::int32_t index = 0;

  static FrameId world(std::string agent_id) {
    return {std::move(agent_id), kWorldIndex};
  }

  bool is_world() const { return index == kWorldIndex; }

  auto operator<=>(const FrameId&) const = default;
};

inline std::string to_string(const FrameId& f) {
  return f.agent + (f.is_world() ? ":world" : ":" + std::to_string(f.index));
}

}  // namespace loopbox

template <>
struct std::hash<loopbox::FrameId> {
  size_t operator()(const loopbox::FrameId& f) const noexcept {
    return std::hash<std::string>{}(f.agent) * 1000003u ^
           std::hash<std::int32_t>{}(f.index);
  }
};
