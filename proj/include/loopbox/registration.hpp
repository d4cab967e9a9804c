// Cloud alignment and refinement: the staged scaling/world/initial-guess
// chain, trimmed point-to-point ICP, the second-derivative covariance
// approximation of the ICP objective, and the composed final transform
// applied to whole maps.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loopbox/alignment.hpp"
#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/kdtree.hpp"
#include "loopbox/point_cloud.hpp"
#include "loopbox/scenario.hpp"

namespace loopbox {

// The factors of Eq.-8-style composition, stored separately. The ICP
// refinement runs after scale resolution, so its scale is exactly 1.
struct AlignmentChain {
  Sim3Transform scaling;            // pure scale sigma* on the source
  Sim3Transform world_lift_target;  // target camera -> target world
  Sim3Transform world_to_source;    // source world -> source camera
  Sim3Transform initial_guess;
  Sim3Transform icp_refinement;
};

struct AlignChainResult {
  PointCloud star;   // sigma*-scaled source cloud
  PointCloud plus;   // target cloud after world chain + initial guess
  AlignmentChain chain;
};

// Scales the source cloud by sigma* and maps the target cloud
// F_t^j -> F_w -> F_s^i -> initial-guess frame, exactly in that order.
inline AlignChainResult align_chain(const PointCloud& cloud_source,
                                    const PointCloud& cloud_target,
                                    const SE3Transform& pose_source,
                                    const SE3Transform& pose_target,
                                    double sigma_star,
                                    const Sim3Transform& initial_guess) {
  if (!(sigma_star > 0)) throw NumericalError("sigma* must be positive");
  AlignChainResult out;
  out.chain.scaling = Sim3Transform::from_scale(sigma_star);
  out.chain.world_lift_target = Sim3Transform::from_se3(pose_target);
  out.chain.world_to_source = Sim3Transform::from_se3(pose_source.inverse());
  out.chain.initial_guess = initial_guess;
  out.chain.icp_refinement = Sim3Transform::identity();

  out.star = transform_cloud(out.chain.scaling, cloud_source);
  PointCloud staged = transform_cloud(out.chain.world_lift_target, cloud_target);
  staged = transform_cloud(out.chain.world_to_source, staged);
  out.plus = transform_cloud(out.chain.initial_guess, staged);
  return out;
}

struct IcpParams {
  size_t min_points = 50;
  int max_iterations = 100;
  double rel_tolerance = 1e-8;
  double trim_fraction = 0.9;  // keep this share of correspondences
  bool reciprocal = true;
};

struct IcpResult {
  SE3Transform transform;  // maps the target-aligned cloud onto the source
  double final_cost = 0.0;  // sum of squared residuals over the final set
  int iterations = 0;
  bool converged = false;
  size_t correspondences_used = 0;
  std::vector<double> cost_trace;  // mean squared residual per iteration
  // final correspondence set as (target point index, source point index)
  std::vector<std::pair<size_t, size_t>> final_pairs;
};

inline IcpResult icp_point_to_point(const PointCloud& source,
                                    const PointCloud& target,
                                    const IcpParams& params = {}) {
  if (source.size() < params.min_points || target.size() < params.min_points)
    throw TooFewPoints("ICP needs at least " +
                       std::to_string(params.min_points) +
                       " points per cloud");

  const KdTree3 source_tree(source.points);
  SE3Transform t;
  IcpResult result;
  double prev_cost = -1.0;

  std::vector<Vec3> moved(target.points.size());
  struct Pair {
    size_t target_idx;
    size_t source_idx;
    double dist2;
  };
  std::vector<Pair> pool;
  std::vector<Vec3> from_pts, to_pts;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    for (size_t k = 0; k < target.points.size(); ++k)
      moved[k] = t.apply(target.points[k]);

    pool.clear();
    pool.reserve(moved.size());
    if (params.reciprocal) {
      const KdTree3 moved_tree(moved);
      for (size_t k = 0; k < moved.size(); ++k) {
        const auto hit = source_tree.nearest(moved[k]);
        if (moved_tree.nearest(source.points[hit.index]).index == k)
          pool.push_back({k, hit.index, hit.dist2});
      }
    } else {
      for (size_t k = 0; k < moved.size(); ++k) {
        const auto hit = source_tree.nearest(moved[k]);
        pool.push_back({k, hit.index, hit.dist2});
      }
    }
    if (pool.size() < 3) throw TooFewPoints("ICP correspondence pool collapsed");

    const size_t keep = std::max<size_t>(
        3, static_cast<size_t>(std::ceil(params.trim_fraction *
                                         static_cast<double>(pool.size()))));
    if (keep < pool.size())
      std::nth_element(pool.begin(),
                       pool.begin() + static_cast<long>(keep) - 1, pool.end(),
                       [](const Pair& a, const Pair& b) {
                         return a.dist2 < b.dist2 ||
                                (a.dist2 == b.dist2 &&
                                 a.target_idx < b.target_idx);
                       });
    pool.resize(keep);

    double cost = 0.0;
    for (const auto& p : pool) cost += p.dist2;
    cost /= static_cast<double>(pool.size());

    result.iterations = iter + 1;
    if (prev_cost >= 0 && cost > prev_cost * (1.0 + 1e-12)) {
      // Re-matching wobble past the optimum; keep the previous solution.
      break;
    }
    result.cost_trace.push_back(cost);
    result.transform = t;
    result.correspondences_used = pool.size();
    result.final_cost = cost * static_cast<double>(pool.size());
    result.final_pairs.clear();
    for (const auto& pr : pool)
      result.final_pairs.emplace_back(pr.target_idx, pr.source_idx);

    if (cost <= 1e-24 ||
        (prev_cost >= 0 &&
         std::abs(prev_cost - cost) <=
             params.rel_tolerance * std::max(prev_cost, 1e-300))) {
      result.converged = true;
      break;
    }
    prev_cost = cost;

    from_pts.clear();
    to_pts.clear();
    for (const auto& p : pool) {
      from_pts.push_back(moved[p.target_idx]);
      to_pts.push_back(source.points[p.source_idx]);
    }
    t = rigid_align(from_pts, to_pts) * t;
  }
  return result;
}

struct InformationMatrix {
  Mat6 matrix = Mat6::Identity();  // ordering x, y, z, a, b, c
};

namespace detail {

struct IcpDerivatives {
  Mat6 hessian = Mat6::Zero();             // d2J/dx2
  std::vector<Eigen::Matrix<double, 6, 6>> mixed;  // d2J/dz_i dx, per pair
};

// Analytic derivatives of J = sum |R p_i + t - q_i|^2 at the solution,
// with rotation parametrized as exp([delta]x) R.
inline IcpDerivatives icp_objective_derivatives(const std::vector<Vec3>& p,
                                                const std::vector<Vec3>& q,
                                                const SE3Transform& x) {
  IcpDerivatives out;
  out.mixed.reserve(p.size());
  const Mat3 rot = x.rotation.matrix();
  for (size_t i = 0; i < p.size(); ++i) {
    const Vec3 u = rot * p[i];
    const Vec3 r = u + x.translation - q[i];
    Eigen::Matrix<double, 3, 6> g;
    g.leftCols<3>() = Mat3::Identity();
    g.rightCols<3>() = -skew(u);
    Mat6 h = 2.0 * g.transpose() * g;
    h.bottomRightCorner<3, 3>() +=
        2.0 * (0.5 * (u * r.transpose() + r * u.transpose()) -
               r.dot(u) * Mat3::Identity());
    out.hessian += h;

    Eigen::Matrix<double, 6, 6> m;  // columns: [dP | dQ]
    Eigen::Matrix<double, 6, 3> bp, bq;
    bp.topRows<3>() = rot;
    bp.bottomRows<3>() = (skew(u) - skew(r)) * rot;
    bq.topRows<3>() = -Mat3::Identity();
    bq.bottomRows<3>() = -skew(u);
    m.leftCols<3>() = 2.0 * bp;
    m.rightCols<3>() = 2.0 * bq;
    out.mixed.push_back(m);
  }
  return out;
}

inline bool points_collinear(const std::vector<Vec3>& pts) {
  if (pts.size() < 3) return true;
  Vec3 mu = Vec3::Zero();
  for (const auto& p : pts) mu += p;
  mu /= static_cast<double>(pts.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - mu) * (p - mu).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return es.eigenvalues()[1] < 1e-12 * std::max(es.eigenvalues()[2], 1e-300);
}

}  // namespace detail

// Censi-style covariance of the ICP solution and its inverse. cov_z holds
// one 6x6 block per correspondence over the stacked (P_i, Q_i) coordinates.
inline InformationMatrix icp_information_matrix(
    const std::vector<Vec3>& p, const std::vector<Vec3>& q,
    const SE3Transform& solution, const std::vector<Mat6>& cov_z) {
  if (p.size() != q.size() || p.size() != cov_z.size())
    throw LengthMismatch("correspondence/covariance sizes differ");
  if (p.size() < 3 || detail::points_collinear(p))
    throw DegenerateGeometry(
        "information matrix needs >= 3 non-collinear correspondences");

  const auto d = detail::icp_objective_derivatives(p, q, solution);

  Eigen::JacobiSVD<Mat6> hsvd(d.hessian);
  const auto& sv = hsvd.singularValues();
  if (sv[5] <= 0 || sv[0] / sv[5] > 1e10)
    throw SingularHessian("ICP Hessian is numerically singular");
  const Mat6 h_inv = d.hessian.inverse();

  Mat6 mid = Mat6::Zero();
  for (size_t i = 0; i < p.size(); ++i)
    mid += d.mixed[i] * cov_z[i] * d.mixed[i].transpose();

  const Mat6 cov_x = h_inv * mid * h_inv;
  Eigen::FullPivLU<Mat6> lu(cov_x);
  if (!lu.isInvertible())
    throw NumericalError("ICP covariance is not invertible");
  Mat6 info = lu.inverse();
  info = 0.5 * (info + info.transpose());
  return {info};
}

// Isotropic per-point measurement noise epsilon on both cloud sides.
inline InformationMatrix icp_information_matrix(const std::vector<Vec3>& p,
                                                const std::vector<Vec3>& q,
                                                const SE3Transform& solution,
                                                double epsilon) {
  if (!(epsilon > 0)) throw NumericalError("epsilon must be positive");
  std::vector<Mat6> cov(p.size(), Mat6::Identity() * epsilon * epsilon);
  return icp_information_matrix(p, q, solution, cov);
}

// Eq.-8 composition, in exactly this factor order.
inline Sim3Transform final_transform(const AlignmentChain& chain) {
  return chain.icp_refinement *
         (chain.initial_guess *
          (chain.world_to_source * chain.world_lift_target));
}

struct MergedKeyframe {
  FrameId frame;
  Sim3Transform pose_merged;  // camera -> merged frame
};

struct MergedMap {
  std::vector<std::string> agent_ids;
  std::vector<MergedKeyframe> keyframes;
  PointCloud cloud;
  std::vector<int> agent_of_point;  // index into agent_ids per cloud point
  std::map<std::string, Sim3Transform> world_maps;  // agent world -> merged
};

inline MergedMap build_merged_map(
    const std::vector<const AgentTrack*>& tracks,
    const std::vector<Sim3Transform>& world_maps) {
  if (tracks.size() != world_maps.size())
    throw LengthMismatch("track/world map count mismatch");
  MergedMap out;
  for (size_t a = 0; a < tracks.size(); ++a) {
    out.agent_ids.push_back(tracks[a]->agent_id);
    out.world_maps[tracks[a]->agent_id] = world_maps[a];
    for (const auto& kf : tracks[a]->keyframes) {
      const Sim3Transform pose =
          world_maps[a] * Sim3Transform::from_se3(kf.pose_local);
      out.keyframes.push_back({kf.frame, pose});
      for (const auto& pt : kf.cloud.points) {
        out.cloud.points.push_back(pose.apply(pt));
        out.agent_of_point.push_back(static_cast<int>(a));
      }
    }
  }
  return out;
}

// Applies the scaling transform to the source map and the final transform
// to the target map, expressing both in the merged (scaled-source) frame.
// lc_source / lc_target are the loop-closure keyframe indices the final
// transform is anchored at.
inline MergedMap apply_merge(const AgentTrack& source, const AgentTrack& target,
                             const Sim3Transform& sigma_scaling,
                             const Sim3Transform& final_tf, int lc_source,
                             int lc_target) {
  const auto& a_i =
      source.keyframes.at(static_cast<size_t>(lc_source)).pose_local;
  const auto& b_j =
      target.keyframes.at(static_cast<size_t>(lc_target)).pose_local;
  const Sim3Transform conj = sigma_scaling * Sim3Transform::from_se3(a_i) *
                             sigma_scaling.inverse();
  const Sim3Transform w_target =
      conj * final_tf * Sim3Transform::from_se3(b_j).inverse();
  return build_merged_map({&source, &target}, {sigma_scaling, w_target});
}

// TUM trajectory line per keyframe: timestamp tx ty tz qx qy qz qw.
inline void write_tum(std::ostream& os,
                      const std::vector<Sim3Transform>& poses,
                      double rate_hz = 2.0) {
  os.precision(9);
  os << std::fixed;
  for (size_t k = 0; k < poses.size(); ++k) {
    const auto q = poses[k].rotation.quaternion();
    const auto& t = poses[k].translation;
    os << static_cast<double>(k) / rate_hz << " " << t.x() << " " << t.y()
       << " " << t.z() << " " << q.x() << " " << q.y() << " " << q.z() << " "
       << q.w() << "\n";
  }
}

}  // namespace loopbox
