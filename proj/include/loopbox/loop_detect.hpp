// Inter-agent loop closure detection over synthetic landmark descriptors:
// mutual-nearest-neighbor matching with a ratio test, travel direction
// disambiguation, and assembly of the three adjacent matches (direct or
// crossed) consumed by scale estimation.

#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/scenario.hpp"

namespace loopbox {

struct Correspondence {
  LandmarkObs source;
  LandmarkObs target;
};

struct LoopClosure {
  FrameId source_frame;
  FrameId target_frame;
  std::vector<Correspondence> correspondences;
  int gamma = 0;  // matched keypoint count
};

enum class DirectionVerdict { Same, Opposite };

inline const char* to_string(DirectionVerdict v) {
  return v == DirectionVerdict::Same ? "same" : "opposite";
}

enum class PairingMode { Direct, Crossed };

inline const char* to_string(PairingMode m) {
  return m == PairingMode::Direct ? "direct" : "crossed";
}

// Exactly three adjacent matches at offsets z = -1, 0, +1. Direct pairing
// matches (i+z, j+z); crossed matches (i+z, j-z).
struct MatchTriple {
  std::array<LoopClosure, 3> matches;
  PairingMode pairing_mode = PairingMode::Direct;

  const LoopClosure& at_offset(int z) const {
    return matches[static_cast<size_t>(z + 1)];
  }
};

struct DetectionParams {
  int min_gamma = 20;        // acceptance threshold for the triggering match
  int min_pair_gamma = 8;    // eight-point floor for adjacent matches
  double ratio_test = 0.8;   // Lowe-style ratio, best/second-best distance
};

// Mutual-nearest-neighbor descriptor matching with ratio test.
inline std::vector<Correspondence> match_keyframes(const Keyframe& a,
                                                   const Keyframe& b,
                                                   double ratio) {
  const auto& oa = a.landmarks_obs;
  const auto& ob = b.landmarks_obs;
  std::vector<Correspondence> out;
  if (oa.empty() || ob.empty()) return out;

  const auto na = static_cast<Eigen::Index>(oa.size());
  const auto nb = static_cast<Eigen::Index>(ob.size());
  const auto dim = oa.front().descriptor.size();
  Eigen::MatrixXd da(dim, na), db(dim, nb);
  for (Eigen::Index i = 0; i < na; ++i)
    da.col(i) = oa[static_cast<size_t>(i)].descriptor;
  for (Eigen::Index j = 0; j < nb; ++j)
    db.col(j) = ob[static_cast<size_t>(j)].descriptor;

  // Squared distances via the Gram matrix; may dip slightly below zero.
  Eigen::MatrixXd dist = (-2.0 * da.transpose() * db);
  dist.colwise() += da.colwise().squaredNorm().transpose();
  dist.rowwise() += db.colwise().squaredNorm();

  std::vector<Eigen::Index> best_ab(static_cast<size_t>(na));
  std::vector<char> pass_ratio(static_cast<size_t>(na), 0);
  std::vector<Eigen::Index> best_ba(static_cast<size_t>(nb), 0);
  std::vector<double> best_dist_ba(static_cast<size_t>(nb),
                                   std::numeric_limits<double>::infinity());

  for (Eigen::Index i = 0; i < na; ++i) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = d1;
    Eigen::Index arg = 0;
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double d = std::max(dist(i, j), 0.0);
      if (d < d1) {
        d2 = d1;
        d1 = d;
        arg = j;
      } else if (d < d2) {
        d2 = d;
      }
      if (d < best_dist_ba[static_cast<size_t>(j)]) {
        best_dist_ba[static_cast<size_t>(j)] = d;
        best_ba[static_cast<size_t>(j)] = i;
      }
    }
    best_ab[static_cast<size_t>(i)] = arg;
    // Squared distances, so the ratio threshold is squared too.
    pass_ratio[static_cast<size_t>(i)] = nb < 2 || d1 <= ratio * ratio * d2;
  }

  for (Eigen::Index i = 0; i < na; ++i) {
    const Eigen::Index j = best_ab[static_cast<size_t>(i)];
    if (pass_ratio[static_cast<size_t>(i)] && best_ba[static_cast<size_t>(j)] == i)
      out.push_back({oa[static_cast<size_t>(i)], ob[static_cast<size_t>(j)]});
  }
  return out;
}

inline int gamma_between(const Keyframe& a, const Keyframe& b,
                         const DetectionParams& p) {
  return static_cast<int>(match_keyframes(a, b, p.ratio_test).size());
}

// Earliest qualifying keyframe pair in stream order: candidates are ranked
// by (max(i, j), min(i, j)), which makes the result independent of which
// track is called source. Between the two mirror candidates sharing one
// rank, the higher gamma wins; an exact tie goes to the pair whose
// lexicographically smaller agent holds the smaller keyframe index.
inline std::optional<LoopClosure> detect_first_loop(
    const AgentTrack& source, const AgentTrack& target,
    const DetectionParams& params = {}) {
  if (source.keyframes.empty() || target.keyframes.empty())
    throw Error("detect_first_loop needs non-empty tracks");
  const size_t ns = source.keyframes.size();
  const size_t nt = target.keyframes.size();
  const size_t steps = std::max(ns, nt);
  const bool source_first = source.agent_id <= target.agent_id;
  for (size_t arrival = 0; arrival < steps; ++arrival) {
    for (size_t other = 0; other <= arrival; ++other) {
      std::optional<LoopClosure> found[2];
      for (int side = 0; side < 2; ++side) {
        const size_t i = side == 0 ? other : arrival;
        const size_t j = side == 0 ? arrival : other;
        if (side == 1 && i == j) continue;
        if (i >= ns || j >= nt) continue;
        auto corr = match_keyframes(source.keyframes[i], target.keyframes[j],
                                    params.ratio_test);
        if (static_cast<int>(corr.size()) >= params.min_gamma) {
          LoopClosure lc;
          lc.source_frame = source.keyframes[i].frame;
          lc.target_frame = target.keyframes[j].frame;
          lc.gamma = static_cast<int>(corr.size());
          lc.correspondences = std::move(corr);
          found[side] = std::move(lc);
        }
      }
      if (found[0] && found[1]) {
        if (found[0]->gamma != found[1]->gamma)
          return found[0]->gamma > found[1]->gamma ? found[0] : found[1];
        // In stream order the lexicographically smaller agent's new
        // keyframe is scanned first, so it holds the larger index.
        return source_first ? found[1] : found[0];
      }
      if (found[0]) return found[0];
      if (found[1]) return found[1];
    }
  }
  return std::nullopt;
}

// Compares direct (i+1,j+1)+(i-1,j-1) against crossed (i+1,j-1)+(i-1,j+1)
// adjacent match counts. Ties resolve to Same.
inline DirectionVerdict determine_direction(const AgentTrack& source,
                                            const AgentTrack& target,
                                            const LoopClosure& lc,
                                            const DetectionParams& params = {}) {
  const int i = lc.source_frame.index;
  const int j = lc.target_frame.index;
  if (i - 1 < 0 || j - 1 < 0 ||
      i + 1 >= static_cast<int>(source.keyframes.size()) ||
      j + 1 >= static_cast<int>(target.keyframes.size()))
    throw BoundaryError("loop closure at track endpoint: " +
                        to_string(lc.source_frame) + " / " +
                        to_string(lc.target_frame));
  const auto& skf = source.keyframes;
  const auto& tkf = target.keyframes;
  const auto su = static_cast<size_t>(i);
  const auto tu = static_cast<size_t>(j);
  const int direct = gamma_between(skf[su + 1], tkf[tu + 1], params) +
                     gamma_between(skf[su - 1], tkf[tu - 1], params);
  const int crossed = gamma_between(skf[su + 1], tkf[tu - 1], params) +
                      gamma_between(skf[su - 1], tkf[tu + 1], params);
  return direct >= crossed ? DirectionVerdict::Same
                           : DirectionVerdict::Opposite;
}

inline MatchTriple build_match_triple(const AgentTrack& source,
                                      const AgentTrack& target,
                                      const LoopClosure& lc,
                                      DirectionVerdict verdict,
                                      const DetectionParams& params = {}) {
  const int i = lc.source_frame.index;
  const int j = lc.target_frame.index;
  MatchTriple triple;
  triple.pairing_mode = verdict == DirectionVerdict::Same
                            ? PairingMode::Direct
                            : PairingMode::Crossed;
  for (int z = -1; z <= 1; ++z) {
    const int si = i + z;
    const int tj = triple.pairing_mode == PairingMode::Direct ? j + z : j - z;
    if (si < 0 || tj < 0 || si >= static_cast<int>(source.keyframes.size()) ||
        tj >= static_cast<int>(target.keyframes.size()))
      throw BoundaryError("match triple would leave the track at z=" +
                          std::to_string(z));
    LoopClosure m;
    if (z == 0) {
      m = lc;
    } else {
      const auto& skf = source.keyframes[static_cast<size_t>(si)];
      const auto& tkf = target.keyframes[static_cast<size_t>(tj)];
      auto corr = match_keyframes(skf, tkf, params.ratio_test);
      m.source_frame = skf.frame;
      m.target_frame = tkf.frame;
      m.gamma = static_cast<int>(corr.size());
      m.correspondences = std::move(corr);
    }
    if (m.gamma < params.min_pair_gamma)
      throw InsufficientMatches(
          "adjacent match at z=" + std::to_string(z) + " has only " +
          std::to_string(m.gamma) + " correspondences");
    triple.matches[static_cast<size_t>(z + 1)] = std::move(m);
  }
  return triple;
}

}  // namespace loopbox
