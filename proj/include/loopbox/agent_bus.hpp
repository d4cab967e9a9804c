// Master/slave deployment simulation. Slaves replay their keyframe, pose,
// and cloud streams over an ordered, reliable, typed channel carrying
// length-prefixed versioned binary records; the master assembles per-agent
// buffers, detects the first qualifying loop closure per pair, runs the
// merge pipeline once per pair, and broadcasts merge notices.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/pipeline.hpp"
#include "loopbox/scenario.hpp"

namespace loopbox {

struct HelloMsg {
  std::string agent;
};
struct ByeMsg {
  std::string agent;
};
struct KeyframeMsg {
  Keyframe keyframe;  // cloud travels separately in a CloudMsg
};
struct PoseMsg {
  FrameId frame;
  SE3Transform pose;
};
struct CloudMsg {
  FrameId frame;
  PointCloud cloud;
};

using AgentMessage =
    std::variant<HelloMsg, KeyframeMsg, PoseMsg, CloudMsg, ByeMsg>;

enum class BusMode { Centralized, Distributed };

inline const char* to_string(BusMode m) {
  return m == BusMode::Centralized ? "centralized" : "distributed";
}

// ---- wire format (version 1, little-endian) ----

namespace wire {

constexpr std::uint8_t kVersion = 1;

inline void put_u8(std::vector<std::uint8_t>& b, std::uint8_t v) {
  b.push_back(v);
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_i32(std::vector<std::uint8_t>& b, std::int32_t v) {
  put_u32(b, static_cast<std::uint32_t>(v));
}
inline void put_i64(std::vector<std::uint8_t>& b, std::int64_t v) {
  for (int i = 0; i < 8; ++i)
    b.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
}
inline void put_f64(std::vector<std::uint8_t>& b, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_i64(b, static_cast<std::int64_t>(bits));
}
inline void put_string(std::vector<std::uint8_t>& b, const std::string& s) {
  put_u32(b, static_cast<std::uint32_t>(s.size()));
  b.insert(b.end(), s.begin(), s.end());
}
inline void put_vec3(std::vector<std::uint8_t>& b, const Vec3& v) {
  put_f64(b, v.x());
  put_f64(b, v.y());
  put_f64(b, v.z());
}
inline void put_se3(std::vector<std::uint8_t>& b, const SE3Transform& t) {
  const Mat3& r = t.rotation.matrix();
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) put_f64(b, r(row, col));
  put_vec3(b, t.translation);
}
inline void put_frame(std::vector<std::uint8_t>& b, const FrameId& f) {
  put_string(b, f.agent);
  put_i32(b, f.index);
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw Error("truncated message record");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::int64_t i64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    return static_cast<std::int64_t>(v);
  }
  double f64() {
    const std::uint64_t bits = static_cast<std::uint64_t>(i64());
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string string() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(buf.begin() + static_cast<long>(pos),
                  buf.begin() + static_cast<long>(pos + n));
    pos += n;
    return s;
  }
  Vec3 vec3() {
    Vec3 v;
    v.x() = f64();
    v.y() = f64();
    v.z() = f64();
    return v;
  }
  SE3Transform se3() {
    Mat3 r;
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col) r(row, col) = f64();
    return {Rotation::project(r), vec3()};
  }
  FrameId frame() {
    FrameId f;
    f.agent = string();
    f.index = i32();
    return f;
  }
};

}  // namespace wire

inline std::vector<std::uint8_t> encode_message(const AgentMessage& msg) {
  std::vector<std::uint8_t> b;
  wire::put_u8(b, wire::kVersion);
  if (const auto* hello = std::get_if<HelloMsg>(&msg)) {
    wire::put_u8(b, 0);
    wire::put_string(b, hello->agent);
  } else if (const auto* kf = std::get_if<KeyframeMsg>(&msg)) {
    wire::put_u8(b, 1);
    wire::put_frame(b, kf->keyframe.frame);
    wire::put_se3(b, kf->keyframe.pose_local);
    wire::put_u32(b, static_cast<std::uint32_t>(kf->keyframe.landmarks_obs.size()));
    for (const auto& o : kf->keyframe.landmarks_obs) {
      wire::put_i64(b, o.landmark_id);
      wire::put_vec3(b, o.position_cam);
      wire::put_u32(b, static_cast<std::uint32_t>(o.descriptor.size()));
      for (Eigen::Index i = 0; i < o.descriptor.size(); ++i)
        wire::put_f64(b, o.descriptor[i]);
    }
  } else if (const auto* pose = std::get_if<PoseMsg>(&msg)) {
    wire::put_u8(b, 2);
    wire::put_frame(b, pose->frame);
    wire::put_se3(b, pose->pose);
  } else if (const auto* cloud = std::get_if<CloudMsg>(&msg)) {
    wire::put_u8(b, 3);
    wire::put_frame(b, cloud->frame);
    wire::put_u32(b, static_cast<std::uint32_t>(cloud->cloud.points.size()));
    for (const auto& p : cloud->cloud.points) wire::put_vec3(b, p);
  } else if (const auto* bye = std::get_if<ByeMsg>(&msg)) {
    wire::put_u8(b, 4);
    wire::put_string(b, bye->agent);
  }
  // length prefix
  std::vector<std::uint8_t> framed;
  wire::put_u32(framed, static_cast<std::uint32_t>(b.size()));
  framed.insert(framed.end(), b.begin(), b.end());
  return framed;
}

inline AgentMessage decode_message(const std::vector<std::uint8_t>& framed) {
  wire::Reader r{framed};
  const std::uint32_t len = r.u32();
  if (len + 4 != framed.size()) throw Error("bad frame length");
  if (r.u8() != wire::kVersion) throw Error("unsupported message version");
  const std::uint8_t type = r.u8();
  switch (type) {
    case 0: return HelloMsg{r.string()};
    case 1: {
      KeyframeMsg m;
      m.keyframe.frame = r.frame();
      m.keyframe.pose_local = r.se3();
      const std::uint32_t n = r.u32();
      m.keyframe.landmarks_obs.resize(n);
      for (std::uint32_t k = 0; k < n; ++k) {
        auto& o = m.keyframe.landmarks_obs[k];
        o.landmark_id = r.i64();
        o.position_cam = r.vec3();
        const std::uint32_t d = r.u32();
        o.descriptor.resize(d);
        for (std::uint32_t i = 0; i < d; ++i) o.descriptor[i] = r.f64();
      }
      return m;
    }
    case 2: {
      PoseMsg m;
      m.frame = r.frame();
      m.pose = r.se3();
      return m;
    }
    case 3: {
      CloudMsg m;
      m.frame = r.frame();
      const std::uint32_t n = r.u32();
      m.cloud.points.resize(n);
      for (std::uint32_t k = 0; k < n; ++k) m.cloud.points[k] = r.vec3();
      return m;
    }
    case 4: return ByeMsg{r.string()};
    default: throw Error("unknown message type " + std::to_string(type));
  }
}

// Ordered, reliable in-process channel. Messages cross it in framed binary
// form, so an inter-process transport can replace it without touching the
// pipeline.
class MessageChannel {
 public:
  void push(const AgentMessage& msg) { frames_.push_back(encode_message(msg)); }

  std::optional<AgentMessage> pop() {
    if (frames_.empty()) return std::nullopt;
    auto frame = std::move(frames_.front());
    frames_.pop_front();
    return decode_message(frame);
  }

  bool empty() const { return frames_.empty(); }

 private:
  std::deque<std::vector<std::uint8_t>> frames_;
};

struct MergeNotice {
  std::string source_agent, target_agent;
  Sim3Transform sigma_scaling;  // applied to the source map
  Sim3Transform final_tf;       // Eq.-8 product, applied to the target map
  Sim3Transform target_world;   // assembled target world -> pair merged frame
  json loop_report;
  json scale_report;
};

struct SessionParams {
  PipelineParams pipeline;
  int buffer_keyframes = 32;     // full keyframes retained per agent
  int summary_points = 40;       // downsampled cloud size after eviction
  int replay_delay_microseconds = 0;  // optional real-time emulation
};

struct SessionResult {
  BusMode mode = BusMode::Centralized;
  std::string root_agent;
  std::vector<MergeNotice> notices;
  std::map<std::string, Sim3Transform> agent_world_maps;  // into root frame
  MergedMap merged;  // connected component of the root agent
  std::vector<std::string> transcript;  // JSON lines
  std::map<std::string, double> stage_seconds;
};

// Breadth-first composition of pairwise merges from a designated root
// agent; every reachable agent receives the composed transform into the
// root agent's own world frame.
inline std::map<std::string, Sim3Transform> chain_merges(
    const std::vector<MergeNotice>& notices, const std::string& root,
    const std::vector<std::string>& required_agents = {}) {
  std::map<std::string, Sim3Transform> maps;
  maps[root] = Sim3Transform::identity();
  bool grew = true;
  std::vector<char> used(notices.size(), 0);
  while (grew) {
    grew = false;
    for (size_t k = 0; k < notices.size(); ++k) {
      if (used[k]) continue;
      const auto& n = notices[k];
      const bool have_s = maps.count(n.source_agent) > 0;
      const bool have_t = maps.count(n.target_agent) > 0;
      if (have_s && have_t)
        throw CyclicMerge("merge graph has a cycle at " + n.source_agent +
                          "-" + n.target_agent);
      if (!have_s && !have_t) continue;
      const Sim3Transform rel =
          n.sigma_scaling.inverse() * n.target_world;  // t world -> s world
      if (have_s)
        maps[n.target_agent] = maps.at(n.source_agent) * rel;
      else
        maps[n.source_agent] = maps.at(n.target_agent) * rel.inverse();
      used[k] = 1;
      grew = true;
    }
  }
  for (const auto& agent : required_agents)
    if (!maps.count(agent))
      throw DisconnectedAgents("agent " + agent +
                               " is not connected to the merge graph");
  return maps;
}

namespace detail {

struct MasterAgentState {
  AgentTrack track;           // poses always kept; old clouds downsampled
  std::set<int> full;         // indices still holding full keyframe data
  bool done = false;
};

struct PendingCandidate {
  std::string agent_a, agent_b;  // a holds index i, b holds index j
  int i = 0, j = 0;
  int gamma = 0;
};

inline std::int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

// The master side of a session over an arbitrary set of slave channels.
// Returns all merge notices found, replaying streams in lock-step rounds of
// one keyframe per agent.
class MergeMaster {
 public:
  MergeMaster(SessionParams params, std::vector<std::string>* transcript,
              std::map<std::string, double>* stages)
      : params_(std::move(params)), transcript_(transcript), stages_(stages) {}

  void log(json record) {
    if (!transcript_) return;
    record["t_us"] = detail::now_us();
    transcript_->push_back(record.dump());
  }

  void add_time(const std::string& stage, double seconds) {
    if (stages_) (*stages_)[stage] += seconds;
  }

  // Consumes one message; keyframe data is buffered, candidate loop
  // closures are detected and tried as soon as the adjacent keyframes of
  // both sides have arrived.
  void consume(const AgentMessage& msg) {
    if (const auto* hello = std::get_if<HelloMsg>(&msg)) {
      agents_[hello->agent].track.agent_id = hello->agent;
      log({{"kind", "msg"}, {"type", "hello"}, {"agent", hello->agent}});
      return;
    }
    if (const auto* bye = std::get_if<ByeMsg>(&msg)) {
      agents_[bye->agent].done = true;
      log({{"kind", "msg"}, {"type", "bye"}, {"agent", bye->agent}});
      return;
    }
    if (const auto* kf = std::get_if<KeyframeMsg>(&msg)) {
      auto& st = state_of(kf->keyframe.frame.agent);
      expect_index(st, kf->keyframe.frame.index);
      st.track.keyframes.push_back(kf->keyframe);
      st.full.insert(kf->keyframe.frame.index);
      log({{"kind", "msg"},
           {"type", "keyframe"},
           {"agent", kf->keyframe.frame.agent},
           {"index", kf->keyframe.frame.index},
           {"landmarks", kf->keyframe.landmarks_obs.size()}});
      return;
    }
    if (const auto* pose = std::get_if<PoseMsg>(&msg)) {
      auto& st = state_of(pose->frame.agent);
      keyframe_of(st, pose->frame.index).pose_local = pose->pose;
      log({{"kind", "msg"},
           {"type", "pose"},
           {"agent", pose->frame.agent},
           {"index", pose->frame.index}});
      return;
    }
    if (const auto* cloud = std::get_if<CloudMsg>(&msg)) {
      auto& st = state_of(cloud->frame.agent);
      keyframe_of(st, cloud->frame.index).cloud = cloud->cloud;
      log({{"kind", "msg"},
           {"type", "cloud"},
           {"agent", cloud->frame.agent},
           {"index", cloud->frame.index},
           {"points", cloud->cloud.points.size()}});
      on_keyframe_complete(cloud->frame.agent, cloud->frame.index);
      return;
    }
  }

  // Called after every consumed batch; tries pending candidates whose
  // neighbors have arrived.
  void flush_pending() {
    for (auto it = pending_.begin(); it != pending_.end();) {
      if (pair_merged(it->agent_a, it->agent_b)) {
        it = pending_.erase(it);
        continue;
      }
      const auto& sa = agents_.at(it->agent_a);
      const auto& sb = agents_.at(it->agent_b);
      const bool a_ready =
          it->i - 1 >= 0 &&
          (it->i + 1 < static_cast<int>(sa.track.keyframes.size()) ||
           (sa.done && it->i + 1 >= static_cast<int>(sa.track.keyframes.size())));
      const bool b_ready =
          it->j - 1 >= 0 &&
          (it->j + 1 < static_cast<int>(sb.track.keyframes.size()) ||
           (sb.done && it->j + 1 >= static_cast<int>(sb.track.keyframes.size())));
      if (!a_ready || !b_ready) {
        // Neighbors may still arrive.
        if (!sa.done || !sb.done) {
          ++it;
          continue;
        }
      }
      const bool ok = try_candidate(*it);
      it = pending_.erase(it);
      if (ok) {
        // Later candidates for the merged pair die in the next sweep.
      }
    }
  }

  const std::vector<MergeNotice>& notices() const { return notices_; }

  const std::map<std::string, detail::MasterAgentState>& agents() const {
    return agents_;
  }

 private:
  detail::MasterAgentState& state_of(const std::string& agent) {
    auto it = agents_.find(agent);
    if (it == agents_.end()) throw Error("message from unknown agent " + agent);
    return it->second;
  }

  void expect_index(const detail::MasterAgentState& st, int index) const {
    const int expected = static_cast<int>(st.track.keyframes.size());
    if (index != expected)
      throw Error("out-of-order keyframe: got " + std::to_string(index) +
                  ", expected " + std::to_string(expected));
  }

  Keyframe& keyframe_of(detail::MasterAgentState& st, int index) {
    if (index < 0 || index >= static_cast<int>(st.track.keyframes.size()))
      throw Error("message for unknown keyframe index");
    return st.track.keyframes[static_cast<size_t>(index)];
  }

  bool pair_merged(const std::string& a, const std::string& b) const {
    return merged_pairs_.count(a < b ? std::make_pair(a, b)
                                     : std::make_pair(b, a)) > 0;
  }

  // Downsamples clouds and drops observations of keyframes that fell out
  // of the adjacency buffer.
  void evict_old(detail::MasterAgentState& st) {
    while (static_cast<int>(st.full.size()) > params_.buffer_keyframes) {
      const int victim = *st.full.begin();
      st.full.erase(st.full.begin());
      auto& kf = st.track.keyframes[static_cast<size_t>(victim)];
      kf.landmarks_obs.clear();
      auto& pts = kf.cloud.points;
      if (static_cast<int>(pts.size()) > params_.summary_points) {
        PointCloud summary;
        const size_t stride = pts.size() / static_cast<size_t>(params_.summary_points);
        for (size_t k = 0; k < pts.size(); k += std::max<size_t>(1, stride))
          summary.points.push_back(pts[k]);
        kf.cloud = std::move(summary);
      }
    }
  }

  void on_keyframe_complete(const std::string& agent, int index) {
    auto& st = state_of(agent);
    evict_old(st);
    const auto t0 = std::chrono::steady_clock::now();
    const auto& kf = st.track.keyframes[static_cast<size_t>(index)];
    for (auto& [other_id, other] : agents_) {
      if (other_id == agent) continue;
      if (pair_merged(agent, other_id)) continue;
      for (const int oidx : other.full) {
        const auto& okf = other.track.keyframes[static_cast<size_t>(oidx)];
        const int gamma = gamma_between(kf, okf, params_.pipeline.detection);
        if (gamma >= params_.pipeline.detection.min_gamma) {
          pending_.push_back({agent, other_id, index, oidx, gamma});
          log({{"kind", "candidate"},
               {"agent_a", agent},
               {"index_a", index},
               {"agent_b", other_id},
               {"index_b", oidx},
               {"gamma", gamma}});
        }
      }
    }
    add_time("detect", detail::seconds_since(t0));
  }

  bool try_candidate(const detail::PendingCandidate& cand) {
    // Lexicographically smaller agent id acts as source.
    const bool a_is_source = cand.agent_a < cand.agent_b;
    const std::string source_id = a_is_source ? cand.agent_a : cand.agent_b;
    const std::string target_id = a_is_source ? cand.agent_b : cand.agent_a;
    const int i = a_is_source ? cand.i : cand.j;
    const int j = a_is_source ? cand.j : cand.i;
    const auto& source = agents_.at(source_id).track;
    const auto& target = agents_.at(target_id).track;

    LoopClosure lc;
    lc.source_frame = FrameId{source_id, i};
    lc.target_frame = FrameId{target_id, j};
    lc.correspondences = match_keyframes(
        source.keyframes[static_cast<size_t>(i)],
        target.keyframes[static_cast<size_t>(j)],
        params_.pipeline.detection.ratio_test);
    lc.gamma = static_cast<int>(lc.correspondences.size());
    if (lc.gamma < params_.pipeline.detection.min_gamma) return false;

    try {
      const PairPipeline pp =
          run_pair_pipeline(source, target, lc, params_.pipeline);
      MergeNotice notice;
      notice.source_agent = source_id;
      notice.target_agent = target_id;
      notice.sigma_scaling = pp.sigma_scaling;
      notice.final_tf = pp.final_tf;
      const auto& a_i =
          source.keyframes[static_cast<size_t>(i)].pose_local;
      const auto& b_j =
          target.keyframes[static_cast<size_t>(j)].pose_local;
      notice.target_world = pp.sigma_scaling * Sim3Transform::from_se3(a_i) *
                            pp.sigma_scaling.inverse() * pp.final_tf *
                            Sim3Transform::from_se3(b_j).inverse();
      notice.loop_report = loop_report(pp);
      notice.scale_report = scale_report(pp);
      notices_.push_back(notice);
      merged_pairs_.insert(source_id < target_id
                               ? std::make_pair(source_id, target_id)
                               : std::make_pair(target_id, source_id));
      add_time("scale", pp.t_scale);
      double reg = 0.0;
      for (const auto& r : pp.registrations) reg += r.seconds;
      add_time("registration", reg);
      add_time("merge", pp.t_merge);
      log({{"kind", "stage"},
           {"stage", "merge_notice"},
           {"source", source_id},
           {"target", target_id},
           {"sigma_star", pp.sigma_star},
           {"loop", notice.loop_report},
           {"scale", notice.scale_report}});
      return true;
    } catch (const Error& err) {
      log({{"kind", "skip"},
           {"agent_a", cand.agent_a},
           {"index_a", cand.i},
           {"agent_b", cand.agent_b},
           {"index_b", cand.j},
           {"reason", err.what()}});
      return false;
    }
  }

  SessionParams params_;
  std::vector<std::string>* transcript_;
  std::map<std::string, double>* stages_;
  std::map<std::string, detail::MasterAgentState> agents_;
  std::deque<detail::PendingCandidate> pending_;
  std::set<std::pair<std::string, std::string>> merged_pairs_;
  std::vector<MergeNotice> notices_;
};

// Replays a scenario over the bus. Centralized mode runs one master over
// all agents; distributed mode runs one pairwise session per agent pair
// (the lexicographically smaller agent acting as source). The pipeline
// math is identical in both modes.
inline SessionResult run_session(const Scenario& scenario, BusMode mode,
                                 const SessionParams& params = {}) {
  SessionResult result;
  result.mode = mode;

  auto replay = [&](const std::vector<const AgentTrack*>& tracks,
                    MergeMaster& master) {
    std::vector<MessageChannel> channels(tracks.size());
    for (size_t a = 0; a < tracks.size(); ++a) {
      channels[a].push(HelloMsg{tracks[a]->agent_id});
      for (const auto& kf : tracks[a]->keyframes) {
        Keyframe without_cloud = kf;
        without_cloud.cloud = {};
        without_cloud.pose_gt_global = SE3Transform{};  // never on the wire
        channels[a].push(KeyframeMsg{std::move(without_cloud)});
        channels[a].push(PoseMsg{kf.frame, kf.pose_local});
        channels[a].push(CloudMsg{kf.frame, kf.cloud});
      }
      channels[a].push(ByeMsg{tracks[a]->agent_id});
    }
    bool any = true;
    while (any) {
      any = false;
      for (size_t a = 0; a < tracks.size(); ++a) {
        // one keyframe (three records) or session control per round
        for (int burst = 0; burst < 3 && !channels[a].empty(); ++burst) {
          const auto msg = channels[a].pop();
          master.consume(*msg);
          any = true;
          if (std::holds_alternative<HelloMsg>(*msg) ||
              std::holds_alternative<ByeMsg>(*msg))
            break;
        }
      }
      master.flush_pending();
      if (params.replay_delay_microseconds > 0)
        std::this_thread::sleep_for(
            std::chrono::microseconds(params.replay_delay_microseconds));
    }
  };

  std::vector<const AgentTrack*> all_tracks;
  for (const auto& t : scenario.agents) all_tracks.push_back(&t);

  if (mode == BusMode::Centralized) {
    MergeMaster master(params, &result.transcript, &result.stage_seconds);
    replay(all_tracks, master);
    result.notices = master.notices();
  } else {
    for (size_t a = 0; a < all_tracks.size(); ++a)
      for (size_t b = a + 1; b < all_tracks.size(); ++b) {
        MergeMaster master(params, &result.transcript, &result.stage_seconds);
        const AgentTrack* lo = all_tracks[a];
        const AgentTrack* hi = all_tracks[b];
        if (hi->agent_id < lo->agent_id) std::swap(lo, hi);
        replay({lo, hi}, master);
        for (const auto& n : master.notices()) result.notices.push_back(n);
      }
  }

  if (result.notices.empty())
    throw SessionTimeout("no loop closure found within the streams");

  // Root agent: lexicographically smallest among all agents.
  result.root_agent = scenario.agents.front().agent_id;
  for (const auto& t : scenario.agents)
    result.root_agent = std::min(result.root_agent, t.agent_id);

  result.agent_world_maps = chain_merges(result.notices, result.root_agent);
  std::vector<const AgentTrack*> reached;
  std::vector<Sim3Transform> maps;
  for (const auto& t : scenario.agents)
    if (result.agent_world_maps.count(t.agent_id)) {
      reached.push_back(&t);
      maps.push_back(result.agent_world_maps.at(t.agent_id));
    }
  result.merged = build_merged_map(reached, maps);
  return result;
}

}  // namespace loopbox
