// Versioned JSON serialization of scenarios (schema v1) and small JSON
// helpers shared by the CLI and the experiment runner.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopbox/errors.hpp"
#include "loopbox/geometry.hpp"
#include "loopbox/scenario.hpp"

namespace loopbox {

using json = nlohmann::json;

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json to_json(const Rotation& r) {
  json out = json::array();
  const Mat3& m = r.matrix();
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) out.push_back(m(row, col));
  return out;
}

inline Rotation rotation_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9)
    throw ConfigError("expected a row-major 3x3 rotation");
  Mat3 m;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col)
      m(row, col) = j[static_cast<size_t>(3 * row + col)].get<double>();
  return Rotation::project(m);
}

inline json to_json(const SE3Transform& t) {
  return json{{"rotation", to_json(t.rotation)},
              {"translation", to_json(t.translation)}};
}

inline SE3Transform se3_from_json(const json& j) {
  return {rotation_from_json(j.at("rotation")),
          vec3_from_json(j.at("translation"))};
}

inline json to_json(const Sim3Transform& t) {
  return json{{"scale", t.scale},
              {"rotation", to_json(t.rotation)},
              {"translation", to_json(t.translation)}};
}

inline Sim3Transform sim3_from_json(const json& j) {
  return {j.at("scale").get<double>(), rotation_from_json(j.at("rotation")),
          vec3_from_json(j.at("translation"))};
}

inline json scenario_to_json(const Scenario& sc) {
  json agents = json::array();
  for (const auto& track : sc.agents) {
    json kfs = json::array();
    for (const auto& kf : track.keyframes) {
      json obs = json::array();
      for (const auto& o : kf.landmarks_obs) {
        json desc = json::array();
        for (Eigen::Index i = 0; i < o.descriptor.size(); ++i)
          desc.push_back(o.descriptor[i]);
        obs.push_back({{"id", o.landmark_id},
                       {"p", to_json(o.position_cam)},
                       {"d", desc}});
      }
      json cloud = json::array();
      for (const auto& p : kf.cloud.points) cloud.push_back(to_json(p));
      kfs.push_back({{"index", kf.frame.index},
                     {"pose", to_json(kf.pose_local)},
                     {"pose_gt", to_json(kf.pose_gt_global)},
                     {"observations", obs},
                     {"cloud", cloud}});
    }
    agents.push_back({{"id", track.agent_id},
                      {"local_scale", track.local_scale},
                      {"keyframes", kfs}});
  }
  json landmarks = json::array();
  for (const auto& l : sc.landmarks) landmarks.push_back(to_json(l));
  json gt = json::object();
  for (const auto& [agent, t] : sc.ground_truth) gt[agent] = to_json(t);
  json windows = json::array();
  for (const auto& w : sc.windows)
    windows.push_back({{"agent_a", w.agent_a},
                       {"agent_b", w.agent_b},
                       {"a_begin", w.a_begin},
                       {"a_end", w.a_end},
                       {"b_begin", w.b_begin},
                       {"b_end", w.b_end}});
  return json{{"schema", "loopbox.scenario"},
              {"version", 1},
              {"state", to_string(sc.state)},
              {"seed", sc.rng_seed},
              {"landmarks", landmarks},
              {"ground_truth", gt},
              {"agents", agents},
              {"windows", windows}};
}

inline Scenario scenario_from_json(const json& j) {
  if (j.value("schema", "") != "loopbox.scenario")
    throw ConfigError("not a loopbox.scenario document");
  if (j.value("version", 0) != 1)
    throw ConfigError("unsupported scenario schema version");
  Scenario sc;
  const auto state = scenario_state_from_string(j.at("state").get<std::string>());
  if (!state) throw ConfigError("unknown scenario state");
  sc.state = *state;
  sc.rng_seed = j.at("seed").get<std::uint64_t>();
  for (const auto& l : j.at("landmarks")) sc.landmarks.push_back(vec3_from_json(l));
  for (const auto& [agent, t] : j.at("ground_truth").items())
    sc.ground_truth[agent] = sim3_from_json(t);
  for (const auto& a : j.at("agents")) {
    AgentTrack track;
    track.agent_id = a.at("id").get<std::string>();
    track.local_scale = a.at("local_scale").get<double>();
    for (const auto& k : a.at("keyframes")) {
      Keyframe kf;
      kf.frame = FrameId{track.agent_id, k.at("index").get<std::int32_t>()};
      kf.pose_local = se3_from_json(k.at("pose"));
      kf.pose_gt_global = se3_from_json(k.at("pose_gt"));
      for (const auto& o : k.at("observations")) {
        LandmarkObs obs;
        obs.landmark_id = o.at("id").get<std::int64_t>();
        obs.position_cam = vec3_from_json(o.at("p"));
        const auto& d = o.at("d");
        obs.descriptor.resize(static_cast<Eigen::Index>(d.size()));
        for (size_t i = 0; i < d.size(); ++i)
          obs.descriptor[static_cast<Eigen::Index>(i)] = d[i].get<double>();
        kf.landmarks_obs.push_back(std::move(obs));
      }
      for (const auto& p : k.at("cloud"))
        kf.cloud.points.push_back(vec3_from_json(p));
      track.keyframes.push_back(std::move(kf));
    }
    sc.agents.push_back(std::move(track));
  }
  for (const auto& w : j.value("windows", json::array())) {
    CovisibleWindow cw;
    cw.agent_a = w.at("agent_a").get<std::string>();
    cw.agent_b = w.at("agent_b").get<std::string>();
    cw.a_begin = w.at("a_begin").get<int>();
    cw.a_end = w.at("a_end").get<int>();
    cw.b_begin = w.at("b_begin").get<int>();
    cw.b_end = w.at("b_end").get<int>();
    sc.windows.push_back(cw);
  }
  return sc;
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t k = 0; k < std::min(e.byte, text.size()); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
}

}  // namespace loopbox
