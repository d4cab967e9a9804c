// Batch evaluation: seeded scenario batches, per-method comparison rows,
// aggregated medians, and artifact export (results JSON, aligned table,
// merged PLY and TUM trajectories).

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopbox/errors.hpp"
#include "loopbox/metrics.hpp"
#include "loopbox/pipeline.hpp"
#include "loopbox/registration.hpp"
#include "loopbox/scenario.hpp"
#include "loopbox/serialization.hpp"

namespace loopbox {

struct ExperimentConfig {
  ScenarioState state = ScenarioState::SameDirSingleLC;
  std::vector<std::uint64_t> seeds;
  std::string noise = "default";  // "default" or "zero"
  ScenarioConfig scenario;        // noise profile already applied
  std::vector<MergeMethod> methods;
  // When set, the source/target scale ratio is drawn log-uniformly per
  // seed; otherwise scenario.agent_scales is used as-is.
  std::optional<std::array<double, 2>> scale_ratio_range;
  std::string out_dir;
  std::string artifacts = "first";  // "none", "first" or "all"
  PipelineParams pipeline;
};

inline ScenarioConfig apply_noise_profile(ScenarioConfig cfg,
                                          const std::string& noise) {
  if (noise == "zero") return cfg.with_zero_noise();
  if (noise == "default") return cfg;
  throw ConfigError("noise profile must be \"zero\" or \"default\", got \"" +
                    noise + "\"");
}

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError("config root must be an object");

  const auto state_str = j.value("state", std::string("b"));
  const auto state = scenario_state_from_string(state_str);
  if (!state) throw ConfigError("config.state: unknown state \"" + state_str + "\"");
  cfg.state = *state;

  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_array()) {
      for (const auto& v : s) cfg.seeds.push_back(v.get<std::uint64_t>());
    } else if (s.is_object()) {
      const auto start = s.value("start", 0ULL);
      const auto count = s.value("count", 0ULL);
      for (std::uint64_t k = 0; k < count; ++k) cfg.seeds.push_back(start + k);
    } else {
      throw ConfigError("config.seeds: must be an array or {start, count}");
    }
  }
  if (cfg.seeds.empty()) throw ConfigError("config.seeds: no seeds given");

  cfg.noise = j.value("noise", std::string("default"));
  cfg.scenario = apply_noise_profile(ScenarioConfig{}, cfg.noise);
  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    if (!s.is_object()) throw ConfigError("config.scenario: must be an object");
    cfg.scenario.keyframes_per_agent =
        s.value("keyframes_per_agent", cfg.scenario.keyframes_per_agent);
    cfg.scenario.window_keyframes =
        s.value("window_keyframes", cfg.scenario.window_keyframes);
    cfg.scenario.cloud_points = s.value("cloud_points", cfg.scenario.cloud_points);
    if (s.contains("agent_scales"))
      cfg.scenario.agent_scales =
          s.at("agent_scales").get<std::vector<double>>();
  }
  if (j.contains("scale_ratio_range")) {
    const auto& r = j.at("scale_ratio_range");
    if (!r.is_array() || r.size() != 2)
      throw ConfigError("config.scale_ratio_range: must be [lo, hi]");
    cfg.scale_ratio_range = {{r[0].get<double>(), r[1].get<double>()}};
  }

  if (!j.contains("methods") || !j.at("methods").is_array() ||
      j.at("methods").empty())
    throw ConfigError("config.methods: must be a non-empty array");
  for (const auto& m : j.at("methods")) {
    const auto method = merge_method_from_string(m.get<std::string>());
    if (!method)
      throw ConfigError("config.methods: unknown method \"" +
                        m.get<std::string>() + "\"");
    cfg.methods.push_back(*method);
  }

  cfg.out_dir = j.value("out_dir", std::string());
  cfg.artifacts = j.value("artifacts", std::string("first"));
  if (cfg.artifacts != "none" && cfg.artifacts != "first" &&
      cfg.artifacts != "all")
    throw ConfigError("config.artifacts: must be none, first or all");
  return cfg;
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  double sigma_gt = 1.0;
  double sigma_star = 1.0;
  double detect_seconds = 0.0;
  double scale_seconds = 0.0;
  std::vector<ComparisonRow> rows;
  std::string error;  // whole-seed failure
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedOutcome> outcomes;
  std::map<MergeMethod, double> median_rmse;
  std::map<MergeMethod, double> median_wall_seconds;
};

inline ScenarioConfig seed_scenario_config(const ExperimentConfig& cfg,
                                           std::uint64_t seed) {
  ScenarioConfig sc = cfg.scenario;
  if (cfg.scale_ratio_range) {
    std::mt19937_64 rng(mix_seed(seed, 0x5ca1eULL));
    std::uniform_real_distribution<double> u(std::log((*cfg.scale_ratio_range)[0]),
                                             std::log((*cfg.scale_ratio_range)[1]));
    sc.agent_scales = {std::exp(u(rng)), 1.0};
  }
  return sc;
}

inline SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  out.seed = seed;
  try {
    const Scenario scenario =
        generate(cfg.state, seed_scenario_config(cfg, seed), seed);
    out.sigma_gt = scenario.gt_scale_ratio("A", "B");

    const auto t0 = std::chrono::steady_clock::now();
    const auto lc = detect_first_loop(scenario.track("A"), scenario.track("B"),
                                      cfg.pipeline.detection);
    out.detect_seconds = detail::seconds_since(t0);
    if (!lc) throw SessionTimeout("no loop closure in scenario");

    const PairPipeline pp =
        run_pair_pipeline(scenario.track("A"), scenario.track("B"), *lc,
                          cfg.pipeline, out.detect_seconds);
    out.sigma_star = pp.sigma_star;
    out.scale_seconds = pp.t_scale;
    out.rows = compare_configurations(scenario, pp, cfg.methods, cfg.pipeline);
  } catch (const Error& err) {
    out.error = err.what();
  }
  return out;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  res.config = cfg;
  for (const auto seed : cfg.seeds) res.outcomes.push_back(run_seed(cfg, seed));

  for (const MergeMethod m : cfg.methods) {
    std::vector<double> rmses, walls;
    for (const auto& o : res.outcomes)
      for (const auto& row : o.rows)
        if (row.method == m && row.error.empty()) {
          rmses.push_back(row.rmse);
          walls.push_back(row.wall_time_seconds);
        }
    if (!rmses.empty()) {
      res.median_rmse[m] = median_of(rmses);
      res.median_wall_seconds[m] = median_of(walls);
    }
  }
  return res;
}

// Timing fields all end in "_seconds" so deterministic comparisons can
// strip them.
inline json experiment_to_json(const ExperimentResult& res) {
  json seeds = json::array();
  for (const auto& o : res.outcomes) {
    json rows = json::array();
    for (const auto& row : o.rows) {
      json r{{"method", to_string(row.method)},
             {"rmse", row.rmse},
             {"wall_time_seconds", row.wall_time_seconds},
             {"scale_error_percent", row.scale_error_percent}};
      if (!row.error.empty()) r["error"] = row.error;
      rows.push_back(r);
    }
    json s{{"seed", o.seed},
           {"sigma_gt", o.sigma_gt},
           {"sigma_star", o.sigma_star},
           {"detect_seconds", o.detect_seconds},
           {"scale_estimation_seconds", o.scale_seconds},
           {"rows", rows}};
    if (!o.error.empty()) s["error"] = o.error;
    seeds.push_back(s);
  }
  json medians = json::object();
  for (const auto& [m, v] : res.median_rmse)
    medians[to_string(m)] = {
        {"rmse", v},
        {"wall_time_seconds", res.median_wall_seconds.at(m)}};
  return json{{"state", to_string(res.config.state)},
              {"noise", res.config.noise},
              {"seeds", seeds},
              {"medians", medians}};
}

// Drops every key ending in "_seconds", recursively; used to compare runs.
inline json strip_timing_fields(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (const auto& [k, v] : j.items()) {
      if (k.size() >= 8 && k.compare(k.size() - 8, 8, "_seconds") == 0)
        continue;
      out[k] = strip_timing_fields(v);
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(strip_timing_fields(v));
    return out;
  }
  return j;
}

inline std::string experiment_table(const ExperimentResult& res) {
  std::ostringstream os;
  os << "state " << to_string(res.config.state) << ", noise "
     << res.config.noise << ", " << res.config.seeds.size() << " seeds\n";
  os << std::left << std::setw(20) << "method" << std::right << std::setw(14)
     << "median RMSE" << std::setw(16) << "median time(s)" << "\n";
  for (const MergeMethod m : res.config.methods) {
    os << std::left << std::setw(20) << to_string(m);
    if (res.median_rmse.count(m)) {
      os << std::right << std::fixed << std::setprecision(6) << std::setw(14)
         << res.median_rmse.at(m) << std::setprecision(4) << std::setw(16)
         << res.median_wall_seconds.at(m);
    } else {
      os << std::right << std::setw(14) << "-" << std::setw(16) << "-";
    }
    os << "\n";
  }
  return os.str();
}

// Writes merged map artifacts for one method run.
inline void write_method_artifacts(const std::filesystem::path& dir,
                                   const MergedMap& map) {
  std::filesystem::create_directories(dir);
  write_ply_file((dir / "merged.ply").string(), map.cloud, &map.agent_of_point);
  for (const auto& agent : map.agent_ids) {
    std::vector<Sim3Transform> poses;
    for (const auto& kf : map.keyframes)
      if (kf.frame.agent == agent) poses.push_back(kf.pose_merged);
    std::ofstream os(dir / ("trajectory_" + agent + ".tum"));
    write_tum(os, poses);
  }
}

inline void export_experiment(const ExperimentResult& res,
                              const std::string& out_dir) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  write_json_file((std::filesystem::path(out_dir) / "results.json").string(),
                  experiment_to_json(res));
  std::ofstream table(std::filesystem::path(out_dir) / "table.txt");
  table << experiment_table(res);

  if (res.config.artifacts == "none") return;
  for (size_t k = 0; k < res.outcomes.size(); ++k) {
    if (res.config.artifacts == "first" && k > 0) break;
    const auto& o = res.outcomes[k];
    if (!o.error.empty()) continue;
    const ScenarioConfig sc = seed_scenario_config(res.config, o.seed);
    const Scenario scenario = generate(res.config.state, sc, o.seed);
    const auto lc = detect_first_loop(scenario.track("A"), scenario.track("B"),
                                      res.config.pipeline.detection);
    if (!lc) continue;
    const PairPipeline pp = run_pair_pipeline(
        scenario.track("A"), scenario.track("B"), *lc, res.config.pipeline);
    for (const auto& row : o.rows) {
      if (!row.error.empty()) continue;
      const MethodRun run =
          run_method(pp, scenario.track("A"), scenario.track("B"), row.method,
                     res.config.pipeline);
      write_method_artifacts(std::filesystem::path(out_dir) /
                                 ("seed_" + std::to_string(o.seed)) /
                                 to_string(row.method),
                             run.map);
    }
  }
}

}  // namespace loopbox
