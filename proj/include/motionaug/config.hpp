#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "motionaug/error.hpp"
#include "motionaug/protocol.hpp"
#include "motionaug/synth.hpp"

namespace motionaug {

/// Where a sweep gets its samples: a windowed-sample file or the generator.
struct DatasetSource {
  std::optional<std::string> path;
  std::optional<SynthConfig> synthetic;
};

struct SweepConfig {
  ExperimentConfig experiment;
  DatasetSource dataset;
};

namespace detail {

using nlohmann::json;

inline void require_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

inline std::vector<double> number_list(const json& j, std::string_view where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(std::string(where) + " must be a list of numbers");
    out.push_back(v.get<double>());
  }
  if (out.empty()) throw ConfigError(std::string(where) + " is empty");
  return out;
}

inline std::size_t positive_count(const json& j, std::string_view where) {
  if (!j.is_number_integer() || j.get<long long>() <= 0)
    throw ConfigError(std::string(where) + " must be a positive integer");
  return j.get<std::size_t>();
}

inline WarpDirection parse_direction(const std::string& s) {
  if (s == "lr" || s == "L->R") return WarpDirection::LeftToRight;
  if (s == "rl" || s == "L<-R") return WarpDirection::RightToLeft;
  throw ConfigError("warp direction must be 'lr' or 'rl', got '" + s + "'");
}

inline SynthConfig parse_synth(const json& j) {
  require_keys(j, "dataset.synthetic",
               {"users", "samples_per_user", "length", "channels", "sample_rate_hz", "components",
                "min_freq_hz", "max_freq_hz", "amplitude", "jitter_std", "seed"});
  SynthConfig c;
  if (j.contains("users")) c.n_users = positive_count(j["users"], "users");
  if (j.contains("samples_per_user")) c.samples_per_user = positive_count(j["samples_per_user"], "samples_per_user");
  if (j.contains("length")) c.length = positive_count(j["length"], "length");
  if (j.contains("channels")) c.n_channels = positive_count(j["channels"], "channels");
  if (j.contains("components")) c.components = positive_count(j["components"], "components");
  if (j.contains("sample_rate_hz")) c.sample_rate_hz = j["sample_rate_hz"].get<double>();
  if (j.contains("min_freq_hz")) c.min_freq_hz = j["min_freq_hz"].get<double>();
  if (j.contains("max_freq_hz")) c.max_freq_hz = j["max_freq_hz"].get<double>();
  if (j.contains("amplitude")) c.amplitude = j["amplitude"].get<double>();
  if (j.contains("jitter_std")) c.jitter_std = j["jitter_std"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ComboEntry parse_combo_entry(const json& j) {
  require_keys(j, "combined.methods[]", {"method", "sigma", "f_t", "f_i", "direction"});
  if (!j.contains("method") || !j["method"].is_string()) throw ConfigError("combined entry needs a 'method'");
  const auto m = j["method"].get<std::string>();
  ComboEntry e;
  auto value = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || (j[key].is_string() && j[key] == "best")) return std::nullopt;
    if (!j[key].is_number()) throw ConfigError(std::string("combined entry '") + key + "' must be a number or \"best\"");
    return j[key].get<double>();
  };
  if (m == "noise") {
    e.family = Family::Noise;
    e.value = value("sigma");
  } else if (m == "temporal") {
    e.family = Family::Temporal;
    e.value = value("f_t");
  } else if (m == "intensity") {
    e.family = Family::Intensity;
    e.value = value("f_i");
  } else if (m == "warp") {
    e.family = Family::Warp;
    if (j.contains("direction") && j["direction"] != "best") e.direction = parse_direction(j["direction"]);
  } else {
    throw ConfigError("unknown combined method '" + m + "'");
  }
  return e;
}

}  // namespace detail

/// Parses and fully validates a sweep configuration. Relative dataset and
/// embedding-table paths resolve against `base_dir`.
inline SweepConfig parse_sweep_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  detail::require_keys(j, "config",
                       {"mode", "seed", "threads", "dataset", "provider", "eval_users", "negative_pools", "split",
                        "svm", "calibration", "augmentation", "combined"});
  SweepConfig sc;
  auto& cfg = sc.experiment;
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).string();
  };

  const std::string mode = j.value("mode", "standard");
  if (mode != "standard" && mode != "exploratory") throw ConfigError("mode must be 'standard' or 'exploratory'");
  cfg.exploratory = mode == "exploratory";
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = detail::positive_count(j["threads"], "threads");

  if (!j.contains("dataset")) throw ConfigError("config needs a 'dataset'");
  const auto& d = j["dataset"];
  detail::require_keys(d, "dataset", {"path", "synthetic"});
  if (d.contains("path") == d.contains("synthetic"))
    throw ConfigError("dataset needs exactly one of 'path' or 'synthetic'");
  if (d.contains("path")) sc.dataset.path = resolve(d["path"].get<std::string>());
  else sc.dataset.synthetic = detail::parse_synth(d["synthetic"]);

  cfg.provider = j.value("provider", "statistical");
  if (cfg.provider.starts_with("table:")) cfg.provider = "table:" + resolve(cfg.provider.substr(6));
  else if (cfg.provider != "statistical") throw ConfigError("provider must be 'statistical' or 'table:<path>'");

  if (j.contains("eval_users")) {
    const auto& e = j["eval_users"];
    if (e.is_string()) {
      if (e != "second-half") throw ConfigError("eval_users must be \"second-half\" or a list of user ids");
    } else if (e.is_array() && !e.empty()) {
      for (const auto& u : e) cfg.eval_users.push_back(u.get<std::string>());
    } else {
      throw ConfigError("eval_users must be \"second-half\" or a non-empty list of user ids");
    }
  }

  const std::string pools = j.value("negative_pools", "eval-alternate");
  if (pools == "eval-alternate") cfg.pools = PoolRule::EvalAlternate;
  else if (pools == "all-alternate") cfg.pools = PoolRule::AllAlternate;
  else throw ConfigError("negative_pools must be 'eval-alternate' or 'all-alternate'");

  if (j.contains("split")) {
    const auto& s = j["split"];
    detail::require_keys(s, "split", {"train_pos", "test_pos", "train_neg", "test_neg"});
    if (s.contains("train_pos")) cfg.split.train_pos = detail::positive_count(s["train_pos"], "split.train_pos");
    if (s.contains("test_pos")) cfg.split.test_pos = detail::positive_count(s["test_pos"], "split.test_pos");
    if (s.contains("train_neg")) cfg.split.train_neg = detail::positive_count(s["train_neg"], "split.train_neg");
    if (s.contains("test_neg")) cfg.split.test_neg = detail::positive_count(s["test_neg"], "split.test_neg");
  }

  if (j.contains("svm")) {
    const auto& s = j["svm"];
    detail::require_keys(s, "svm", {"kernels", "C", "gamma", "tolerance", "max_passes"});
    if (s.contains("kernels")) {
      if (!s["kernels"].is_array()) throw ConfigError("svm.kernels must be a list");
      cfg.grid.kernels.clear();
      for (const auto& k : s["kernels"]) {
        const auto parsed = parse_kernel(k.get<std::string>());
        if (!parsed) throw ConfigError("unknown kernel '" + k.get<std::string>() + "'");
        cfg.grid.kernels.push_back(*parsed);
      }
      if (cfg.grid.kernels.empty()) throw ConfigError("svm.kernels is empty");
    }
    if (s.contains("C")) cfg.grid.Cs = detail::number_list(s["C"], "svm.C");
    if (s.contains("gamma")) {
      if (s["gamma"].is_number()) cfg.grid.gamma = s["gamma"].get<double>();
      else if (s["gamma"] != "auto") throw ConfigError("svm.gamma must be a number or \"auto\"");
    }
    if (s.contains("tolerance")) cfg.grid.tolerance = s["tolerance"].get<double>();
    if (s.contains("max_passes")) cfg.grid.max_passes = detail::positive_count(s["max_passes"], "svm.max_passes");
  }

  const std::string calib = j.value("calibration", "test");
  if (calib == "test") cfg.calibration = CalibrationMode::Test;
  else if (calib == "train") cfg.calibration = CalibrationMode::Train;
  else throw ConfigError("calibration must be 'test' or 'train'");

  if (j.contains("augmentation")) {
    const auto& a = j["augmentation"];
    detail::require_keys(a, "augmentation", {"ratios", "noise", "temporal", "intensity", "warp"});
    auto& sw = cfg.sweep;
    if (a.contains("ratios")) sw.ratios = detail::number_list(a["ratios"], "augmentation.ratios");
    if (a.contains("noise")) {
      detail::require_keys(a["noise"], "augmentation.noise", {"sigma", "mu"});
      sw.sigmas = detail::number_list(a["noise"].value("sigma", json::array()), "augmentation.noise.sigma");
      sw.mu = a["noise"].value("mu", 0.0);
    }
    if (a.contains("temporal")) {
      detail::require_keys(a["temporal"], "augmentation.temporal", {"f_t"});
      sw.f_ts = detail::number_list(a["temporal"].value("f_t", json::array()), "augmentation.temporal.f_t");
    }
    if (a.contains("intensity")) {
      detail::require_keys(a["intensity"], "augmentation.intensity", {"f_i"});
      sw.f_is = detail::number_list(a["intensity"].value("f_i", json::array()), "augmentation.intensity.f_i");
    }
    if (a.contains("warp")) {
      detail::require_keys(a["warp"], "augmentation.warp", {"directions"});
      const auto dirs = a["warp"].value("directions", json::array());
      if (!dirs.is_array() || dirs.empty()) throw ConfigError("augmentation.warp.directions is empty");
      for (const auto& x : dirs) sw.warps.push_back(detail::parse_direction(x.get<std::string>()));
    }
    if (sw.ratios.empty()) throw ConfigError("augmentation.ratios is required when augmenting");
  }

  if (j.contains("combined")) {
    if (!j["combined"].is_array()) throw ConfigError("combined must be a list");
    for (const auto& c : j["combined"]) {
      detail::require_keys(c, "combined[]", {"name", "ratio", "methods"});
      CombinedPlanSpec spec;
      spec.name = c.value("name", "");
      if (spec.name.empty()) throw ConfigError("combined plan needs a name");
      if (spec.name.find_first_of(",\n\"") != std::string::npos)
        throw ConfigError("combined plan name '" + spec.name + "' may not contain commas, quotes or newlines");
      spec.ratio = c.value("ratio", 1.0);
      if (!c.contains("methods") || !c["methods"].is_array() || c["methods"].empty())
        throw ConfigError("combined plan '" + spec.name + "' needs a non-empty 'methods' list");
      for (const auto& m : c["methods"]) spec.entries.push_back(detail::parse_combo_entry(m));
      cfg.combined.push_back(std::move(spec));
    }
  }

  validate_config(cfg);
  return sc;
}

inline SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  try {
    return parse_sweep_config(j, std::filesystem::path(path).parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

/// The full independent-and-combined grid on 100 synthetic users: every
/// sigma / f_T / f_I / warp direction at ratios 1x and 0.5x, both kernels,
/// C in {1, 10, 100}, and two combined plans at 1x.
inline nlohmann::json reference_sweep_json() {
  return nlohmann::json::parse(R"({
    "mode": "standard",
    "seed": 2020,
    "dataset": {"synthetic": {"users": 100, "samples_per_user": 200, "length": 150, "channels": 6,
                              "amplitude": 1.0, "jitter_std": 0.1, "seed": 7}},
    "provider": "statistical",
    "eval_users": "second-half",
    "negative_pools": "eval-alternate",
    "svm": {"kernels": ["linear", "rbf"], "C": [1, 10, 100], "gamma": "auto",
            "tolerance": 1e-6, "max_passes": 10000},
    "calibration": "test",
    "augmentation": {
      "ratios": [1.0, 0.5],
      "noise": {"sigma": [0.0125, 0.025, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]},
      "temporal": {"f_t": [0.8, 0.9, 0.95, 0.975, 0.9875, 1.0125, 1.025, 1.05, 1.1, 1.2]},
      "intensity": {"f_i": [0.8, 0.9, 0.95, 0.975, 0.9875, 1.0125, 1.025, 1.05, 1.1, 1.2]},
      "warp": {"directions": ["lr", "rl"]}
    },
    "combined": [
      {"name": "All augmentation methods", "ratio": 1.0,
       "methods": [{"method": "noise", "sigma": "best"}, {"method": "temporal", "f_t": "best"},
                   {"method": "intensity", "f_i": "best"}, {"method": "warp", "direction": "best"}]},
      {"name": "Random noise+temporal scaling", "ratio": 1.0,
       "methods": [{"method": "noise", "sigma": "best"}, {"method": "temporal", "f_t": "best"}]}
    ]
  })");
}

}  // namespace motionaug
