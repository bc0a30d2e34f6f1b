// Copyright 2026 The OAP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flat `key = value` configuration (one pair per line, `#` starts a comment)
// for a whole experiment: adaptation hyper-parameters, generator, pre-training
// recipe, scenario and run mode.

#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "oap/domain.hpp"
#include "oap/error.hpp"
#include "oap/head.hpp"
#include "oap/simstream.hpp"

namespace oap {

enum class RunMode { Oap, Frozen, Ema };

/// single: every segment is an independent video with a fresh engine.
/// continual: all segments form one stream handled by one engine.
enum class Evaluation { Single, Continual };

constexpr std::string_view to_string(RunMode m) noexcept {
  switch (m) {
    case RunMode::Oap: return "oap";
    case RunMode::Frozen: return "frozen";
    case RunMode::Ema: return "ema";
  }
  return "oap";
}

constexpr std::string_view to_string(Evaluation e) noexcept {
  return e == Evaluation::Single ? "single" : "continual";
}

/// Online learning rate used by the desk-scale experiments. At the library
/// default of 1e-6, Adam steps leave a head over 32-d synthetic features
/// practically unchanged for the length of a 30 s video.
inline constexpr double kDeskOnlineLearningRate = 2e-5;

struct ExperimentConfig {
  HyperParams params = [] {
    HyperParams p;
    p.learning_rate = kDeskOnlineLearningRate;
    return p;
  }();
  GeneratorConfig generator;
  PretrainSchedule pretrain;
  std::size_t train_users = 20;
  std::size_t frames_per_user = 500;
  std::vector<Segment> segments = parse_segments("live:900,spoof:900");
  std::uint64_t user_id = 0;
  Evaluation evaluation = Evaluation::Single;
  RunMode mode = RunMode::Oap;
  std::size_t seeds = 3;
  double ema_momentum = 0.9;
  bool ema_reset = true;
  std::string out = "out";

  StreamScenario scenario(std::size_t seed_index = 0) const {
    return StreamScenario{segments, params.frame_rate, user_id + seed_index};
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("config: bad value '" + std::string(text) + "' for " + std::string(key));
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw ConfigError("config: bad boolean '" + std::string(text) + "' for " + std::string(key));
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct ConfigField {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define OAP_NUM_FIELD(expr, type)                                                             \
  ConfigField {                                                                               \
    [](ExperimentConfig& c, std::string_view v) { c.expr = parse_number<type>(#expr, v); },   \
        [](const ExperimentConfig& c) {                                                       \
          if constexpr (std::is_floating_point_v<type>) return format_double(c.expr);         \
          else return std::to_string(c.expr);                                                 \
        }                                                                                     \
  }

inline const std::vector<std::pair<std::string, ConfigField>>& config_fields() {
  static const std::vector<std::pair<std::string, ConfigField>> fields = [] {
    std::vector<std::pair<std::string, ConfigField>> f;
    f.emplace_back("margin", OAP_NUM_FIELD(params.margin, double));
    f.emplace_back("window", OAP_NUM_FIELD(params.window, int));
    f.emplace_back("eviction_horizon", OAP_NUM_FIELD(params.eviction_horizon, double));
    f.emplace_back("frame_rate", OAP_NUM_FIELD(params.frame_rate, double));
    f.emplace_back("finetune_frequency", OAP_NUM_FIELD(params.finetune_frequency, double));
    f.emplace_back("iterations_per_call", OAP_NUM_FIELD(params.iterations_per_call, int));
    f.emplace_back("online_probability", OAP_NUM_FIELD(params.online_probability, double));
    f.emplace_back("batch_size", OAP_NUM_FIELD(params.batch_size, int));
    f.emplace_back("learning_rate", OAP_NUM_FIELD(params.learning_rate, double));
    f.emplace_back("weight_decay", OAP_NUM_FIELD(params.weight_decay, double));
    f.emplace_back("replay_size", OAP_NUM_FIELD(params.replay_size, std::size_t));
    f.emplace_back("eval_threshold", OAP_NUM_FIELD(params.eval_threshold, double));
    f.emplace_back("seed", OAP_NUM_FIELD(params.seed, std::uint64_t));
    f.emplace_back("flop_calibration", OAP_NUM_FIELD(params.flop_calibration, double));

    f.emplace_back("dim", OAP_NUM_FIELD(generator.dim, std::size_t));
    f.emplace_back("class_separation", OAP_NUM_FIELD(generator.class_separation, double));
    f.emplace_back("user_shift_scale", OAP_NUM_FIELD(generator.user_shift_scale, double));
    f.emplace_back("source_shift_scale", OAP_NUM_FIELD(generator.source_shift_scale, double));
    f.emplace_back("drift_rate", OAP_NUM_FIELD(generator.drift_rate, double));
    f.emplace_back("noise_std", OAP_NUM_FIELD(generator.noise_std, double));
    f.emplace_back("sources_per_class", OAP_NUM_FIELD(generator.sources_per_class, std::size_t));
    f.emplace_back("generator_seed", OAP_NUM_FIELD(generator.seed, std::uint64_t));
    f.emplace_back("train_users", OAP_NUM_FIELD(train_users, std::size_t));
    f.emplace_back("frames_per_user", OAP_NUM_FIELD(frames_per_user, std::size_t));

    f.emplace_back("pretrain_iterations", OAP_NUM_FIELD(pretrain.iterations, std::size_t));
    f.emplace_back("pretrain_batch_size", OAP_NUM_FIELD(pretrain.batch_size, std::size_t));
    f.emplace_back("pretrain_learning_rate", OAP_NUM_FIELD(pretrain.learning_rate, double));
    f.emplace_back("pretrain_gamma", OAP_NUM_FIELD(pretrain.gamma, double));
    f.emplace_back("pretrain_decay_every", OAP_NUM_FIELD(pretrain.decay_every, std::size_t));
    f.emplace_back("pretrain_weight_decay", OAP_NUM_FIELD(pretrain.weight_decay, double));

    f.emplace_back("segments",
                   ConfigField{[](ExperimentConfig& c, std::string_view v) { c.segments = parse_segments(v); },
                               [](const ExperimentConfig& c) { return format_segments(c.segments); }});
    f.emplace_back("user_id", OAP_NUM_FIELD(user_id, std::uint64_t));
    f.emplace_back("evaluation",
                   ConfigField{[](ExperimentConfig& c, std::string_view v) {
                                 if (v == "single") c.evaluation = Evaluation::Single;
                                 else if (v == "continual") c.evaluation = Evaluation::Continual;
                                 else throw ConfigError("config: evaluation must be single or continual");
                               },
                               [](const ExperimentConfig& c) { return std::string(to_string(c.evaluation)); }});
    f.emplace_back("mode",
                   ConfigField{[](ExperimentConfig& c, std::string_view v) {
                                 if (v == "oap") c.mode = RunMode::Oap;
                                 else if (v == "frozen") c.mode = RunMode::Frozen;
                                 else if (v == "ema") c.mode = RunMode::Ema;
                                 else throw ConfigError("config: mode must be oap, frozen or ema");
                               },
                               [](const ExperimentConfig& c) { return std::string(to_string(c.mode)); }});
    f.emplace_back("seeds", OAP_NUM_FIELD(seeds, std::size_t));
    f.emplace_back("ema_momentum", OAP_NUM_FIELD(ema_momentum, double));
    f.emplace_back("ema_reset",
                   ConfigField{[](ExperimentConfig& c, std::string_view v) { c.ema_reset = parse_bool("ema_reset", v); },
                               [](const ExperimentConfig& c) { return std::string(c.ema_reset ? "1" : "0"); }});
    f.emplace_back("out", ConfigField{[](ExperimentConfig& c, std::string_view v) { c.out = std::string(v); },
                                      [](const ExperimentConfig& c) { return c.out; }});
    return f;
  }();
  return fields;
}

#undef OAP_NUM_FIELD

}  // namespace detail

/// Aliases accepted on input for the Greek-letter parameters.
inline std::string canonical_key(std::string_view key) {
  if (key == "nu") return "finetune_frequency";
  if (key == "alpha") return "online_probability";
  if (key == "delta") return "margin";
  if (key == "K") return "iterations_per_call";
  return std::string(key);
}

inline void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const std::string k = canonical_key(detail::trim(key));
  for (const auto& [name, field] : detail::config_fields()) {
    if (name == k) {
      try {
        field.set(cfg, detail::trim(value));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()) + " (key '" + k + "')");
      }
      return;
    }
  }
  throw ConfigError("config: unknown key '" + k + "'");
}

/// Parses "key=value" (as given to --set).
inline void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set_config_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

inline void read_config(std::istream& is, ExperimentConfig& cfg) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view s(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const std::size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
}

inline void load_config(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  read_config(is, cfg);
}

/// Every key with its resolved value, in a fixed order. Reading this back
/// reproduces `cfg` exactly.
inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  for (const auto& [name, field] : detail::config_fields()) os << name << " = " << field.get(cfg) << '\n';
}

inline std::string config_to_string(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  return os.str();
}

/// Range checks over the whole experiment.
inline const ExperimentConfig& validate(const ExperimentConfig& cfg) {
  validate(cfg.params);
  validate(cfg.generator);
  validate(cfg.scenario());
  if (cfg.seeds == 0) throw ConfigError("seeds out of range: must be >= 1");
  if (cfg.train_users < 2) throw ConfigError("train_users out of range: must be >= 2");
  if (cfg.frames_per_user < 2) throw ConfigError("frames_per_user out of range: must be >= 2");
  if (cfg.pretrain.batch_size == 0) throw ConfigError("pretrain_batch_size out of range: must be >= 1");
  if (!(cfg.ema_momentum >= 0.0 && cfg.ema_momentum < 1.0))
    detail::range_error("ema_momentum", "[0, 1)", cfg.ema_momentum);
  return cfg;
}

}  // namespace oap
