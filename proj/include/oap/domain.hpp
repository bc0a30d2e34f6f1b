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

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oap/error.hpp"

namespace oap {

enum class ClassLabel : std::uint8_t { Live = 0, Spoof = 1 };

enum class PseudoLabel : std::uint8_t { Live = 0, Spoof = 1, Discard = 2 };

constexpr int to_int(ClassLabel l) noexcept { return static_cast<int>(l); }

constexpr std::string_view to_string(ClassLabel l) noexcept {
  return l == ClassLabel::Live ? "live" : "spoof";
}

constexpr std::string_view to_string(PseudoLabel l) noexcept {
  switch (l) {
    case PseudoLabel::Live: return "live";
    case PseudoLabel::Spoof: return "spoof";
    case PseudoLabel::Discard: return "discard";
  }
  return "discard";
}

/// Accepted pseudo-labels map onto class labels; Discard has no class.
constexpr std::optional<ClassLabel> to_class(PseudoLabel l) noexcept {
  switch (l) {
    case PseudoLabel::Live: return ClassLabel::Live;
    case PseudoLabel::Spoof: return ClassLabel::Spoof;
    case PseudoLabel::Discard: return std::nullopt;
  }
  return std::nullopt;
}

constexpr PseudoLabel to_pseudo(ClassLabel l) noexcept {
  return l == ClassLabel::Live ? PseudoLabel::Live : PseudoLabel::Spoof;
}

inline std::optional<ClassLabel> parse_class_label(std::string_view s) {
  if (s == "live" || s == "0") return ClassLabel::Live;
  if (s == "spoof" || s == "1") return ClassLabel::Spoof;
  return std::nullopt;
}

/// Latent representation of one frame. The only per-frame payload the engine
/// ever stores.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(std::vector<double> values) : values_(std::move(values)) {}
  FeatureVector(std::initializer_list<double> values) : values_(values) {}
  explicit FeatureVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const noexcept {
    for (const double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::vector<double> values_;
};

/// A feature paired with a known (ground-truth or replayed) class.
struct LabeledFeature {
  FeatureVector features;
  ClassLabel label = ClassLabel::Live;
};

/// Online adaptation hyper-parameters. Defaults are the reference operating
/// point for backbone-sized features.
struct HyperParams {
  double margin = 0.01;             // delta: accept spoof above 1-delta, live below delta
  int window = 30;                  // smoothing window W, frames
  double eviction_horizon = 4.0;    // seconds
  double frame_rate = 30.0;         // frames per second
  double finetune_frequency = 1.0;  // nu, fine-tune calls per frame
  int iterations_per_call = 1;      // K
  double online_probability = 0.9;  // alpha
  int batch_size = 16;              // B
  double learning_rate = 1e-6;
  double weight_decay = 0.0;
  std::size_t replay_size = 1000;
  double eval_threshold = 0.5;
  std::uint64_t seed = 0;
  double flop_calibration = 1.0;    // multiplier applied by adaptation_cost

  double spoof_threshold() const noexcept { return 1.0 - margin; }
  double live_threshold() const noexcept { return margin; }
};

namespace detail {

template <class T>
[[noreturn]] void range_error(std::string_view field, std::string_view range, T value) {
  std::ostringstream os;
  os << field << " out of range: " << value << " not in " << range;
  throw ConfigError(os.str());
}

}  // namespace detail

/// Returns `p` unchanged when every field is in range, otherwise throws
/// ConfigError naming the first offending field.
inline HyperParams validate(const HyperParams& p) {
  if (!(p.margin > 0.0 && p.margin <= 0.5)) detail::range_error("margin", "(0, 0.5]", p.margin);
  if (p.window < 0 || p.window % 2 != 0)
    detail::range_error("window", "non-negative even integers", p.window);
  if (!(p.eviction_horizon > 0.0) || !std::isfinite(p.eviction_horizon))
    detail::range_error("eviction_horizon", "(0, inf)", p.eviction_horizon);
  if (!(p.frame_rate > 0.0) || !std::isfinite(p.frame_rate))
    detail::range_error("frame_rate", "(0, inf)", p.frame_rate);
  if (!(p.finetune_frequency > 0.0 && p.finetune_frequency <= 1.0))
    detail::range_error("finetune_frequency", "(0, 1]", p.finetune_frequency);
  if (p.iterations_per_call < 1)
    detail::range_error("iterations_per_call", "[1, inf)", p.iterations_per_call);
  if (!(p.online_probability >= 0.0 && p.online_probability <= 1.0))
    detail::range_error("online_probability", "[0, 1]", p.online_probability);
  if (p.batch_size < 1) detail::range_error("batch_size", "[1, inf)", p.batch_size);
  if (!(p.learning_rate > 0.0) || !std::isfinite(p.learning_rate))
    detail::range_error("learning_rate", "(0, inf)", p.learning_rate);
  if (!(p.weight_decay >= 0.0) || !std::isfinite(p.weight_decay))
    detail::range_error("weight_decay", "[0, inf)", p.weight_decay);
  if (!(p.eval_threshold > 0.0 && p.eval_threshold < 1.0))
    detail::range_error("eval_threshold", "(0, 1)", p.eval_threshold);
  if (!(p.flop_calibration > 0.0) || !std::isfinite(p.flop_calibration))
    detail::range_error("flop_calibration", "(0, inf)", p.flop_calibration);
  return p;
}

}  // namespace oap
