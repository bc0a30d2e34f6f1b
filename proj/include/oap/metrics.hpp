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

// Presentation-attack error rates. A frame is classified spoof iff its score
// strictly exceeds the threshold.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "oap/domain.hpp"
#include "oap/error.hpp"

namespace oap {

struct ScoredFrame {
  double y = 0.0;
  ClassLabel truth = ClassLabel::Live;
};

struct ErrorRates {
  double apcer = 0.0;  // spoof frames scored <= threshold
  double bpcer = 0.0;  // live frames scored > threshold
  double acer = 0.0;
};

struct MetricReport {
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
  double eer = 0.0;
  double threshold = 0.5;
  std::size_t n_live = 0;
  std::size_t n_spoof = 0;
};

namespace detail {

inline void require_both_classes(std::size_t n_live, std::size_t n_spoof) {
  if (n_live == 0) throw DataError("metrics need at least one live frame");
  if (n_spoof == 0) throw DataError("metrics need at least one spoof frame");
}

}  // namespace detail

inline ErrorRates fixed_threshold_metrics(std::span<const ScoredFrame> frames, double threshold) {
  std::size_t n_live = 0, n_spoof = 0, live_err = 0, spoof_err = 0;
  for (const auto& f : frames) {
    if (f.truth == ClassLabel::Spoof) {
      ++n_spoof;
      spoof_err += f.y <= threshold;
    } else {
      ++n_live;
      live_err += f.y > threshold;
    }
  }
  detail::require_both_classes(n_live, n_spoof);
  ErrorRates r;
  r.apcer = static_cast<double>(spoof_err) / static_cast<double>(n_spoof);
  r.bpcer = static_cast<double>(live_err) / static_cast<double>(n_live);
  r.acer = (r.apcer + r.bpcer) / 2.0;
  return r;
}

/// Threshold-free error rate where APCER and BPCER cross.
///
/// Operating points are taken below every score, at each midpoint between
/// consecutive distinct scores, and above every score. APCER rises and BPCER
/// falls along this sweep; the crossing is read off directly when some point
/// has APCER == BPCER, otherwise by linear interpolation between the two
/// points that bracket the sign change of APCER - BPCER.
inline double equal_error_rate(std::span<const ScoredFrame> frames) {
  std::vector<double> live, spoof;
  for (const auto& f : frames) (f.truth == ClassLabel::Spoof ? spoof : live).push_back(f.y);
  detail::require_both_classes(live.size(), spoof.size());
  std::sort(live.begin(), live.end());
  std::sort(spoof.begin(), spoof.end());

  std::vector<double> scores(live);
  scores.insert(scores.end(), spoof.begin(), spoof.end());
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  const double n_live = static_cast<double>(live.size());
  const double n_spoof = static_cast<double>(spoof.size());
  // Operating point k sits just above the k-th distinct score (k = 0: below all).
  auto rates_at = [&](std::size_t k) {
    if (k == 0) return std::pair{0.0, 1.0};
    const double t = scores[k - 1];
    const auto spoof_le = std::upper_bound(spoof.begin(), spoof.end(), t) - spoof.begin();
    const auto live_le = std::upper_bound(live.begin(), live.end(), t) - live.begin();
    return std::pair{static_cast<double>(spoof_le) / n_spoof,
                     (n_live - static_cast<double>(live_le)) / n_live};
  };

  auto [a_prev, b_prev] = rates_at(0);
  for (std::size_t k = 1; k <= scores.size(); ++k) {
    const auto [a, b] = rates_at(k);
    if (a == b) return a;
    if (a > b) {
      const double d_prev = a_prev - b_prev;  // < 0
      const double d = a - b;                 // > 0
      const double lambda = -d_prev / (d - d_prev);
      return a_prev + lambda * (a - a_prev);
    }
    a_prev = a;
    b_prev = b;
  }
  return a_prev;  // unreachable: the last point has APCER = 1, BPCER = 0
}

inline MetricReport evaluate(std::span<const ScoredFrame> frames, double threshold) {
  const ErrorRates r = fixed_threshold_metrics(frames, threshold);
  MetricReport m;
  m.apcer = r.apcer;
  m.bpcer = r.bpcer;
  m.acer = r.acer;
  m.eer = equal_error_rate(frames);
  m.threshold = threshold;
  for (const auto& f : frames) (f.truth == ClassLabel::Spoof ? m.n_spoof : m.n_live)++;
  return m;
}

inline void to_json(nlohmann::json& j, const MetricReport& m) {
  j = nlohmann::json{{"apcer", m.apcer}, {"bpcer", m.bpcer},   {"acer", m.acer},
                     {"eer", m.eer},     {"threshold", m.threshold}, {"n_live", m.n_live},
                     {"n_spoof", m.n_spoof}};
}

inline void from_json(const nlohmann::json& j, MetricReport& m) {
  j.at("apcer").get_to(m.apcer);
  j.at("bpcer").get_to(m.bpcer);
  j.at("acer").get_to(m.acer);
  j.at("eer").get_to(m.eer);
  j.at("threshold").get_to(m.threshold);
  j.at("n_live").get_to(m.n_live);
  j.at("n_spoof").get_to(m.n_spoof);
}

}  // namespace oap
