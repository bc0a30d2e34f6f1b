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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oap/domain.hpp"
#include "oap/error.hpp"

namespace oap {

/// Dual-threshold pseudo-label: Spoof if y > 1 - margin, Live if y < margin,
/// Discard in between. margin = 0.5 is the single-threshold rule (a tie at
/// exactly 0.5 resolves to Live).
constexpr PseudoLabel assign_pseudo_label(double y, double margin) noexcept {
  if (y > 1.0 - margin) return PseudoLabel::Spoof;
  if (y < margin) return PseudoLabel::Live;
  if (margin >= 0.5) return PseudoLabel::Live;
  return PseudoLabel::Discard;
}

struct LabeledTimepoint {
  std::int64_t frame_index = 0;
  PseudoLabel label = PseudoLabel::Live;

  friend bool operator==(const LabeledTimepoint&, const LabeledTimepoint&) = default;
};

/// Sliding-window majority over the stored entries. Entry t becomes Spoof iff
/// more than half of the stored entries with frame index in
/// [t - W/2, t + W/2] are Spoof. Frames that are not stored do not vote;
/// windows truncate at the sequence edges.
inline std::vector<LabeledTimepoint> smooth_labels(std::span<const LabeledTimepoint> entries,
                                                   int window) {
  if (window < 0 || window % 2 != 0)
    throw ConfigError("smooth_labels: window must be a non-negative even integer");
  const std::int64_t half = window / 2;
  const std::size_t n = entries.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (entries[k].label == PseudoLabel::Discard)
      throw DataError("smooth_labels: discarded entry at frame " +
                      std::to_string(entries[k].frame_index));
    if (k > 0 && entries[k].frame_index <= entries[k - 1].frame_index)
      throw DataError("smooth_labels: frame indices must be strictly increasing");
  }

  std::vector<LabeledTimepoint> out(entries.begin(), entries.end());
  std::size_t lo = 0, hi = 0;  // window is [lo, hi)
  std::size_t spoof = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::int64_t t = entries[k].frame_index;
    while (hi < n && entries[hi].frame_index <= t + half) {
      spoof += entries[hi].label == PseudoLabel::Spoof;
      ++hi;
    }
    while (entries[lo].frame_index < t - half) {
      spoof -= entries[lo].label == PseudoLabel::Spoof;
      ++lo;
    }
    // mean > 0.5  <=>  2 * spoof > count
    out[k].label = 2 * spoof > hi - lo ? PseudoLabel::Spoof : PseudoLabel::Live;
  }
  return out;
}

}  // namespace oap
