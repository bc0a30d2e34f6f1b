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

// The two datasets used during online fine-tuning: the time-windowed buffer
// of pseudo-labeled stream features, and the frozen replay subset of the
// labeled pre-training features. Plus the batch sampler that mixes them.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oap/domain.hpp"
#include "oap/error.hpp"
#include "oap/pseudolabel.hpp"
#include "oap/rng.hpp"

namespace oap {

/// Timestamps closer than this are considered equal when applying the
/// eviction horizon (frame times are computed as index / fps).
inline constexpr double kTimeResolution = 1e-9;

struct OnlineEntry {
  FeatureVector features;
  PseudoLabel raw = PseudoLabel::Live;
  PseudoLabel smoothed = PseudoLabel::Live;
  std::int64_t frame_index = 0;
  double time = 0.0;
};

class OnlineBuffer {
 public:
  void insert(FeatureVector features, PseudoLabel label, std::int64_t frame_index, double time) {
    if (label == PseudoLabel::Discard)
      throw DataError("online buffer: discarded frames are never stored");
    if (!entries_.empty() && frame_index <= entries_.back().frame_index)
      throw DataError("online buffer: frame index " + std::to_string(frame_index) +
                      " is not after " + std::to_string(entries_.back().frame_index));
    entries_.push_back({std::move(features), label, label, frame_index, time});
  }

  /// Keeps the entries whose age (now - time) is below the horizon.
  void evict_old(double now, double horizon) {
    std::erase_if(entries_, [&](const OnlineEntry& e) {
      return !(now - e.time < horizon - kTimeResolution);
    });
  }

  /// Recomputes every working label from the raw labels.
  void smooth(int window) {
    std::vector<LabeledTimepoint> raw;
    raw.reserve(entries_.size());
    for (const auto& e : entries_) raw.push_back({e.frame_index, e.raw});
    const auto smoothed = smooth_labels(raw, window);
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k].smoothed = smoothed[k].label;
  }

  std::span<const OnlineEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  void clear() noexcept { entries_.clear(); }

 private:
  std::vector<OnlineEntry> entries_;
};

/// Frozen labeled subset of the pre-training data.
class ReplayStore {
 public:
  ReplayStore() = default;
  explicit ReplayStore(std::vector<LabeledFeature> entries) : entries_(std::move(entries)) {
    for (std::size_t k = 0; k < entries_.size(); ++k)
      by_class_[to_int(entries_[k].label)].push_back(k);
  }

  std::span<const LabeledFeature> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const std::size_t> indices_of(ClassLabel c) const noexcept {
    return by_class_[to_int(c)];
  }

  /// FNV-1a over labels and raw feature bytes.
  std::uint64_t content_hash() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* bytes = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& e : entries_) {
      const auto label = static_cast<unsigned char>(e.label);
      mix(&label, 1);
      mix(e.features.values().data(), e.features.dim() * sizeof(double));
    }
    return h;
  }

 private:
  std::vector<LabeledFeature> entries_;
  std::array<std::vector<std::size_t>, 2> by_class_;
};

/// Uniform random subset of `target_size` entries without replacement. When
/// the draw misses a class that exists in `full` (and target_size >= 2), one
/// randomly chosen member is swapped for a random entry of the missing class.
inline ReplayStore subsample_pretraining(std::span<const LabeledFeature> full,
                                         std::size_t target_size, Rng& rng) {
  if (target_size > full.size())
    throw DataError("replay subsample of " + std::to_string(target_size) + " requested from " +
                    std::to_string(full.size()) + " entries");
  std::vector<std::size_t> order(full.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < target_size; ++k) {
    const std::size_t j = k + rng.index(order.size() - k);
    std::swap(order[k], order[j]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target_size));

  if (target_size >= 2) {
    for (const ClassLabel c : {ClassLabel::Live, ClassLabel::Spoof}) {
      const bool present = std::any_of(chosen.begin(), chosen.end(),
                                       [&](std::size_t i) { return full[i].label == c; });
      if (present) continue;
      std::vector<std::size_t> pool;
      for (std::size_t i = target_size; i < order.size(); ++i)
        if (full[order[i]].label == c) pool.push_back(order[i]);
      if (pool.empty()) continue;
      chosen[rng.index(chosen.size())] = pool[rng.index(pool.size())];
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<LabeledFeature> entries;
  entries.reserve(chosen.size());
  for (const std::size_t i : chosen) entries.push_back(full[i]);
  return ReplayStore(std::move(entries));
}

/// Where each slot of a fine-tuning batch came from.
enum class SampleSource : std::uint8_t { Online, Replay };

struct Batch {
  std::vector<LabeledFeature> samples;
  std::vector<SampleSource> sources;
};

/// Draws `batch_size` samples with replacement. Each slot picks the online
/// buffer with probability `online_probability` (else the replay store),
/// falling back to the other store when the chosen one is empty. Inside a
/// store a class is drawn uniformly among the classes present, then an entry
/// uniformly within it. Online entries carry their smoothed label.
inline Batch sample_batch(const OnlineBuffer& online, const ReplayStore& replay,
                          std::size_t batch_size, double online_probability, Rng& rng) {
  if (online.empty() && replay.empty())
    throw DataError("sample_batch: both the online buffer and the replay store are empty");

  std::array<std::vector<std::size_t>, 2> online_by_class;
  const auto entries = online.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto c = to_class(entries[k].smoothed);
    if (c) online_by_class[to_int(*c)].push_back(k);
  }

  auto pick = [&rng](const std::array<std::span<const std::size_t>, 2>& classes) {
    const bool has_live = !classes[0].empty();
    const bool has_spoof = !classes[1].empty();
    std::size_t c = has_live ? 0 : 1;
    if (has_live && has_spoof) c = rng.index(2);
    return classes[c][rng.index(classes[c].size())];
  };
  const std::array<std::span<const std::size_t>, 2> online_classes{online_by_class[0],
                                                                   online_by_class[1]};
  const std::array<std::span<const std::size_t>, 2> replay_classes{
      replay.indices_of(ClassLabel::Live), replay.indices_of(ClassLabel::Spoof)};

  Batch batch;
  batch.samples.reserve(batch_size);
  batch.sources.reserve(batch_size);
  for (std::size_t slot = 0; slot < batch_size; ++slot) {
    bool use_online = rng.uniform() < online_probability;
    if (use_online && online.empty()) use_online = false;
    if (!use_online && replay.empty()) use_online = true;
    if (use_online) {
      const auto& e = entries[pick(online_classes)];
      batch.samples.push_back({e.features, *to_class(e.smoothed)});
      batch.sources.push_back(SampleSource::Online);
    } else {
      batch.samples.push_back(replay.entries()[pick(replay_classes)]);
      batch.sources.push_back(SampleSource::Replay);
    }
  }
  return batch;
}

}  // namespace oap
