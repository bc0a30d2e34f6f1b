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

#include <gtest/gtest.h>

#include <vector>

#include "oap/memory.hpp"

namespace oap {
namespace {

FeatureVector fv(double x) { return FeatureVector{x, -x}; }

TEST(OnlineBuffer, InsertAndOrdering) {
  OnlineBuffer b;
  b.insert(fv(1), PseudoLabel::Live, 1, 0.0);
  EXPECT_EQ(b.size(), 1u);
  EXPECT_THROW(b.insert(fv(1), PseudoLabel::Live, 1, 0.0), DataError);
  EXPECT_THROW(b.insert(fv(1), PseudoLabel::Discard, 2, 0.0), DataError);
}

TEST(OnlineBuffer, EvictExample) {
  OnlineBuffer b;
  for (int t = 0; t <= 5; ++t) b.insert(fv(t), PseudoLabel::Spoof, t + 1, t);
  b.evict_old(5.0, 4.0);
  std::vector<double> times;
  for (const auto& e : b.entries()) times.push_back(e.time);
  EXPECT_EQ(times, (std::vector<double>{2, 3, 4, 5}));
}

TEST(OnlineBuffer, EvictEdgeCases) {
  OnlineBuffer empty;
  empty.evict_old(10.0, 4.0);
  EXPECT_TRUE(empty.empty());
  OnlineBuffer b;
  for (int t = 0; t < 10; ++t) b.insert(fv(t), PseudoLabel::Live, t + 1, t / 30.0);
  b.evict_old(9 / 30.0, 100.0);
  EXPECT_EQ(b.size(), 10u);
}

TEST(OnlineBuffer, ThreeHundredFramesLeave120) {
  OnlineBuffer b;
  for (int k = 1; k <= 300; ++k) {
    const double t = (k - 1) / 30.0;
    b.insert(fv(k), PseudoLabel::Live, k, t);
    b.evict_old(t, 4.0);
    ASSERT_LE(b.size(), 120u);
  }
  EXPECT_EQ(b.size(), 120u);
}

TEST(OnlineBuffer, SmoothKeepsRaw) {
  OnlineBuffer b;
  b.insert(fv(0), PseudoLabel::Spoof, 1, 0.0);
  b.insert(fv(0), PseudoLabel::Live, 2, 0.1);
  b.insert(fv(0), PseudoLabel::Live, 3, 0.2);
  b.smooth(30);
  EXPECT_EQ(b.entries()[0].raw, PseudoLabel::Spoof);
  EXPECT_EQ(b.entries()[0].smoothed, PseudoLabel::Live);
  b.smooth(0);
  EXPECT_EQ(b.entries()[0].smoothed, PseudoLabel::Spoof);
}

std::vector<LabeledFeature> labeled(std::size_t n_live, std::size_t n_spoof) {
  std::vector<LabeledFeature> out;
  for (std::size_t k = 0; k < n_live; ++k) out.push_back({fv(-1.0 - k), ClassLabel::Live});
  for (std::size_t k = 0; k < n_spoof; ++k) out.push_back({fv(1.0 + k), ClassLabel::Spoof});
  return out;
}

TEST(Subsample, SizeDeterminismAndClasses) {
  const auto full = labeled(15000, 15000);
  Rng a = seeded_rng(1, "replay"), b = seeded_rng(1, "replay");
  const auto s1 = subsample_pretraining(full, 1000, a);
  const auto s2 = subsample_pretraining(full, 1000, b);
  EXPECT_EQ(s1.size(), 1000u);
  EXPECT_EQ(s1.content_hash(), s2.content_hash());
  EXPECT_FALSE(s1.indices_of(ClassLabel::Live).empty());
  EXPECT_FALSE(s1.indices_of(ClassLabel::Spoof).empty());
  Rng c = seeded_rng(0, "replay");
  EXPECT_TRUE(subsample_pretraining(full, 0, c).empty());
  EXPECT_THROW(subsample_pretraining(full, 30001, c), DataError);
}

TEST(Subsample, RareClassForcedIn) {
  const auto full = labeled(10000, 1);
  Rng rng = seeded_rng(3, "replay");
  const auto s = subsample_pretraining(full, 2, rng);
  EXPECT_EQ(s.indices_of(ClassLabel::Spoof).size(), 1u);
}

OnlineBuffer buffer_with(std::size_t live, std::size_t spoof) {
  OnlineBuffer b;
  std::int64_t i = 1;
  for (std::size_t k = 0; k < live; ++k, ++i) b.insert(fv(0), PseudoLabel::Live, i, i / 30.0);
  for (std::size_t k = 0; k < spoof; ++k, ++i) b.insert(fv(0), PseudoLabel::Spoof, i, i / 30.0);
  return b;
}

TEST(SampleBatch, AlphaOneIsAllOnline) {
  const auto online = buffer_with(10, 0);
  const ReplayStore replay(labeled(5, 5));
  Rng rng = seeded_rng(0, "sampler");
  const auto batch = sample_batch(online, replay, 16, 1.0, rng);
  for (const auto s : batch.sources) EXPECT_EQ(s, SampleSource::Online);
}

TEST(SampleBatch, EmptyOnlineFallsBackToReplay) {
  const OnlineBuffer online;
  const ReplayStore replay(labeled(5, 5));
  Rng rng = seeded_rng(0, "sampler");
  const auto batch = sample_batch(online, replay, 16, 0.9, rng);
  for (const auto s : batch.sources) EXPECT_EQ(s, SampleSource::Replay);
  EXPECT_THROW(sample_batch(online, ReplayStore{}, 16, 0.9, rng), DataError);
}

TEST(SampleBatch, EmptyReplayFallsBackToOnline) {
  const auto online = buffer_with(3, 3);
  Rng rng = seeded_rng(0, "sampler");
  const auto batch = sample_batch(online, ReplayStore{}, 16, 0.0, rng);
  for (const auto s : batch.sources) EXPECT_EQ(s, SampleSource::Online);
}

TEST(SampleBatch, Statistics) {
  // Unbalanced stores: the class is chosen uniformly before the entry.
  const auto online = buffer_with(100, 5);
  const ReplayStore replay(labeled(900, 100));
  Rng rng = seeded_rng(17, "sampler");
  std::size_t n = 0, from_online = 0, replay_n = 0, replay_live = 0, online_spoof = 0;
  for (int k = 0; k < 10000; ++k) {
    const auto b = sample_batch(online, replay, 16, 0.9, rng);
    for (std::size_t s = 0; s < b.samples.size(); ++s) {
      ++n;
      if (b.sources[s] == SampleSource::Online) {
        ++from_online;
        online_spoof += b.samples[s].label == ClassLabel::Spoof;
      } else {
        ++replay_n;
        replay_live += b.samples[s].label == ClassLabel::Live;
      }
    }
  }
  const double online_frac = static_cast<double>(from_online) / n;
  EXPECT_GE(online_frac, 0.89);
  EXPECT_LE(online_frac, 0.91);
  EXPECT_NEAR(static_cast<double>(replay_live) / replay_n, 0.5, 0.02);
  EXPECT_NEAR(static_cast<double>(online_spoof) / from_online, 0.5, 0.02);
}

TEST(SampleBatch, UsesSmoothedLabels) {
  OnlineBuffer b;
  b.insert(fv(0), PseudoLabel::Spoof, 1, 0.0);
  b.insert(fv(0), PseudoLabel::Live, 2, 0.1);
  b.insert(fv(0), PseudoLabel::Live, 3, 0.2);
  b.smooth(30);
  Rng rng = seeded_rng(0, "sampler");
  const auto batch = sample_batch(b, ReplayStore{}, 64, 1.0, rng);
  for (const auto& s : batch.samples) EXPECT_EQ(s.label, ClassLabel::Live);
}

}  // namespace
}  // namespace oap
