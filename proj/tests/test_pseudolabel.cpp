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

#include "oap/pseudolabel.hpp"
#include "oracles.hpp"

namespace oap {
namespace {

using P = PseudoLabel;

TEST(AssignPseudoLabel, Examples) {
  EXPECT_EQ(assign_pseudo_label(0.995, 0.01), P::Spoof);
  EXPECT_EQ(assign_pseudo_label(0.5, 0.01), P::Discard);
  EXPECT_EQ(assign_pseudo_label(0.7, 0.5), P::Spoof);
  EXPECT_EQ(assign_pseudo_label(0.004, 0.01), P::Live);
  EXPECT_EQ(assign_pseudo_label(0.5, 0.5), P::Live);
  EXPECT_EQ(assign_pseudo_label(0.99, 0.01), P::Discard);  // strict inequality
}

TEST(AssignPseudoLabel, MatchesDefinitionOnGrid) {
  for (const double delta : {0.01, 0.05, 0.1, 0.2, 0.5})
    for (int k = 1; k <= 999; ++k) {
      const double y = k / 1000.0;
      ASSERT_EQ(assign_pseudo_label(y, delta), oracle::pseudo_label(y, delta)) << y << " " << delta;
    }
}

std::vector<LabeledTimepoint> consecutive(const std::vector<P>& labels, std::int64_t first = 1) {
  std::vector<LabeledTimepoint> e;
  for (std::size_t k = 0; k < labels.size(); ++k) e.push_back({first + static_cast<std::int64_t>(k), labels[k]});
  return e;
}

TEST(SmoothLabels, UnanimousWindowUnchanged) {
  const auto e = consecutive(std::vector<P>(31, P::Spoof));
  for (const auto& s : smooth_labels(e, 30)) EXPECT_EQ(s.label, P::Spoof);
}

TEST(SmoothLabels, SixteenOfThirtyOneCentreIsSpoof) {
  std::vector<P> labels(31, P::Live);
  for (int k = 0; k < 31; k += 2) labels[k] = P::Spoof;  // 16 spoof, 15 live
  const auto e = consecutive(labels);
  const auto s = smooth_labels(e, 30);
  EXPECT_EQ(s[15].label, P::Spoof);
  EXPECT_EQ(s, oracle::smooth(e, 30));
}

TEST(SmoothLabels, GappedStoredSubset) {
  const std::vector<LabeledTimepoint> e{{10, P::Spoof}, {12, P::Spoof}, {14, P::Live}};
  for (const auto& s : smooth_labels(e, 30)) EXPECT_EQ(s.label, P::Spoof);
}

TEST(SmoothLabels, BalancedWindowIsLive) {
  const std::vector<LabeledTimepoint> e{{1, P::Spoof}, {2, P::Live}};
  for (const auto& s : smooth_labels(e, 30)) EXPECT_EQ(s.label, P::Live);
}

TEST(SmoothLabels, WindowZeroIsIdentity) {
  const auto e = consecutive({P::Spoof, P::Live, P::Live, P::Spoof});
  EXPECT_EQ(smooth_labels(e, 0), e);
}

TEST(SmoothLabels, RandomGappedMatchesRecount) {
  Rng rng = seeded_rng(8, "smooth");
  for (int c = 0; c < 200; ++c) {
    std::vector<LabeledTimepoint> e;
    std::int64_t t = 0;
    const auto n = rng.index(60);
    for (std::uint64_t k = 0; k < n; ++k) {
      t += 1 + static_cast<std::int64_t>(rng.index(5));
      e.push_back({t, rng.uniform() < 0.5 ? P::Spoof : P::Live});
    }
    const int w = 2 * static_cast<int>(rng.index(25));
    ASSERT_EQ(smooth_labels(e, w), oracle::smooth(e, w));
  }
}

TEST(SmoothLabels, Errors) {
  EXPECT_THROW(smooth_labels(consecutive({P::Live, P::Discard}), 30), DataError);
  const std::vector<LabeledTimepoint> unordered{{3, P::Live}, {2, P::Live}};
  EXPECT_THROW(smooth_labels(unordered, 30), DataError);
  EXPECT_THROW(smooth_labels(consecutive({P::Live}), 3), ConfigError);
}

}  // namespace
}  // namespace oap
