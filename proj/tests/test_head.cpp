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

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "oap/head.hpp"
#include "oracles.hpp"

namespace oap {
namespace {

TEST(InitHead, DeterministicBoundedZeroBias) {
  Rng a = seeded_rng(7, "init"), b = seeded_rng(7, "init");
  const auto h1 = init_head(32, a), h2 = init_head(32, b);
  EXPECT_EQ(h1.parameters().size(), 32u * 64 + 64 + 64 + 1);
  EXPECT_TRUE(std::equal(h1.parameters().begin(), h1.parameters().end(), h2.parameters().begin()));
  for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(h1.b1(j), 0.0);
  EXPECT_EQ(h1.b2(), 0.0);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 0; j < 64; ++j) EXPECT_LE(std::abs(h1.w1(i, j)), 1.0 / std::sqrt(32.0));
}

TEST(Forward, ZeroHeadIsHalf) {
  const ClassifierHead head(5);
  EXPECT_EQ(forward(head, FeatureVector{1, -2, 3, 0.5, 9}), 0.5);
}

TEST(Forward, SaturationIsClamped) {
  ClassifierHead head(3);
  head.b2() = 20.0;
  EXPECT_EQ(forward(head, FeatureVector{0, 0, 0}), 1.0 - kProbabilityEpsilon);
  head.b2() = -40.0;
  EXPECT_EQ(forward(head, FeatureVector{0, 0, 0}), kProbabilityEpsilon);
}

TEST(Forward, MatchesStraightLineOracle) {
  Rng rng = seeded_rng(11, "forward");
  for (int c = 0; c < 20; ++c) {
    const auto head = oracle::random_head(6, rng);
    const auto batch = oracle::random_batch(6, 1, rng);
    const std::vector<double> flat(head.parameters().begin(), head.parameters().end());
    const auto m = oracle::unpack(6, 64, flat);
    const std::vector<double> x(batch[0].features.values().begin(), batch[0].features.values().end());
    EXPECT_NEAR(forward(head, batch[0].features), oracle::probability(m, x), 1e-14);
  }
}

TEST(Forward, DimensionMismatch) {
  const ClassifierHead head(4);
  EXPECT_THROW(forward(head, FeatureVector{1, 2}), DataError);
}

TEST(LossAndGrad, ZeroHeadLossIsLn2) {
  const ClassifierHead head(3);
  std::vector<LabeledFeature> one{{FeatureVector{1, 2, 3}, ClassLabel::Spoof}};
  EXPECT_NEAR(loss_and_grad(head, one).loss, std::log(2.0), 1e-15);

  std::vector<LabeledFeature> two{{FeatureVector{1, 2, 3}, ClassLabel::Spoof},
                                  {FeatureVector{-1, 0, 4}, ClassLabel::Live}};
  const auto lg = loss_and_grad(head, two);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-15);
  EXPECT_EQ(lg.gradients.values[head.shape().b2_offset()], 0.0);
}

TEST(LossAndGrad, FiniteDifferenceOracle) {
  Rng rng = seeded_rng(5, "fd");
  for (int c = 0; c < 5; ++c) {
    const auto r = oracle::gradient_case(rng, 4 + c, 8);
    EXPECT_LT(r.max_rel_error, 1e-4);
    EXPECT_GT(r.checked, r.skipped);
  }
}

TEST(LossAndGrad, EmptyBatchRejected) {
  const ClassifierHead head(3);
  EXPECT_THROW(loss_and_grad(head, std::vector<LabeledFeature>{}), DataError);
}

TEST(LossAndGrad, ClampedRegionStillPointsToLabel) {
  ClassifierHead head(1);
  head.b2() = 40.0;  // y clamps to 1 - eps
  std::vector<LabeledFeature> live{{FeatureVector{0.0}, ClassLabel::Live}};
  const auto lg = loss_and_grad(head, live);
  EXPECT_NEAR(lg.gradients.values[head.shape().b2_offset()], 1.0, 1e-12);
  EXPECT_NEAR(lg.loss, -std::log(kProbabilityEpsilon), 1e-6);
}

TEST(ApplyUpdate, ZeroGradientCountsStep) {
  Rng rng = seeded_rng(1, "init");
  auto head = init_head(3, rng);
  const auto before = std::vector<double>(head.parameters().begin(), head.parameters().end());
  AdamState s(head);
  apply_update(head, s, Gradients{std::vector<double>(before.size(), 0.0)}, 1e-3, 0.0);
  EXPECT_EQ(s.step_count, 1u);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), head.parameters().begin()));
}

TEST(ApplyUpdate, OneStepAdamOracle) {
  // Single parameter: fresh moments give m_hat = g and v_hat = g^2.
  ClassifierHead head(1, 1);
  auto p = head.parameters();
  std::fill(p.begin(), p.end(), 0.0);
  p[0] = 1.0;
  AdamState s(head);
  std::vector<double> g(p.size(), 0.0);
  g[0] = 0.5;
  apply_update(head, s, Gradients{g}, 0.1, 0.0);
  const double m_hat = 0.5, v_hat = 0.25;
  const double expected = 1.0 - 0.1 * (m_hat / (std::sqrt(v_hat) + 1e-8));
  EXPECT_DOUBLE_EQ(head.parameters()[0], expected);
  EXPECT_NEAR(head.parameters()[0], 0.900000002, 1e-15);
}

TEST(ApplyUpdate, PureDecay) {
  ClassifierHead head(1, 1);
  head.parameters()[0] = 1.0;
  AdamState s(head);
  apply_update(head, s, Gradients{std::vector<double>(head.parameters().size(), 0.0)}, 1e-3, 1e-3);
  EXPECT_DOUBLE_EQ(head.parameters()[0], 1.0 - 1e-6);
}

TEST(ApplyUpdate, NonFiniteLeavesStateUntouched) {
  ClassifierHead head(2);
  AdamState s(head);
  const auto before = std::vector<double>(head.parameters().begin(), head.parameters().end());
  std::vector<double> g(before.size(), 0.0);
  g[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(apply_update(head, s, Gradients{g}, 1e-3, 0.0), NumericError);
  EXPECT_EQ(s.step_count, 0u);
  EXPECT_TRUE(std::equal(before.begin(), before.end(), head.parameters().begin()));
  EXPECT_EQ(s, AdamState(head));
}

std::vector<LabeledFeature> two_blobs(std::size_t n, Rng& rng) {
  std::vector<LabeledFeature> data;
  for (std::size_t k = 0; k < n; ++k) {
    const bool spoof = k % 2 == 1;
    data.push_back({FeatureVector{(spoof ? 3.0 : -3.0) + 0.5 * rng.normal(), 0.5 * rng.normal()},
                    spoof ? ClassLabel::Spoof : ClassLabel::Live});
  }
  return data;
}

TEST(Pretrain, SeparableBlobsReachHighAccuracy) {
  Rng data_rng = seeded_rng(2, "data"), init = seeded_rng(2, "init"), batches = seeded_rng(2, "pretrain");
  const auto data = two_blobs(1000, data_rng);
  PretrainSchedule sched;
  sched.iterations = 300;
  const auto head = pretrain(init_head(2, init), data, sched, batches);
  EXPECT_GE(accuracy(head, data), 0.99);
}

TEST(Pretrain, ZeroIterationsIsNoOpAndDeterministic) {
  Rng data_rng = seeded_rng(2, "data");
  const auto data = two_blobs(100, data_rng);
  Rng i1 = seeded_rng(4, "init"), i2 = seeded_rng(4, "init");
  const auto h0 = init_head(2, i1);
  PretrainSchedule none;
  none.iterations = 0;
  Rng b0 = seeded_rng(4, "pretrain");
  const auto same = pretrain(h0, data, none, b0);
  EXPECT_TRUE(std::equal(h0.parameters().begin(), h0.parameters().end(), same.parameters().begin()));

  PretrainSchedule few;
  few.iterations = 20;
  Rng b1 = seeded_rng(4, "pretrain"), b2 = seeded_rng(4, "pretrain");
  const auto a = pretrain(h0, data, few, b1);
  const auto b = pretrain(init_head(2, i2), data, few, b2);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
}

TEST(Pretrain, SingleClassRejected) {
  std::vector<LabeledFeature> live{{FeatureVector{1.0}, ClassLabel::Live}};
  Rng init = seeded_rng(0, "init"), rng = seeded_rng(0, "pretrain");
  EXPECT_THROW(pretrain(init_head(1, init), live, PretrainSchedule{}, rng), DataError);
}

TEST(Schedule, StepDecay) {
  const PretrainSchedule s;
  EXPECT_EQ(s.learning_rate_at(0), 1e-3);
  EXPECT_EQ(s.learning_rate_at(999), 1e-3);
  EXPECT_DOUBLE_EQ(s.learning_rate_at(1000), 0.8e-3);
  EXPECT_DOUBLE_EQ(s.learning_rate_at(2500), 0.64e-3);
}

TEST(HeadFile, RoundTripBitExact) {
  Rng rng = seeded_rng(9, "init");
  const auto head = init_head(7, rng);
  std::stringstream ss;
  write_head(ss, head);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "OAPH");
  EXPECT_EQ(bytes.size(), 4 + 4 * 3 + 2 * 8 + head.parameters().size() * 8);
  const auto back = read_head(ss);
  EXPECT_EQ(back.dim(), 7u);
  EXPECT_TRUE(std::equal(head.parameters().begin(), head.parameters().end(), back.parameters().begin()));
}

TEST(HeadFile, RejectsBadMagicAndTruncation) {
  std::stringstream bad("XXXX0000");
  EXPECT_THROW(read_head(bad), DataError);
  Rng rng = seeded_rng(9, "init");
  std::stringstream ss;
  write_head(ss, init_head(3, rng));
  std::stringstream cut(ss.str().substr(0, 40));
  EXPECT_THROW(read_head(cut), DataError);
}

}  // namespace
}  // namespace oap
