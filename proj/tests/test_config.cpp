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

#include <sstream>
#include <string>

#include "oap/config.hpp"
#include "oap/experiment.hpp"

namespace oap {
namespace {

TEST(Config, RoundTripExact) {
  ExperimentConfig cfg;
  apply_override(cfg, "nu=0.2");
  apply_override(cfg, "alpha=0.75");
  apply_override(cfg, "learning_rate=3.3e-5");
  apply_override(cfg, "segments=live:10,spoof:20:4");
  apply_override(cfg, "mode=ema");
  apply_override(cfg, "evaluation=continual");
  const std::string text = config_to_string(cfg);
  ExperimentConfig back;
  std::istringstream is(text);
  read_config(is, back);
  EXPECT_EQ(config_to_string(back), text);
  EXPECT_EQ(back.params.finetune_frequency, 0.2);
  EXPECT_EQ(back.params.online_probability, 0.75);
  EXPECT_EQ(back.params.learning_rate, 3.3e-5);
  EXPECT_EQ(back.mode, RunMode::Ema);
}

TEST(Config, CommentsAndBlankLines) {
  ExperimentConfig cfg;
  std::istringstream is("# header\n\n delta = 0.05  # margin\nK=3\n");
  read_config(is, cfg);
  EXPECT_EQ(cfg.params.margin, 0.05);
  EXPECT_EQ(cfg.params.iterations_per_call, 3);
}

TEST(Config, Errors) {
  ExperimentConfig cfg;
  EXPECT_THROW(apply_override(cfg, "nonsense=1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "margin"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "batch_size=abc"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "mode=other"), ConfigError);
  std::istringstream is("just words\n");
  EXPECT_THROW(read_config(is, cfg), ConfigError);
  apply_override(cfg, "margin=0.7");
  EXPECT_THROW(validate(cfg), ConfigError);
}

TEST(Experiment, SeedsShiftUserAndSeed) {
  ExperimentConfig cfg;
  EXPECT_EQ(seeded_params(cfg, 2).seed, cfg.params.seed + 2);
  EXPECT_EQ(cfg.scenario(2).user_id, cfg.user_id + 2);
}

TEST(Experiment, DefaultPretrainingAccuracy) {
  const ExperimentConfig cfg;
  const auto data = pretraining_data(cfg);
  const auto model = pretrain_model(cfg, data, 0);
  EXPECT_GE(model.train_accuracy, 0.99);
  EXPECT_EQ(model.replay->size(), 1000u);
}

TEST(Experiment, MeanStdAndMemory) {
  const double xs[] = {1.0, 3.0};
  const auto ms = mean_std(xs);
  EXPECT_EQ(ms.mean, 2.0);
  EXPECT_EQ(ms.std, 1.0);
  EXPECT_EQ(replay_memory_bytes(1000, 32), 1000u * (32 * 8 + kReplayEntryOverheadBytes));
  EXPECT_LT(replay_memory_bytes(100, 32), replay_memory_bytes(500, 32));
}

}  // namespace
}  // namespace oap
