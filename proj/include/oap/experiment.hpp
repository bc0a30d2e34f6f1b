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

// End-to-end experiment pipeline shared by the command line tool and the
// acceptance suite: synthetic pre-training data -> pre-trained head + replay
// store -> held-out stream -> per-frame verdicts -> metrics.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "oap/config.hpp"
#include "oap/domain.hpp"
#include "oap/engine.hpp"
#include "oap/head.hpp"
#include "oap/memory.hpp"
#include "oap/metrics.hpp"
#include "oap/rng.hpp"
#include "oap/simstream.hpp"

namespace oap {

struct PretrainedModel {
  ClassifierHead head;
  std::shared_ptr<const ReplayStore> replay;
  double train_accuracy = 0.0;
};

inline std::vector<LabeledFeature> pretraining_data(const ExperimentConfig& cfg) {
  return generate_pretraining_set(cfg.generator, cfg.train_users, cfg.frames_per_user);
}

/// Hyper-parameters of the k-th seeded repetition.
inline HyperParams seeded_params(const ExperimentConfig& cfg, std::size_t seed_index) {
  HyperParams p = cfg.params;
  p.seed += seed_index;
  return p;
}

/// Trains a head from scratch on `data` and draws the replay store from it.
inline PretrainedModel pretrain_model(const ExperimentConfig& cfg,
                                      std::span<const LabeledFeature> data,
                                      std::size_t seed_index) {
  const std::uint64_t seed = seeded_params(cfg, seed_index).seed;
  Rng init = seeded_rng(seed, "init");
  Rng batches = seeded_rng(seed, "pretrain");
  Rng replay_rng = seeded_rng(seed, "replay");
  PretrainedModel m;
  m.head = pretrain(init_head(cfg.generator.dim, init), data, cfg.pretrain, batches);
  m.replay = std::make_shared<const ReplayStore>(
      subsample_pretraining(data, cfg.params.replay_size, replay_rng));
  m.train_accuracy = accuracy(m.head, data, cfg.params.eval_threshold);
  return m;
}

inline std::vector<StreamFrame> scenario_stream(const ExperimentConfig& cfg, std::size_t seed_index) {
  return generate_stream(cfg.generator, cfg.scenario(seed_index));
}

/// First frame index of every segment.
inline std::vector<std::int64_t> segment_starts(std::span<const StreamFrame> stream) {
  std::vector<std::int64_t> starts;
  for (std::size_t k = 0; k < stream.size(); ++k)
    if (k == 0 || stream[k].segment != stream[k - 1].segment) starts.push_back(stream[k].frame.index);
  return starts;
}

/// Runs one mode over a stream. With Evaluation::Single every segment gets a
/// fresh engine initialised from the same pre-trained head.
inline std::vector<FrameVerdict> run_mode(RunMode mode, Evaluation evaluation,
                                          const ClassifierHead& head,
                                          std::shared_ptr<const ReplayStore> replay,
                                          const HyperParams& params,
                                          std::span<const StreamFrame> stream,
                                          double ema_momentum = 0.9, bool ema_reset = true) {
  const std::vector<Frame> frames = frames_of(stream);
  switch (mode) {
    case RunMode::Frozen:
      return run_baseline_frozen(head, frames, params);
    case RunMode::Ema: {
      const auto starts = ema_reset ? segment_starts(stream) : std::vector<std::int64_t>{};
      return run_baseline_smoothed(head, frames, ema_momentum, params, starts);
    }
    case RunMode::Oap:
      break;
  }
  if (evaluation == Evaluation::Continual) {
    Engine engine(head, std::move(replay), params);
    return run_stream(engine, frames);
  }
  std::vector<FrameVerdict> trace;
  trace.reserve(frames.size());
  std::size_t begin = 0;
  while (begin < stream.size()) {
    std::size_t end = begin;
    while (end < stream.size() && stream[end].segment == stream[begin].segment) ++end;
    Engine engine(head, replay, params);
    const auto part = run_stream(engine, std::span(frames).subspan(begin, end - begin));
    trace.insert(trace.end(), part.begin(), part.end());
    begin = end;
  }
  return trace;
}

inline std::vector<FrameVerdict> run_mode(const ExperimentConfig& cfg, const PretrainedModel& model,
                                          std::span<const StreamFrame> stream,
                                          std::size_t seed_index) {
  return run_mode(cfg.mode, cfg.evaluation, model.head, model.replay,
                  seeded_params(cfg, seed_index), stream, cfg.ema_momentum, cfg.ema_reset);
}

inline std::vector<ScoredFrame> scored(std::span<const StreamFrame> stream,
                                       std::span<const FrameVerdict> trace) {
  if (stream.size() != trace.size()) throw DataError("trace length does not match stream length");
  std::vector<ScoredFrame> out;
  out.reserve(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) out.push_back({trace[k].y, stream[k].truth});
  return out;
}

/// Stream read from a feature file. Segments are runs of equal ground truth;
/// an unlabeled file is one segment of unknown class (reported as live).
inline std::vector<StreamFrame> stream_of(const FeatureFile& file) {
  std::vector<StreamFrame> out;
  out.reserve(file.records.size());
  std::size_t segment = 0;
  for (std::size_t k = 0; k < file.records.size(); ++k) {
    const auto& r = file.records[k];
    const ClassLabel truth = r.label.value_or(ClassLabel::Live);
    if (k > 0 && file.labeled && truth != out.back().truth) ++segment;
    out.push_back({Frame{r.features, r.frame_index, r.time}, truth, segment});
  }
  return out;
}

inline std::vector<ClassLabel> truths_of(std::span<const StreamFrame> stream) {
  std::vector<ClassLabel> out;
  out.reserve(stream.size());
  for (const auto& s : stream) out.push_back(s.truth);
  return out;
}

struct SeedResult {
  std::vector<StreamFrame> stream;
  std::vector<FrameVerdict> trace;
  MetricReport report;
  double train_accuracy = 0.0;
};

/// Pre-trains, generates and runs the k-th seeded repetition of `cfg`.
inline SeedResult run_seed(const ExperimentConfig& cfg, std::span<const LabeledFeature> data,
                           std::size_t seed_index) {
  const PretrainedModel model = pretrain_model(cfg, data, seed_index);
  SeedResult r;
  r.train_accuracy = model.train_accuracy;
  r.stream = scenario_stream(cfg, seed_index);
  r.trace = run_mode(cfg, model, r.stream, seed_index);
  r.report = evaluate(scored(r.stream, r.trace), cfg.params.eval_threshold);
  return r;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (const double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  for (const double x : xs) r.std += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(r.std / static_cast<double>(xs.size()));
  return r;
}

/// Approximate resident size of a replay store: features as f64 plus a
/// padded label slot per entry.
inline constexpr std::size_t kReplayEntryOverheadBytes = 8;

inline std::size_t replay_memory_bytes(std::size_t replay_size, std::size_t dim) {
  return replay_size * (dim * sizeof(double) + kReplayEntryOverheadBytes);
}

}  // namespace oap
