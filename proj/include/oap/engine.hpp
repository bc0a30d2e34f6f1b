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

// Per-frame inference with online adaptation of the classifier head.
//
// For every frame the engine first scores it with the current head, and only
// then lets it (via its pseudo-label) influence the head. The verdict of frame
// t therefore depends on frames 1..t-1 through the weights and on frame t
// through the forward pass only.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oap/domain.hpp"
#include "oap/error.hpp"
#include "oap/head.hpp"
#include "oap/memory.hpp"
#include "oap/pseudolabel.hpp"
#include "oap/rng.hpp"

namespace oap {

/// Engine input. Deliberately carries no label.
struct Frame {
  FeatureVector features;
  std::int64_t index = 0;
  double time = 0.0;
};

struct FrameVerdict {
  std::int64_t frame_index = 0;
  double y = 0.5;
  ClassLabel decision = ClassLabel::Live;
  PseudoLabel pseudo = PseudoLabel::Discard;
  bool finetuned = false;
  bool update_rejected = false;
  std::size_t online_size = 0;
  double cumulative_flops = 0.0;

  friend bool operator==(const FrameVerdict&, const FrameVerdict&) = default;
};

class CostLedger {
 public:
  void record(double flops) {
    cumulative_ += flops;
    per_frame_.push_back(flops);
  }
  double cumulative() const noexcept { return cumulative_; }
  std::span<const double> per_frame() const noexcept { return per_frame_; }

 private:
  double cumulative_ = 0.0;
  std::vector<double> per_frame_;
};

/// Multiply-accumulate based FLOP count of one forward+backward pass of the
/// head on one sample: 2 * (d * hidden + hidden) for the forward pass, three
/// times that for forward plus backward.
constexpr double head_flops_per_sample(std::size_t dim, std::size_t hidden = kHiddenUnits) {
  return 3.0 * 2.0 * static_cast<double>(dim * hidden + hidden);
}

/// Expected adaptation FLOPs per frame: calibration * nu * K * B * c(d).
/// Exactly linear in nu.
inline double adaptation_cost(const HyperParams& params, std::size_t dim, int iterations_per_call,
                              std::size_t hidden = kHiddenUnits) {
  const double per_call = params.flop_calibration * static_cast<double>(iterations_per_call) *
                          static_cast<double>(params.batch_size) *
                          head_flops_per_sample(dim, hidden);
  return params.finetune_frequency * per_call;
}

inline double adaptation_cost(const HyperParams& params, std::size_t dim) {
  return adaptation_cost(params, dim, params.iterations_per_call);
}

/// Calibration constant that makes adaptation_cost at nu = 1 equal
/// `target_flops` (960 KFLOPs/frame is the reference figure).
inline double flop_calibration_for(double target_flops, std::size_t dim, int iterations_per_call,
                                   int batch_size, std::size_t hidden = kHiddenUnits) {
  return target_flops / (static_cast<double>(iterations_per_call) *
                         static_cast<double>(batch_size) * head_flops_per_sample(dim, hidden));
}

inline constexpr double kReferenceKflopsPerFrame = 960.0;

/// Running state of one adaptive stream.
class Engine {
 public:
  /// `head` is the pre-trained head; Adam moments start fresh and persist for
  /// the whole stream. The replay store is shared read-only.
  Engine(ClassifierHead head, std::shared_ptr<const ReplayStore> replay, const HyperParams& params,
         bool adapt = true)
      : head_(std::move(head)),
        adam_(head_),
        replay_(replay ? std::move(replay) : std::make_shared<const ReplayStore>()),
        params_(validate(params)),
        adapt_(adapt),
        sampler_(seeded_rng(params.seed, "sampler")) {}

  FrameVerdict process_frame(const Frame& frame) {
    detail::check_dim(head_, frame.features);
    if (!frame.features.all_finite())
      throw NumericError("frame " + std::to_string(frame.index) + " has non-finite features");

    FrameVerdict verdict;
    verdict.frame_index = frame.index;
    verdict.y = forward(head_, frame.features);
    verdict.decision = verdict.y > params_.eval_threshold ? ClassLabel::Spoof : ClassLabel::Live;
    verdict.pseudo = assign_pseudo_label(verdict.y, params_.margin);
    ++frame_count_;

    double flops = 0.0;
    if (adapt_) {
      if (verdict.pseudo != PseudoLabel::Discard)
        online_.insert(frame.features, verdict.pseudo, frame.index, frame.time);
      online_.evict_old(frame.time, params_.eviction_horizon);
      online_.smooth(params_.window);

      const auto due = static_cast<std::uint64_t>(
          std::floor(static_cast<double>(frame_count_) * params_.finetune_frequency + 1e-9));
      const std::uint64_t calls = due - finetune_calls_;
      finetune_calls_ = due;
      if (calls > 0 && !(online_.empty() && replay_->empty())) {
        verdict.finetuned = true;
        verdict.update_rejected = !finetune(calls);
        flops = static_cast<double>(calls) * params_.flop_calibration *
                static_cast<double>(params_.iterations_per_call) *
                static_cast<double>(params_.batch_size) * head_flops_per_sample(head_.dim(), head_.hidden());
      }
    }
    ledger_.record(flops);
    verdict.online_size = online_.size();
    verdict.cumulative_flops = ledger_.cumulative();
    return verdict;
  }

  const ClassifierHead& head() const noexcept { return head_; }
  const AdamState& optimizer() const noexcept { return adam_; }
  const OnlineBuffer& online() const noexcept { return online_; }
  const ReplayStore& replay() const noexcept { return *replay_; }
  const HyperParams& params() const noexcept { return params_; }
  const CostLedger& costs() const noexcept { return ledger_; }
  std::uint64_t frame_count() const noexcept { return frame_count_; }
  std::uint64_t finetune_calls() const noexcept { return finetune_calls_; }
  /// Fractional fine-tune credit carried to the next frame.
  double finetune_accumulator() const noexcept {
    return static_cast<double>(frame_count_) * params_.finetune_frequency -
           static_cast<double>(finetune_calls_);
  }

 private:
  // Runs calls * K iterations. On a non-finite update the head and optimizer
  // are restored to their values before this frame and false is returned.
  bool finetune(std::uint64_t calls) {
    const ClassifierHead head_before = head_;
    const AdamState adam_before = adam_;
    const auto iterations = calls * static_cast<std::uint64_t>(params_.iterations_per_call);
    try {
      for (std::uint64_t it = 0; it < iterations; ++it) {
        const Batch batch = sample_batch(online_, *replay_, static_cast<std::size_t>(params_.batch_size),
                                         params_.online_probability, sampler_);
        const LossAndGrad lg = loss_and_grad(head_, batch.samples);
        apply_update(head_, adam_, lg.gradients, params_.learning_rate, params_.weight_decay);
      }
    } catch (const NumericError&) {
      head_ = head_before;
      adam_ = adam_before;
      return false;
    }
    return true;
  }

  ClassifierHead head_;
  AdamState adam_;
  OnlineBuffer online_;
  std::shared_ptr<const ReplayStore> replay_;
  HyperParams params_;
  bool adapt_ = true;
  Rng sampler_;
  std::uint64_t frame_count_ = 0;
  std::uint64_t finetune_calls_ = 0;
  CostLedger ledger_;
};

/// Folds process_frame over the stream, one verdict per frame.
inline std::vector<FrameVerdict> run_stream(Engine& engine, std::span<const Frame> frames) {
  std::vector<FrameVerdict> trace;
  trace.reserve(frames.size());
  for (const Frame& f : frames) trace.push_back(engine.process_frame(f));
  return trace;
}

/// Pure inference with the given head; no adaptation. Pseudo-labels are
/// reported but never used.
inline std::vector<FrameVerdict> run_baseline_frozen(const ClassifierHead& head,
                                                     std::span<const Frame> frames,
                                                     const HyperParams& params = {}) {
  std::vector<FrameVerdict> trace;
  trace.reserve(frames.size());
  for (const Frame& f : frames) {
    FrameVerdict v;
    v.frame_index = f.index;
    v.y = forward(head, f.features);
    v.decision = v.y > params.eval_threshold ? ClassLabel::Spoof : ClassLabel::Live;
    v.pseudo = assign_pseudo_label(v.y, params.margin);
    trace.push_back(v);
  }
  return trace;
}

/// Exponential moving average of per-frame probabilities:
///   s_1 = y_1,  s_t = momentum * s_{t-1} + (1 - momentum) * y_t.
class EmaSmoother {
 public:
  explicit EmaSmoother(double momentum) : momentum_(momentum) {
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw ConfigError("ema momentum out of range: must be in [0, 1)");
  }
  double update(double y) {
    state_ = started_ ? momentum_ * state_ + (1.0 - momentum_) * y : y;
    started_ = true;
    return state_;
  }
  void reset() noexcept { started_ = false; }

 private:
  double momentum_;
  double state_ = 0.0;
  bool started_ = false;
};

/// Frozen head with EMA-smoothed output probabilities. The smoother restarts
/// at every frame index listed in `reset_at`.
inline std::vector<FrameVerdict> run_baseline_smoothed(const ClassifierHead& head,
                                                       std::span<const Frame> frames,
                                                       double momentum,
                                                       const HyperParams& params = {},
                                                       std::span<const std::int64_t> reset_at = {}) {
  EmaSmoother ema(momentum);
  std::vector<FrameVerdict> trace = run_baseline_frozen(head, frames, params);
  for (FrameVerdict& v : trace) {
    if (std::find(reset_at.begin(), reset_at.end(), v.frame_index) != reset_at.end()) ema.reset();
    v.y = ema.update(v.y);
    v.decision = v.y > params.eval_threshold ? ClassLabel::Spoof : ClassLabel::Live;
    v.pseudo = assign_pseudo_label(v.y, params.margin);
  }
  return trace;
}

}  // namespace oap
