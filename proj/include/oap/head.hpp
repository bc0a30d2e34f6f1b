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

// Trainable classifier head: dense d -> 64 (ReLU) -> 1 (sigmoid), its
// cross-entropy loss with hand-written gradients, and Adam with decoupled
// weight decay.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "oap/domain.hpp"
#include "oap/error.hpp"
#include "oap/rng.hpp"

namespace oap {

inline constexpr std::size_t kHiddenUnits = 64;
inline constexpr double kProbabilityEpsilon = 1e-7;

/// Flat parameter layout: W1 (d x hidden, row-major), b1 (hidden), W2
/// (hidden), b2 (1).
struct HeadShape {
  std::size_t dim = 0;
  std::size_t hidden = kHiddenUnits;

  std::size_t w1_offset() const noexcept { return 0; }
  std::size_t b1_offset() const noexcept { return dim * hidden; }
  std::size_t w2_offset() const noexcept { return b1_offset() + hidden; }
  std::size_t b2_offset() const noexcept { return w2_offset() + hidden; }
  std::size_t parameter_count() const noexcept { return b2_offset() + 1; }

  friend bool operator==(const HeadShape&, const HeadShape&) = default;
};

class ClassifierHead {
 public:
  ClassifierHead() = default;
  /// All-zero head.
  explicit ClassifierHead(std::size_t dim, std::size_t hidden = kHiddenUnits)
      : shape_{dim, hidden}, params_(shape_.parameter_count(), 0.0) {
    if (dim == 0) throw DataError("classifier head needs a feature dimension >= 1");
    if (hidden == 0) throw DataError("classifier head needs at least one hidden unit");
  }

  const HeadShape& shape() const noexcept { return shape_; }
  std::size_t dim() const noexcept { return shape_.dim; }
  std::size_t hidden() const noexcept { return shape_.hidden; }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  double w1(std::size_t i, std::size_t j) const { return params_[i * shape_.hidden + j]; }
  double& w1(std::size_t i, std::size_t j) { return params_[i * shape_.hidden + j]; }
  double b1(std::size_t j) const { return params_[shape_.b1_offset() + j]; }
  double& b1(std::size_t j) { return params_[shape_.b1_offset() + j]; }
  double w2(std::size_t j) const { return params_[shape_.w2_offset() + j]; }
  double& w2(std::size_t j) { return params_[shape_.w2_offset() + j]; }
  double b2() const { return params_[shape_.b2_offset()]; }
  double& b2() { return params_[shape_.b2_offset()]; }

  bool all_finite() const noexcept {
    return std::all_of(params_.begin(), params_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;

 private:
  HeadShape shape_;
  std::vector<double> params_;
};

/// Same layout as the head's flat parameter vector.
struct Gradients {
  std::vector<double> values;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t parameter_count)
      : m(parameter_count, 0.0), v(parameter_count, 0.0) {}
  explicit AdamState(const ClassifierHead& head) : AdamState(head.parameters().size()) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
inline ClassifierHead init_head(std::size_t dim, Rng& rng, std::size_t hidden = kHiddenUnits) {
  ClassifierHead head(dim, hidden);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(dim));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < hidden; ++j) head.w1(i, j) = rng.uniform(-s1, s1);
  for (std::size_t j = 0; j < hidden; ++j) head.w2(j) = rng.uniform(-s2, s2);
  return head;
}

namespace detail {

inline void check_dim(const ClassifierHead& head, const FeatureVector& f) {
  if (f.dim() != head.dim())
    throw DataError("feature dimension mismatch: head expects " + std::to_string(head.dim()) +
                    ", got " + std::to_string(f.dim()));
}

/// Pre-activations into `pre`, returns the output logit.
inline double forward_logit(const ClassifierHead& head, std::span<const double> f,
                            std::span<double> pre) {
  const std::size_t hidden = head.hidden();
  const auto p = head.parameters();
  std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(head.shape().b1_offset()), hidden,
              pre.begin());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double fi = f[i];
    const double* row = p.data() + i * hidden;
    for (std::size_t j = 0; j < hidden; ++j) pre[j] += fi * row[j];
  }
  double z = head.b2();
  const double* w2 = p.data() + head.shape().w2_offset();
  for (std::size_t j = 0; j < hidden; ++j) z += w2[j] * std::max(pre[j], 0.0);
  return z;
}

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double clamp_probability(double y) noexcept {
  return std::clamp(y, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

}  // namespace detail

/// Spoof probability for one feature vector, clamped to [eps, 1 - eps].
inline double forward(const ClassifierHead& head, const FeatureVector& f) {
  detail::check_dim(head, f);
  std::vector<double> pre(head.hidden());
  return detail::clamp_probability(detail::sigmoid(detail::forward_logit(head, f.values(), pre)));
}

struct LossAndGrad {
  double loss = 0.0;
  Gradients gradients;
};

/// Mean binary cross-entropy over the batch and its gradient.
///
/// The loss uses the clamped probability. The gradient w.r.t. the logit is
/// (sigmoid(z) - label), the exact derivative everywhere the clamp is
/// inactive; inside the clamp it keeps pointing towards the label instead of
/// vanishing.
inline LossAndGrad loss_and_grad(const ClassifierHead& head,
                                 std::span<const LabeledFeature> batch) {
  if (batch.empty()) throw DataError("loss_and_grad: empty batch");
  const HeadShape& shape = head.shape();
  const std::size_t hidden = shape.hidden;
  const auto p = head.parameters();
  const double* w2 = p.data() + shape.w2_offset();

  LossAndGrad out;
  out.gradients.values.assign(shape.parameter_count(), 0.0);
  double* g = out.gradients.values.data();
  std::vector<double> pre(hidden);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (const LabeledFeature& sample : batch) {
    detail::check_dim(head, sample.features);
    const auto f = sample.features.values();
    const double z = detail::forward_logit(head, f, pre);
    const double y_raw = detail::sigmoid(z);
    const double y = detail::clamp_probability(y_raw);
    const double label = to_int(sample.label);
    out.loss -= label * std::log(y) + (1.0 - label) * std::log(1.0 - y);

    const double dz = (y_raw - label) * inv_n;
    g[shape.b2_offset()] += dz;
    for (std::size_t j = 0; j < hidden; ++j) {
      if (pre[j] <= 0.0) continue;
      g[shape.w2_offset() + j] += dz * pre[j];
      const double da = dz * w2[j];
      g[shape.b1_offset() + j] += da;
      for (std::size_t i = 0; i < f.size(); ++i) g[i * hidden + j] += f[i] * da;
    }
  }
  out.loss *= inv_n;
  return out;
}

/// One Adam step with decoupled weight decay:
///   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
/// Throws NumericError and leaves head and state untouched if the gradient or
/// the resulting parameters are not finite.
inline void apply_update(ClassifierHead& head, AdamState& state, const Gradients& grads,
                         double learning_rate, double weight_decay) {
  const std::size_t n = head.parameters().size();
  if (grads.values.size() != n)
    throw DataError("apply_update: gradient has " + std::to_string(grads.values.size()) +
                    " entries, head has " + std::to_string(n));
  if (state.m.size() != n || state.v.size() != n)
    throw DataError("apply_update: optimizer state does not match head shape");
  for (const double gi : grads.values)
    if (!std::isfinite(gi)) throw NumericError("apply_update: non-finite gradient");

  const std::uint64_t t = state.step_count + 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));

  std::vector<double> m(n), v(n), theta(n);
  const auto p = head.parameters();
  for (std::size_t k = 0; k < n; ++k) {
    const double gk = grads.values[k];
    m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * gk;
    v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * gk * gk;
    const double m_hat = m[k] / bc1;
    const double v_hat = v[k] / bc2;
    theta[k] = p[k] - learning_rate * (m_hat / (std::sqrt(v_hat) + state.epsilon) +
                                       weight_decay * p[k]);
    if (!std::isfinite(theta[k]) || !std::isfinite(m[k]) || !std::isfinite(v[k]))
      throw NumericError("apply_update: update produced a non-finite parameter");
  }
  std::copy(theta.begin(), theta.end(), head.parameters().begin());
  state.m = std::move(m);
  state.v = std::move(v);
  state.step_count = t;
}

struct PretrainSchedule {
  std::size_t iterations = 2000;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double gamma = 0.8;           // exponential decay factor
  std::size_t decay_every = 1000;
  double weight_decay = 1e-3;

  double learning_rate_at(std::size_t iteration) const {
    if (decay_every == 0) return learning_rate;
    return learning_rate * std::pow(gamma, static_cast<double>(iteration / decay_every));
  }
};

inline double mean_loss(const ClassifierHead& head, std::span<const LabeledFeature> data) {
  return loss_and_grad(head, data).loss;
}

/// Fraction of samples whose thresholded prediction (spoof iff y > threshold)
/// matches the label.
inline double accuracy(const ClassifierHead& head, std::span<const LabeledFeature> data,
                       double threshold = 0.5) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data) {
    const bool spoof = forward(head, s.features) > threshold;
    correct += (spoof == (s.label == ClassLabel::Spoof)) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Mini-batch Adam training of the head on labeled features. Batches are drawn
/// uniformly with replacement from `data`.
inline ClassifierHead pretrain(ClassifierHead head, std::span<const LabeledFeature> data,
                               const PretrainSchedule& schedule, Rng& rng) {
  bool has_live = false, has_spoof = false;
  for (const auto& s : data) {
    has_live |= s.label == ClassLabel::Live;
    has_spoof |= s.label == ClassLabel::Spoof;
  }
  if (!has_live || !has_spoof)
    throw DataError(std::string("pretrain: dataset has no ") + (has_live ? "spoof" : "live") +
                    " samples");
  if (schedule.batch_size == 0) throw ConfigError("pretrain: batch size must be >= 1");

  AdamState adam(head);
  std::vector<LabeledFeature> batch(schedule.batch_size);
  for (std::size_t it = 0; it < schedule.iterations; ++it) {
    for (auto& slot : batch) slot = data[rng.index(data.size())];
    const LossAndGrad lg = loss_and_grad(head, batch);
    apply_update(head, adam, lg.gradients, schedule.learning_rate_at(it), schedule.weight_decay);
  }
  return head;
}

// ---------------------------------------------------------------------------
// Binary head file: "OAPH", u32 version, u32 d, u32 layer count, per layer
// u32 rows + u32 cols, then f64 parameters in flat layout order. Little-endian.

inline constexpr std::array<char, 4> kHeadMagic = {'O', 'A', 'P', 'H'};
inline constexpr std::uint32_t kHeadFormatVersion = 1;

namespace detail {

template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw DataError("head file truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline void write_head(std::ostream& os, const ClassifierHead& head) {
  os.write(kHeadMagic.data(), kHeadMagic.size());
  detail::write_le<std::uint32_t>(os, kHeadFormatVersion);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(head.dim()));
  detail::write_le<std::uint32_t>(os, 2);
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(head.dim()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(head.hidden()));
  detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(head.hidden()));
  detail::write_le<std::uint32_t>(os, 1);
  for (const double v : head.parameters()) detail::write_le<double>(os, v);
  if (!os) throw DataError("failed writing head");
}

inline ClassifierHead read_head(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kHeadMagic)
    throw DataError("not a head file (bad magic)");
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kHeadFormatVersion)
    throw DataError("unsupported head format version " + std::to_string(version));
  const auto dim = detail::read_le<std::uint32_t>(is);
  const auto layers = detail::read_le<std::uint32_t>(is);
  if (layers != 2) throw DataError("head file: expected 2 layers, found " + std::to_string(layers));
  const auto r1 = detail::read_le<std::uint32_t>(is);
  const auto c1 = detail::read_le<std::uint32_t>(is);
  const auto r2 = detail::read_le<std::uint32_t>(is);
  const auto c2 = detail::read_le<std::uint32_t>(is);
  if (r1 != dim || r2 != c1 || c2 != 1 || dim == 0 || c1 == 0)
    throw DataError("head file: inconsistent layer shapes");
  ClassifierHead head(dim, c1);
  for (double& v : head.parameters()) v = detail::read_le<double>(is);
  if (!head.all_finite()) throw NumericError("head file contains non-finite parameters");
  return head;
}

inline void save_head(const std::string& path, const ClassifierHead& head) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_head(os, head);
}

inline ClassifierHead load_head(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return read_head(is);
}

}  // namespace oap
