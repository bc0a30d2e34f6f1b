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

// Synthetic feature streams standing in for a frozen backbone, and the
// plain-text feature file used to exchange features with other tools.
//
// Feature model: two Gaussian class clusters at -/+ separation/2 along a
// seeded unit "class axis". Three shift sources are layered on top:
//   user    - an isotropic offset per subject (test subjects are disjoint
//             from training subjects),
//   source  - a small offset per (class, source id), e.g. a spoof medium,
//   drift   - a linear displacement over time along a seeded direction.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "oap/domain.hpp"
#include "oap/engine.hpp"
#include "oap/error.hpp"
#include "oap/rng.hpp"

namespace oap {

struct GeneratorConfig {
  std::size_t dim = 32;
  double class_separation = 6.0;   // distance between class means, in noise_std units
  double user_shift_scale = 1.0;   // per-coordinate std of a subject offset, noise_std units
  double source_shift_scale = 0.3; // per-coordinate std of a source offset, noise_std units
  double drift_rate = 0.1;         // noise_std units per second
  double noise_std = 1.0;
  std::size_t sources_per_class = 3;  // sources seen during pre-training
  std::uint64_t seed = 1;
};

inline GeneratorConfig validate(const GeneratorConfig& cfg) {
  if (cfg.dim == 0) throw ConfigError("dim out of range: must be >= 1");
  if (!(cfg.class_separation > 0.0))
    detail::range_error("class_separation", "(0, inf)", cfg.class_separation);
  if (!(cfg.noise_std > 0.0)) detail::range_error("noise_std", "(0, inf)", cfg.noise_std);
  if (!(cfg.user_shift_scale >= 0.0))
    detail::range_error("user_shift_scale", "[0, inf)", cfg.user_shift_scale);
  if (!(cfg.source_shift_scale >= 0.0))
    detail::range_error("source_shift_scale", "[0, inf)", cfg.source_shift_scale);
  if (!(cfg.drift_rate >= 0.0)) detail::range_error("drift_rate", "[0, inf)", cfg.drift_rate);
  if (cfg.sources_per_class == 0) throw ConfigError("sources_per_class out of range: must be >= 1");
  return cfg;
}

struct Segment {
  ClassLabel label = ClassLabel::Live;
  std::size_t duration_frames = 0;
  std::uint64_t source_id = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct StreamScenario {
  std::vector<Segment> segments;
  double frame_rate = 30.0;
  std::uint64_t user_id = 0;

  std::size_t total_frames() const noexcept {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.duration_frames;
    return n;
  }
  bool single_video() const noexcept { return segments.size() == 1; }
};

inline const StreamScenario& validate(const StreamScenario& s) {
  if (s.segments.empty()) throw ConfigError("scenario has no segments");
  for (std::size_t k = 0; k < s.segments.size(); ++k)
    if (s.segments[k].duration_frames == 0)
      throw ConfigError("scenario segment " + std::to_string(k + 1) + " has zero duration");
  if (!(s.frame_rate > 0.0)) detail::range_error("frame_rate", "(0, inf)", s.frame_rate);
  return s;
}

/// Parses "live:300,spoof:300:2,..." (label:frames[:source]). Without an
/// explicit source, the n-th segment of a class gets source n-1.
inline std::vector<Segment> parse_segments(std::string_view text) {
  std::vector<Segment> out;
  std::uint64_t next_source[2] = {0, 0};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view item = text.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) throw ConfigError("segments: empty entry in '" + std::string(text) + "'");

    std::vector<std::string_view> parts;
    std::size_t p = 0;
    while (true) {
      const std::size_t colon = item.find(':', p);
      parts.push_back(item.substr(p, colon == std::string_view::npos ? colon : colon - p));
      if (colon == std::string_view::npos) break;
      p = colon + 1;
    }
    if (parts.size() < 2 || parts.size() > 3)
      throw ConfigError("segments: expected label:frames[:source], got '" + std::string(item) + "'");
    const auto label = parse_class_label(parts[0]);
    if (!label) throw ConfigError("segments: unknown label '" + std::string(parts[0]) + "'");

    auto parse_uint = [&](std::string_view s, const char* what) {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(std::string("segments: bad ") + what + " '" + std::string(s) + "'");
      return v;
    };
    Segment seg;
    seg.label = *label;
    seg.duration_frames = parse_uint(parts[1], "duration");
    if (seg.duration_frames == 0)
      throw ConfigError("segments: zero-duration segment '" + std::string(item) + "'");
    seg.source_id = parts.size() == 3 ? parse_uint(parts[2], "source") : next_source[to_int(*label)];
    next_source[to_int(*label)] = seg.source_id + 1;
    out.push_back(seg);
    pos = comma + 1;
  }
  return out;
}

inline std::string format_segments(const std::vector<Segment>& segments) {
  std::string s;
  for (const auto& seg : segments) {
    if (!s.empty()) s += ',';
    s += std::string(to_string(seg.label)) + ':' + std::to_string(seg.duration_frames) + ':' +
         std::to_string(seg.source_id);
  }
  return s;
}

/// Subject ids used for test streams are offset by this constant, so they
/// never coincide with a training subject.
inline constexpr std::uint64_t kHeldOutUserBase = 1'000'000;

/// One generated frame with its hidden ground truth.
struct StreamFrame {
  Frame frame;
  ClassLabel truth = ClassLabel::Live;
  std::size_t segment = 0;
};

class FeatureGenerator {
 public:
  explicit FeatureGenerator(const GeneratorConfig& cfg) : cfg_(validate(cfg)) {
    Rng rng = seeded_rng(cfg_.seed, "class-axis");
    axis_ = random_unit(rng);
  }

  const GeneratorConfig& config() const noexcept { return cfg_; }
  std::span<const double> class_axis() const noexcept { return axis_; }

  /// Cluster centre of a class, before user/source/drift offsets.
  std::vector<double> class_mean(ClassLabel c) const {
    const double sign = c == ClassLabel::Spoof ? 1.0 : -1.0;
    std::vector<double> m(cfg_.dim);
    for (std::size_t i = 0; i < cfg_.dim; ++i)
      m[i] = sign * 0.5 * cfg_.class_separation * cfg_.noise_std * axis_[i];
    return m;
  }

  std::vector<double> user_offset(std::uint64_t user) const {
    Rng rng = seeded_rng(cfg_.seed, "user:" + std::to_string(user));
    return gaussian(rng, cfg_.user_shift_scale * cfg_.noise_std);
  }

  std::vector<double> source_offset(ClassLabel c, std::uint64_t source) const {
    Rng rng = seeded_rng(cfg_.seed, "source:" + std::string(to_string(c)) + ":" +
                                        std::to_string(source));
    return gaussian(rng, cfg_.source_shift_scale * cfg_.noise_std);
  }

  std::vector<double> drift_direction(std::uint64_t user) const {
    Rng rng = seeded_rng(cfg_.seed, "drift:" + std::to_string(user));
    return random_unit(rng);
  }

  /// Balanced labeled set from `n_users` training subjects. Within a subject
  /// samples alternate live/spoof and cycle over the pre-training sources.
  std::vector<LabeledFeature> pretraining_set(std::size_t n_users,
                                              std::size_t frames_per_user) const {
    if (n_users < 2) throw ConfigError("pretraining set needs at least 2 users");
    std::vector<LabeledFeature> out;
    out.reserve(n_users * frames_per_user);
    for (std::uint64_t u = 0; u < n_users; ++u) {
      const auto offset = user_offset(u);
      Rng noise = seeded_rng(cfg_.seed, "pretrain:" + std::to_string(u));
      for (std::size_t k = 0; k < frames_per_user; ++k) {
        const ClassLabel c = k % 2 == 0 ? ClassLabel::Live : ClassLabel::Spoof;
        const std::uint64_t source = (k / 2) % cfg_.sources_per_class;
        out.push_back({sample(c, offset, source_offset(c, source), {}, 0.0, noise), c});
      }
    }
    return out;
  }

  /// Frames of a held-out subject following the scenario. Indices are 1-based
  /// and time is (index - 1) / frame_rate.
  std::vector<StreamFrame> stream(const StreamScenario& scenario) const {
    validate(scenario);
    const std::uint64_t user = kHeldOutUserBase + scenario.user_id;
    const auto offset = user_offset(user);
    const auto drift = drift_direction(user);
    Rng noise = seeded_rng(cfg_.seed, "stream:" + std::to_string(user));

    std::vector<StreamFrame> out;
    out.reserve(scenario.total_frames());
    std::int64_t index = 1;
    for (std::size_t s = 0; s < scenario.segments.size(); ++s) {
      const Segment& seg = scenario.segments[s];
      const auto src = source_offset(seg.label, seg.source_id);
      for (std::size_t k = 0; k < seg.duration_frames; ++k, ++index) {
        const double time = static_cast<double>(index - 1) / scenario.frame_rate;
        StreamFrame f;
        f.frame.features = sample(seg.label, offset, src, drift, time, noise);
        f.frame.index = index;
        f.frame.time = time;
        f.truth = seg.label;
        f.segment = s;
        out.push_back(std::move(f));
      }
    }
    return out;
  }

 private:
  std::vector<double> gaussian(Rng& rng, double stddev) const {
    std::vector<double> v(cfg_.dim);
    for (double& x : v) x = stddev * rng.normal();
    return v;
  }

  std::vector<double> random_unit(Rng& rng) const {
    std::vector<double> v = gaussian(rng, 1.0);
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  }

  FeatureVector sample(ClassLabel c, std::span<const double> user, std::span<const double> source,
                       std::span<const double> drift, double time, Rng& noise) const {
    const double sign = c == ClassLabel::Spoof ? 1.0 : -1.0;
    const double half = 0.5 * cfg_.class_separation * cfg_.noise_std;
    const double shift = cfg_.drift_rate * cfg_.noise_std * time;
    FeatureVector f(cfg_.dim);
    for (std::size_t i = 0; i < cfg_.dim; ++i) {
      double x = sign * half * axis_[i] + user[i] + source[i] + cfg_.noise_std * noise.normal();
      if (!drift.empty()) x += shift * drift[i];
      f[i] = x;
    }
    return f;
  }

  GeneratorConfig cfg_;
  std::vector<double> axis_;
};

inline std::vector<LabeledFeature> generate_pretraining_set(const GeneratorConfig& cfg,
                                                            std::size_t n_users,
                                                            std::size_t frames_per_user) {
  return FeatureGenerator(cfg).pretraining_set(n_users, frames_per_user);
}

inline std::vector<StreamFrame> generate_stream(const GeneratorConfig& cfg,
                                                const StreamScenario& scenario) {
  return FeatureGenerator(cfg).stream(scenario);
}

inline std::vector<Frame> frames_of(std::span<const StreamFrame> stream) {
  std::vector<Frame> out;
  out.reserve(stream.size());
  for (const auto& s : stream) out.push_back(s.frame);
  return out;
}

// ---------------------------------------------------------------------------
// Feature file:
//   oapf v1 d=<dim> labeled=<0|1> fps=<rate>
//   <frame_index>,<time>[,<label 0|1>],<v_1>,...,<v_d>
// Floats are written in shortest round-trip form, so save/load is bit-exact.

struct FeatureRecord {
  FeatureVector features;
  std::optional<ClassLabel> label;
  std::int64_t frame_index = 0;
  double time = 0.0;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct FeatureFile {
  std::size_t dim = 0;
  double fps = 30.0;
  bool labeled = false;
  std::vector<FeatureRecord> records;
};

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

inline double parse_double(std::string_view s, std::size_t row) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("feature file row " + std::to_string(row) + ": bad number '" +
                    std::string(s) + "'");
  if (!std::isfinite(v))
    throw DataError("feature file row " + std::to_string(row) + ": non-finite value");
  return v;
}

}  // namespace detail

inline void write_feature_file(std::ostream& os, const FeatureFile& file) {
  std::string line = "oapf v1 d=" + std::to_string(file.dim) +
                     " labeled=" + (file.labeled ? "1" : "0") + " fps=";
  detail::append_double(line, file.fps);
  os << line << '\n';
  for (std::size_t r = 0; r < file.records.size(); ++r) {
    const FeatureRecord& rec = file.records[r];
    if (rec.features.dim() != file.dim)
      throw DataError("feature record " + std::to_string(r + 1) + " has dimension " +
                      std::to_string(rec.features.dim()) + ", expected " + std::to_string(file.dim));
    if (file.labeled && !rec.label)
      throw DataError("feature record " + std::to_string(r + 1) + " has no label");
    line.clear();
    line += std::to_string(rec.frame_index);
    line += ',';
    detail::append_double(line, rec.time);
    if (file.labeled) {
      line += ',';
      line += std::to_string(to_int(*rec.label));
    }
    for (const double v : rec.features.values()) {
      line += ',';
      detail::append_double(line, v);
    }
    os << line << '\n';
  }
  if (!os) throw DataError("failed writing feature file");
}

inline FeatureFile read_feature_file(std::istream& is) {
  FeatureFile file;
  std::string line;
  if (!std::getline(is, line)) throw DataError("feature file: missing header");
  {
    std::istringstream hs(line);
    std::string magic, version, d, labeled, fps;
    hs >> magic >> version >> d >> labeled >> fps;
    if (magic != "oapf" || version != "v1" || d.rfind("d=", 0) != 0 ||
        labeled.rfind("labeled=", 0) != 0 || fps.rfind("fps=", 0) != 0)
      throw DataError("feature file: malformed header '" + line + "'");
    std::size_t dim = 0;
    const std::string_view dv = std::string_view(d).substr(2);
    const auto [p, ec] = std::from_chars(dv.data(), dv.data() + dv.size(), dim);
    if (ec != std::errc() || p != dv.data() + dv.size() || dim == 0)
      throw DataError("feature file: malformed header '" + line + "'");
    const std::string_view lv = std::string_view(labeled).substr(8);
    if (lv != "0" && lv != "1") throw DataError("feature file: malformed header '" + line + "'");
    file.dim = dim;
    file.labeled = lv == "1";
    file.fps = detail::parse_double(std::string_view(fps).substr(4), 0);
  }

  std::size_t row = 0;
  std::vector<std::string_view> fields;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++row;
    fields.clear();
    std::string_view rest(line);
    while (true) {
      const std::size_t comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    const std::size_t fixed = file.labeled ? 3 : 2;
    if (fields.size() != fixed + file.dim)
      throw DataError("feature file row " + std::to_string(row) + ": expected " +
                      std::to_string(file.dim) + " values, found " +
                      std::to_string(fields.size() < fixed ? 0 : fields.size() - fixed));
    FeatureRecord rec;
    {
      const auto [p, ec] =
          std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), rec.frame_index);
      if (ec != std::errc() || p != fields[0].data() + fields[0].size())
        throw DataError("feature file row " + std::to_string(row) + ": bad frame index");
    }
    rec.time = detail::parse_double(fields[1], row);
    if (file.labeled) {
      rec.label = parse_class_label(fields[2]);
      if (!rec.label || (fields[2] != "0" && fields[2] != "1"))
        throw DataError("feature file row " + std::to_string(row) + ": bad label");
    }
    std::vector<double> values(file.dim);
    for (std::size_t i = 0; i < file.dim; ++i) values[i] = detail::parse_double(fields[fixed + i], row);
    rec.features = FeatureVector(std::move(values));
    file.records.push_back(std::move(rec));
  }
  return file;
}

inline void save_feature_file(const std::string& path, const FeatureFile& file) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_feature_file(os, file);
}

inline FeatureFile load_feature_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  return read_feature_file(is);
}

inline FeatureFile to_feature_file(std::span<const StreamFrame> stream, double fps) {
  FeatureFile file;
  file.dim = stream.empty() ? 0 : stream.front().frame.features.dim();
  file.fps = fps;
  file.labeled = true;
  for (const auto& s : stream)
    file.records.push_back({s.frame.features, s.truth, s.frame.index, s.frame.time});
  return file;
}

/// Labeled set as a feature file; rows are numbered from 1 at the given rate.
inline FeatureFile to_feature_file(std::span<const LabeledFeature> data, std::size_t dim,
                                   double fps = 30.0) {
  FeatureFile file;
  file.dim = dim;
  file.fps = fps;
  file.labeled = true;
  std::int64_t index = 1;
  for (const auto& d : data) {
    file.records.push_back({d.features, d.label, index, static_cast<double>(index - 1) / fps});
    ++index;
  }
  return file;
}

inline std::vector<LabeledFeature> labeled_features(const FeatureFile& file) {
  if (!file.labeled) throw DataError("feature file has no labels");
  std::vector<LabeledFeature> out;
  out.reserve(file.records.size());
  for (const auto& r : file.records) out.push_back({r.features, *r.label});
  return out;
}

inline std::vector<Frame> frames_of(const FeatureFile& file) {
  std::vector<Frame> out;
  out.reserve(file.records.size());
  for (const auto& r : file.records) out.push_back({r.features, r.frame_index, r.time});
  return out;
}

inline void save_replay(const std::string& path, const ReplayStore& store, std::size_t dim,
                        double fps = 30.0) {
  save_feature_file(path, to_feature_file(store.entries(), dim, fps));
}

inline ReplayStore load_replay(const std::string& path) {
  return ReplayStore(labeled_features(load_feature_file(path)));
}

}  // namespace oap
