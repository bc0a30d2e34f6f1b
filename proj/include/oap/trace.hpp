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

// Per-frame trace records as CSV and as JSON lines.
//
// CSV columns:
//   frame_index,ground_truth,y,decision,pseudo_label,finetuned,online_size,cumulative_flops
// ground_truth is empty when unknown. Reals use the shortest round-trip form,
// so a trace read back compares equal to the one written.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "oap/domain.hpp"
#include "oap/engine.hpp"
#include "oap/error.hpp"

namespace oap {

struct TraceRecord {
  FrameVerdict verdict;
  std::optional<ClassLabel> truth;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline constexpr std::string_view kTraceCsvHeader =
    "frame_index,ground_truth,y,decision,pseudo_label,finetuned,online_size,cumulative_flops";

/// Pairs verdicts with ground truth; `truth` may be empty or as long as `trace`.
inline std::vector<TraceRecord> make_trace(std::span<const FrameVerdict> trace,
                                           std::span<const ClassLabel> truth = {}) {
  if (!truth.empty() && truth.size() != trace.size())
    throw DataError("ground truth length does not match trace length");
  std::vector<TraceRecord> out;
  out.reserve(trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k)
    out.push_back({trace[k], truth.empty() ? std::nullopt : std::optional(truth[k])});
  return out;
}

namespace detail {

inline std::string real_to_string(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::optional<PseudoLabel> parse_pseudo_label(std::string_view s) {
  if (s == "live") return PseudoLabel::Live;
  if (s == "spoof") return PseudoLabel::Spoof;
  if (s == "discard") return PseudoLabel::Discard;
  return std::nullopt;
}

template <class T>
T parse_trace_number(std::string_view s, std::size_t row, const char* column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("trace row " + std::to_string(row) + ": bad " + column + " '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, std::span<const TraceRecord> records) {
  os << kTraceCsvHeader << '\n';
  for (const auto& r : records) {
    const auto& v = r.verdict;
    os << v.frame_index << ',' << (r.truth ? to_string(*r.truth) : "") << ','
       << detail::real_to_string(v.y) << ',' << to_string(v.decision) << ','
       << to_string(v.pseudo) << ',' << (v.finetuned ? 1 : 0) << ',' << v.online_size << ','
       << detail::real_to_string(v.cumulative_flops) << '\n';
  }
}

inline void write_trace_jsonl(std::ostream& os, std::span<const TraceRecord> records) {
  for (const auto& r : records) {
    const auto& v = r.verdict;
    nlohmann::json j{{"frame_index", v.frame_index},
                     {"ground_truth", r.truth ? nlohmann::json(to_string(*r.truth)) : nlohmann::json()},
                     {"y", v.y},
                     {"decision", to_string(v.decision)},
                     {"pseudo_label", to_string(v.pseudo)},
                     {"finetuned", v.finetuned},
                     {"online_size", v.online_size},
                     {"cumulative_flops", v.cumulative_flops}};
    os << j.dump() << '\n';
  }
}

inline std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceCsvHeader)
    throw DataError("trace: missing or unexpected CSV header");
  std::vector<TraceRecord> out;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 8)
      throw DataError("trace row " + std::to_string(row) + ": expected 8 columns, got " +
                      std::to_string(cols.size()));
    TraceRecord r;
    auto& v = r.verdict;
    v.frame_index = detail::parse_trace_number<std::int64_t>(cols[0], row, "frame_index");
    if (!cols[1].empty()) {
      r.truth = parse_class_label(cols[1]);
      if (!r.truth) throw DataError("trace row " + std::to_string(row) + ": bad ground_truth");
    }
    v.y = detail::parse_trace_number<double>(cols[2], row, "y");
    const auto decision = parse_class_label(cols[3]);
    const auto pseudo = detail::parse_pseudo_label(cols[4]);
    if (!decision || !pseudo)
      throw DataError("trace row " + std::to_string(row) + ": bad decision or pseudo_label");
    v.decision = *decision;
    v.pseudo = *pseudo;
    v.finetuned = detail::parse_trace_number<int>(cols[5], row, "finetuned") != 0;
    v.online_size = detail::parse_trace_number<std::size_t>(cols[6], row, "online_size");
    v.cumulative_flops = detail::parse_trace_number<double>(cols[7], row, "cumulative_flops");
    out.push_back(r);
  }
  return out;
}

inline void save_trace_csv(const std::string& path, std::span<const TraceRecord> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  write_trace_csv(os, records);
  if (!os) throw DataError("error writing " + path);
}

inline void save_trace_jsonl(const std::string& path, std::span<const TraceRecord> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path);
  write_trace_jsonl(os, records);
  if (!os) throw DataError("error writing " + path);
}

inline std::vector<TraceRecord> load_trace_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return read_trace_csv(is);
}

/// Per-frame mean and population std of y across traces of equal length.
struct TraceSummaryRow {
  std::int64_t frame_index = 0;
  std::optional<ClassLabel> truth;
  double mean = 0.0;
  double std = 0.0;
};

inline std::vector<TraceSummaryRow> summarize_traces(std::span<const std::vector<TraceRecord>> traces) {
  if (traces.empty()) throw DataError("report: no traces given");
  const std::size_t n = traces.front().size();
  for (const auto& t : traces)
    if (t.size() != n)
      throw DataError("report: trace lengths differ (" + std::to_string(n) + " vs " +
                      std::to_string(t.size()) + ")");
  std::vector<TraceSummaryRow> out(n);
  const double m = static_cast<double>(traces.size());
  for (std::size_t k = 0; k < n; ++k) {
    auto& row = out[k];
    row.frame_index = traces.front()[k].verdict.frame_index;
    row.truth = traces.front()[k].truth;
    for (const auto& t : traces) row.mean += t[k].verdict.y;
    row.mean /= m;
    for (const auto& t : traces) row.std += (t[k].verdict.y - row.mean) * (t[k].verdict.y - row.mean);
    row.std = std::sqrt(row.std / m);
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, std::span<const TraceSummaryRow> rows) {
  os << "frame_index,ground_truth,mean_y,std_y\n";
  for (const auto& r : rows)
    os << r.frame_index << ',' << (r.truth ? to_string(*r.truth) : "") << ','
       << detail::real_to_string(r.mean) << ',' << detail::real_to_string(r.std) << '\n';
}

}  // namespace oap
