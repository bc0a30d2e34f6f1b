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

// Experiment runner: generate, pretrain, run, sweep, report.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oap/config.hpp"
#include "oap/experiment.hpp"
#include "oap/trace.hpp"

namespace fs = std::filesystem;
using oap::ExperimentConfig;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string mode;
  std::size_t seeds = 0;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value config file");
  cmd->add_option("--set", o.overrides, "override one key (key=value), repeatable");
  cmd->add_option("--mode", o.mode, "oap, frozen or ema");
  cmd->add_option("--seeds", o.seeds, "number of seeded repetitions");
  cmd->add_option("--out", o.out, "output directory");
}

// Defaults, then the config file, then --set, then the dedicated flags.
ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) oap::load_config(o.config_path, cfg);
  for (const auto& kv : o.overrides) oap::apply_override(cfg, kv);
  if (!o.mode.empty()) oap::set_config_value(cfg, "mode", o.mode);
  if (o.seeds != 0) cfg.seeds = o.seeds;
  if (!o.out.empty()) cfg.out = o.out;
  oap::validate(cfg);

  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw oap::DataError("cannot create output directory " + cfg.out + ": " + ec.message());
  std::ofstream os(fs::path(cfg.out) / "config.txt");
  if (!os) throw oap::DataError("cannot write config echo into " + cfg.out);
  oap::write_config(os, cfg);
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out) / name).string();
}

std::string seeded_name(const char* stem, std::size_t k, const char* ext) {
  return std::string(stem) + "_seed" + std::to_string(k) + ext;
}

nlohmann::json report_json(const oap::MetricReport& m) {
  nlohmann::json j;
  oap::to_json(j, m);
  return j;
}

// Writes the per-seed reports and, over seeds, the mean and std of each metric.
void write_metrics(const ExperimentConfig& cfg, const std::vector<oap::MetricReport>& reports) {
  nlohmann::json j;
  j["seeds"] = nlohmann::json::array();
  for (const auto& r : reports) j["seeds"].push_back(report_json(r));
  auto column = [&](double oap::MetricReport::*field) {
    std::vector<double> xs;
    for (const auto& r : reports) xs.push_back(r.*field);
    return oap::mean_std(xs);
  };
  for (const auto& [name, field] :
       std::initializer_list<std::pair<const char*, double oap::MetricReport::*>>{
           {"apcer", &oap::MetricReport::apcer},
           {"bpcer", &oap::MetricReport::bpcer},
           {"acer", &oap::MetricReport::acer},
           {"eer", &oap::MetricReport::eer}}) {
    const auto ms = column(field);
    j["mean"][name] = ms.mean;
    j["std"][name] = ms.std;
  }
  std::ofstream os(out_path(cfg, "metrics.json"));
  if (!os) throw oap::DataError("cannot write metrics.json");
  os << j.dump(2) << '\n';
  std::cout << "acer " << j["mean"]["acer"].get<double>() << " +- " << j["std"]["acer"].get<double>()
            << " over " << reports.size() << " seed(s)\n";
}

void write_trace_files(const ExperimentConfig& cfg, std::size_t k,
                       const std::vector<oap::TraceRecord>& trace) {
  oap::save_trace_csv(out_path(cfg, seeded_name("trace", k, ".csv")), trace);
  oap::save_trace_jsonl(out_path(cfg, seeded_name("trace", k, ".jsonl")), trace);
}

void cmd_generate(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve(o);
  const auto data = oap::pretraining_data(cfg);
  const std::string train = out_path(cfg, "train.oapf");
  oap::save_feature_file(train, oap::to_feature_file(data, cfg.generator.dim, cfg.params.frame_rate));
  std::cout << train << " " << data.size() << " rows\n";
  for (std::size_t k = 0; k < cfg.seeds; ++k) {
    const auto stream = oap::scenario_stream(cfg, k);
    const std::string path = out_path(cfg, seeded_name("stream", k, ".oapf"));
    oap::save_feature_file(path, oap::to_feature_file(stream, cfg.params.frame_rate));
    std::cout << path << " " << stream.size() << " rows\n";
  }
}

void cmd_pretrain(const CommonOptions& o, const std::string& train_file) {
  const ExperimentConfig cfg = resolve(o);
  const auto data = train_file.empty() ? oap::pretraining_data(cfg)
                                       : oap::labeled_features(oap::load_feature_file(train_file));
  if (data.empty()) throw oap::DataError("pretrain: training set is empty");
  const std::size_t dim = data.front().features.dim();
  if (dim != cfg.generator.dim)
    throw oap::DataError("pretrain: training features have d=" + std::to_string(dim) +
                         " but the config says dim=" + std::to_string(cfg.generator.dim));
  for (std::size_t k = 0; k < cfg.seeds; ++k) {
    const auto model = oap::pretrain_model(cfg, data, k);
    const std::string head = out_path(cfg, seeded_name("head", k, ".oaph"));
    const std::string replay = out_path(cfg, seeded_name("replay", k, ".oapf"));
    oap::save_head(head, model.head);
    oap::save_replay(replay, *model.replay, dim, cfg.params.frame_rate);
    std::cout << head << " train accuracy " << model.train_accuracy << "\n"
              << replay << " " << model.replay->size() << " rows\n";
  }
}

struct RunFiles {
  std::string head, replay, stream;
};

void cmd_run(const CommonOptions& o, const RunFiles& files) {
  const ExperimentConfig cfg = resolve(o);
  const bool any = !files.head.empty() || !files.replay.empty() || !files.stream.empty();
  const bool all = !files.head.empty() && !files.replay.empty() && !files.stream.empty();
  if (any && !all) throw oap::ConfigError("run: --head, --replay and --stream go together");

  std::vector<oap::MetricReport> reports;
  if (all) {
    const auto head = oap::load_head(files.head);
    auto replay = std::make_shared<const oap::ReplayStore>(oap::load_replay(files.replay));
    const auto file = oap::load_feature_file(files.stream);
    if (file.dim != head.dim())
      throw oap::DataError("run: stream has d=" + std::to_string(file.dim) + ", head expects " +
                           std::to_string(head.dim()));
    const auto stream = oap::stream_of(file);
    const auto trace = oap::run_mode(cfg.mode, cfg.evaluation, head, replay,
                                     oap::seeded_params(cfg, 0), stream, cfg.ema_momentum,
                                     cfg.ema_reset);
    const auto truths = oap::truths_of(stream);
    write_trace_files(cfg, 0, oap::make_trace(trace, file.labeled ? truths : std::vector<oap::ClassLabel>{}));
    if (!file.labeled) {
      std::cout << "stream is unlabeled; trace written, no metrics\n";
      return;
    }
    reports.push_back(oap::evaluate(oap::scored(stream, trace), cfg.params.eval_threshold));
  } else {
    const auto data = oap::pretraining_data(cfg);
    for (std::size_t k = 0; k < cfg.seeds; ++k) {
      const auto r = oap::run_seed(cfg, data, k);
      write_trace_files(cfg, k, oap::make_trace(r.trace, oap::truths_of(r.stream)));
      reports.push_back(r.report);
    }
  }
  write_metrics(cfg, reports);
}

void cmd_sweep(const CommonOptions& o, const std::string& axis, const std::vector<std::string>& values) {
  const ExperimentConfig base = resolve(o);
  static const std::vector<std::string> axes = {"nu", "delta", "alpha", "replay_size"};
  if (std::find(axes.begin(), axes.end(), axis) == axes.end())
    throw oap::ConfigError("sweep: axis must be one of nu, delta, alpha, replay_size");
  if (values.empty()) throw oap::ConfigError("sweep: no values given");

  const auto data = oap::pretraining_data(base);
  const std::string path = out_path(base, "sweep.csv");
  std::ofstream os(path);
  if (!os) throw oap::DataError("cannot write " + path);
  os << "axis,value,acer_mean,acer_std,apcer_mean,bpcer_mean,eer_mean,kflops_per_frame,replay_bytes\n";
  for (const auto& value : values) {
    ExperimentConfig cfg = base;
    oap::set_config_value(cfg, axis, value);
    oap::validate(cfg);
    std::vector<double> acer, apcer, bpcer, eer;
    for (std::size_t k = 0; k < cfg.seeds; ++k) {
      const auto r = oap::run_seed(cfg, data, k);
      acer.push_back(r.report.acer);
      apcer.push_back(r.report.apcer);
      bpcer.push_back(r.report.bpcer);
      eer.push_back(r.report.eer);
    }
    const double kflops =
        cfg.mode == oap::RunMode::Oap ? oap::adaptation_cost(cfg.params, cfg.generator.dim) / 1e3 : 0.0;
    const auto a = oap::mean_std(acer);
    os << axis << ',' << value << ',' << a.mean << ',' << a.std << ',' << oap::mean_std(apcer).mean
       << ',' << oap::mean_std(bpcer).mean << ',' << oap::mean_std(eer).mean << ',' << kflops << ','
       << oap::replay_memory_bytes(cfg.params.replay_size, cfg.generator.dim) << '\n';
    std::cout << axis << "=" << value << " acer " << a.mean << " +- " << a.std << "\n";
  }
  std::cout << path << "\n";
}

void cmd_report(const std::vector<std::string>& trace_files, const std::string& out) {
  if (trace_files.empty()) throw oap::DataError("report: no trace files given");
  std::vector<std::vector<oap::TraceRecord>> traces;
  for (const auto& f : trace_files) traces.push_back(oap::load_trace_csv(f));
  const auto rows = oap::summarize_traces(traces);
  std::error_code ec;
  fs::create_directories(out, ec);
  const std::string path = (fs::path(out) / "report.csv").string();
  std::ofstream os(path);
  if (!os) throw oap::DataError("cannot write " + path);
  oap::write_summary_csv(os, rows);
  std::cout << path << " " << rows.size() << " rows from " << traces.size() << " trace(s)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online adaptive personalization experiments"};
  app.require_subcommand(1);

  CommonOptions gen_opts, pre_opts, run_opts, sweep_opts;
  auto* gen = app.add_subcommand("generate", "write the pre-training set and stream feature files");
  add_common(gen, gen_opts);

  std::string train_file;
  auto* pre = app.add_subcommand("pretrain", "train heads and draw replay stores");
  add_common(pre, pre_opts);
  pre->add_option("--train", train_file, "labeled feature file (default: generate)");

  RunFiles files;
  auto* run = app.add_subcommand("run", "run oap, frozen or ema over seeded streams");
  add_common(run, run_opts);
  run->add_option("--head", files.head, "head file");
  run->add_option("--replay", files.replay, "replay feature file");
  run->add_option("--stream", files.stream, "stream feature file");

  std::string axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "vary one hyper-parameter");
  add_common(sweep, sweep_opts);
  sweep->add_option("--axis", axis, "nu, delta, alpha or replay_size")->required();
  sweep->add_option("--values", values, "comma separated values")->required()->delimiter(',');

  std::vector<std::string> trace_files;
  std::string report_out = "out";
  auto* report = app.add_subcommand("report", "merge seed traces into per-frame mean and std");
  report->add_option("traces", trace_files, "trace CSV files");
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) cmd_generate(gen_opts);
    else if (*pre) cmd_pretrain(pre_opts, train_file);
    else if (*run) cmd_run(run_opts, files);
    else if (*sweep) cmd_sweep(sweep_opts, axis, values);
    else if (*report) cmd_report(trace_files, report_out);
  } catch (const oap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
