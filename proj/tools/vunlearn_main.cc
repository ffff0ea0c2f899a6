//
// Copyright 2026 The vunlearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// vunlearn: generate -> train -> evaluate -> report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage, config or constraint
// violation.

#include <sys/utsname.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vunlearn/cli/config.h"
#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"
#include "vunlearn/detachment/coefficients.h"
#include "vunlearn/evaluator/evaluator.h"
#include "vunlearn/synthgen/dataset.h"
#include "vunlearn/trainer/model.h"
#include "vunlearn/trainer/trainer.h"

namespace fs = std::filesystem;
using vunlearn::Error;
using vunlearn::ErrorCode;
using vunlearn::require;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "flat key=value config file")
      ->required();
  cmd->add_option("--seed", f.seed, "overrides the seed key");
  cmd->add_option("--out", f.out, "run directory (default runs/<hash>-<seed>)");
}

vunlearn::cli::RunConfig load_run(const CommonFlags& f) {
  vunlearn::cli::KeyValues flags;
  if (f.seed) flags["seed"] = std::to_string(*f.seed);
  if (f.out) flags["out"] = *f.out;
  if (f.mode) flags["mode"] = *f.mode;
  return vunlearn::cli::to_run_config(
      vunlearn::cli::merge(vunlearn::cli::read_key_values(f.config), flags));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string machine_descriptor() {
  utsname u{};
  std::string os = "unknown";
  if (uname(&u) == 0) os = std::string(u.sysname) + " " + u.machine;
  return os + ", " + std::to_string(std::thread::hardware_concurrency()) +
         " hardware threads";
}

int cmd_generate(const CommonFlags& flags, bool force) {
  const auto rc = load_run(flags);
  const fs::path dir = vunlearn::cli::dataset_directory(rc);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    require(force, ErrorCode::kConfig,
            "output directory " + dir.string() +
                " is not empty; pass --force to overwrite");
    fs::remove_all(dir);
  }
  const auto ds = vunlearn::synthgen::generate_dataset(rc.generator, rc.n);
  vunlearn::synthgen::save_dataset(ds, dir);
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x",
                vunlearn::synthgen::payload_checksum(ds));
  std::cout << "generated n=" << ds.size() << " x_dim=" << ds.x_dim()
            << " task_classes=" << rc.generator.task_classes
            << " sensitive=" << rc.generator.sensitive_classes.size()
            << " split=" << ds.split.train.size() << "/"
            << ds.split.validation.size() << "/" << ds.split.test.size()
            << " checksum=" << crc << " dir=" << dir.string() << "\n";
  return 0;
}

// Notes an exact rerun when the new file matches the previous bytes.
void report_rerun(const fs::path& path,
                  const std::optional<std::vector<std::uint8_t>>& before) {
  if (before && *before == vunlearn::read_file(path)) {
    std::cout << "rerun: " << path.filename().string()
              << " is byte-identical to the previous run\n";
  }
}

std::optional<std::vector<std::uint8_t>> existing(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  return vunlearn::read_file(path);
}

int cmd_train(const CommonFlags& flags, bool baseline, bool unlearn) {
  require(baseline != unlearn, ErrorCode::kConfig,
          "exactly one of --baseline or --unlearn is required");
  const auto rc = load_run(flags);
  if (unlearn) {
    // Coefficient admissibility is checked before any I/O.
    vunlearn::detachment::derive_coefficients(rc.train.alpha, rc.train.beta,
                                              rc.train.gammas);
  }
  const auto ds =
      vunlearn::synthgen::load_dataset(vunlearn::cli::dataset_directory(rc));
  const fs::path run = vunlearn::cli::run_directory(rc);
  fs::create_directories(run);
  const std::string stem = baseline ? "baseline" : "unlearn";
  const fs::path ckpt = run / (stem + ".ckpt");
  const fs::path trace_path = run / (stem + "_trace.jsonl");
  const nlohmann::json extra = {{"kind", stem},
                                {"config_hash", rc.hash},
                                {"seed", rc.seed}};
  const auto before = existing(ckpt);

  vunlearn::trainer::TrainTrace trace;
  try {
    if (baseline) {
      auto r = vunlearn::trainer::train_baseline(ds, rc.model, rc.train);
      vunlearn::trainer::save_checkpoint(r.model, ckpt, extra);
      trace = std::move(r.trace);
    } else {
      auto r = vunlearn::trainer::train_unlearn(ds, rc.model, rc.train);
      vunlearn::trainer::save_checkpoint(r.model, ckpt, extra);
      vunlearn::trainer::save_auxiliary(r.aux, run / "unlearn_aux.bin");
      trace = std::move(r.trace);
    }
  } catch (const vunlearn::trainer::TrainingDiverged& e) {
    write_text(trace_path, e.partial().to_jsonl());
    std::cerr << "partial trace (" << e.partial().epochs.size()
              << " epochs) kept at " << trace_path.string() << "\n";
    throw;
  }
  write_text(trace_path, trace.to_jsonl());
  const auto& last = trace.epochs.back();
  std::cout << stem << ": epochs=" << trace.epochs.size()
            << " task_loss=" << fixed(last.task_loss)
            << " val_acc=" << fixed(last.validation_accuracy);
  if (unlearn) {
    std::cout << " info_x=" << fixed(last.breakdown.info_x)
              << " info_y=" << fixed(last.breakdown.info_y);
    for (std::size_t i = 0; i < last.breakdown.info_z.size(); ++i) {
      std::cout << " info_z" << i << "=" << fixed(last.breakdown.info_z[i]);
    }
  }
  std::cout << "\ncheckpoint=" << ckpt.string()
            << " trace=" << trace_path.string() << "\n";
  report_rerun(ckpt, before);
  return 0;
}

int cmd_evaluate(const CommonFlags& flags, std::optional<std::string> model,
                 std::optional<std::string> baseline_model) {
  const auto rc = load_run(flags);
  const fs::path run = vunlearn::cli::run_directory(rc);
  const fs::path model_path = model ? fs::path(*model) : run / "unlearn.ckpt";
  const fs::path base_path =
      baseline_model ? fs::path(*baseline_model) : run / "baseline.ckpt";
  for (const auto& p : {model_path, base_path}) {
    require(fs::exists(p), ErrorCode::kIo,
            "missing checkpoint " + p.string());
  }
  const auto ds =
      vunlearn::synthgen::load_dataset(vunlearn::cli::dataset_directory(rc));
  const auto unlearned = vunlearn::trainer::load_checkpoint(model_path);
  const auto base = vunlearn::trainer::load_checkpoint(base_path);

  // Auxiliary head and trace sit next to the checkpoint when it came from
  // `train --unlearn`.
  std::optional<vunlearn::trainer::AuxiliaryHead> aux;
  std::optional<vunlearn::trainer::TrainTrace> trace;
  const fs::path dir = model_path.parent_path();
  const std::string stem = model_path.stem().string();
  if (fs::exists(dir / (stem + "_aux.bin"))) {
    aux = vunlearn::trainer::load_auxiliary(dir / (stem + "_aux.bin"));
  }
  if (fs::exists(dir / (stem + "_trace.jsonl"))) {
    std::ifstream in(dir / (stem + "_trace.jsonl"));
    std::stringstream ss;
    ss << in.rdbuf();
    trace = vunlearn::trainer::TrainTrace::from_jsonl(ss.str());
  }

  vunlearn::evaluator::EvaluateInputs in;
  in.model = &unlearned;
  in.baseline = &base;
  in.aux = aux ? &*aux : nullptr;
  in.trace = trace ? &*trace : nullptr;
  in.attribute_index = rc.attribute;
  in.attacker = rc.attacker;
  in.config_echo = vunlearn::cli::config_echo(rc);
  in.seed = rc.seed;
  const auto report = vunlearn::evaluator::evaluate(ds, in);

  vunlearn::estimators::FitConfig probe_fit;
  probe_fit.seed = rc.seed;
  const auto probe_base = vunlearn::evaluator::reconstruction_probe(
      vunlearn::evaluator::frozen_front(base), ds, rc.attribute, probe_fit);
  const auto probe = vunlearn::evaluator::reconstruction_probe(
      vunlearn::evaluator::frozen_front(unlearned), ds, rc.attribute,
      probe_fit);

  fs::create_directories(run);
  const fs::path report_path = run / "report.json";
  write_text(report_path, report.to_json().dump(2) + "\n");

  std::cout << "attribute " << rc.attribute << " (chance "
            << fixed(report.chance_level) << ")\n";
  std::cout << "baseline_efficacy  efficacy  utility  baseline_utility\n";
  std::printf("%-17s  %-8s  %-7s  %s\n",
              fixed(report.baseline_efficacy).c_str(),
              fixed(report.efficacy).c_str(), fixed(report.utility).c_str(),
              fixed(report.baseline_utility).c_str());
  std::fflush(stdout);
  std::cout << "probe sensitive-block reconstruction error: baseline "
            << fixed(probe_base.sensitive_block_error) << ", unlearned "
            << fixed(probe.sensitive_block_error) << " (overall "
            << fixed(probe_base.overall_error) << " / "
            << fixed(probe.overall_error) << ")\n";
  std::cout << "params main=" << report.params_main
            << " with_auxiliary=" << report.params_with_auxiliary
            << " macs/sample=" << report.macs_per_sample << "\n";
  std::cout << "timing (" << machine_descriptor()
            << "): train s/epoch=" << fixed(report.train_seconds_per_epoch, 6)
            << " inference s/pass="
            << fixed(report.inference_seconds_per_epoch, 6) << "\n";
  std::cout << "report=" << report_path.string() << "\n";
  return 0;
}

struct ReportRow {
  std::string file;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  vunlearn::evaluator::EvaluationReport report;
};

void write_svg(const fs::path& path, const std::vector<ReportRow>& rows) {
  const double w = 480, h = 320, pad = 48;
  double gmax = 0.0;
  for (const auto& r : rows) {
    if (std::isfinite(r.gamma)) gmax = std::max(gmax, r.gamma);
  }
  if (gmax <= 0.0) gmax = 1.0;
  auto px = [&](double g) { return pad + (w - 2 * pad) * g / gmax; };
  auto py = [&](double acc) { return h - pad - (h - 2 * pad) * acc; };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\""
      << w - pad << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad
      << "\" y2=\"" << h - pad << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">gamma</text>\n"
      << "<text x=\"14\" y=\"" << h / 2 << "\" transform=\"rotate(-90 14 "
      << h / 2 << ")\" text-anchor=\"middle\">attacker accuracy</text>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    svg << "<text x=\"" << pad - 6 << "\" y=\"" << py(tick) + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << fixed(tick, 1)
        << "</text>\n";
  }
  if (!rows.empty()) {
    svg << "<line x1=\"" << pad << "\" y1=\"" << py(rows[0].report.chance_level)
        << "\" x2=\"" << w - pad << "\" y2=\""
        << py(rows[0].report.chance_level)
        << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
         "points=\"";
  for (const auto& r : rows) {
    if (std::isfinite(r.gamma)) {
      svg << px(r.gamma) << "," << py(r.report.efficacy) << " ";
    }
  }
  svg << "\"/>\n";
  for (const auto& r : rows) {
    if (!std::isfinite(r.gamma)) continue;
    svg << "<circle cx=\"" << px(r.gamma) << "\" cy=\"" << py(r.report.efficacy)
        << "\" r=\"3\" fill=\"steelblue\"/>\n"
        << "<text x=\"" << px(r.gamma) << "\" y=\"" << h - pad + 14
        << "\" text-anchor=\"middle\" font-size=\"10\">" << fixed(r.gamma, 2)
        << "</text>\n";
  }
  svg << "</svg>\n";
  write_text(path, svg.str());
}

int cmd_report(const std::vector<std::string>& files,
               std::optional<std::string> svg) {
  std::vector<ReportRow> rows;
  std::vector<std::string> mismatched;
  for (const auto& f : files) {
    std::ifstream in(f);
    require(in.good(), ErrorCode::kIo, "cannot read report " + f);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformed, f + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("format_version") ||
        j["format_version"] != vunlearn::evaluator::kReportFormatVersion) {
      mismatched.push_back(f);
      continue;
    }
    ReportRow row;
    row.file = f;
    row.report = vunlearn::evaluator::EvaluationReport::from_json(j);
    const auto& cfg = row.report.config;
    if (cfg.contains("gammas") && cfg["gammas"].is_array() &&
        !cfg["gammas"].empty()) {
      row.gamma = cfg["gammas"][0].get<double>();
    }
    rows.push_back(std::move(row));
  }
  if (!mismatched.empty()) {
    std::string list;
    for (const auto& f : mismatched) list += (list.empty() ? "" : ", ") + f;
    throw Error(ErrorCode::kVersion,
                "report schema version mismatch (expected " +
                    std::to_string(vunlearn::evaluator::kReportFormatVersion) +
                    ") in: " + list);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (std::isnan(a.gamma)) return false;
    if (std::isnan(b.gamma)) return true;
    return a.gamma < b.gamma;
  });

  std::printf("%-7s  %-8s  %-17s  %-7s  %-16s  %-6s  %s\n", "gamma",
              "efficacy", "baseline_efficacy", "utility", "baseline_utility",
              "chance", "file");
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i].report;
    const bool violates = i > 0 && r.efficacy > rows[i - 1].report.efficacy;
    monotone = monotone && !violates;
    const std::string gamma =
        std::isnan(rows[i].gamma) ? "-" : fixed(rows[i].gamma, 3);
    std::printf("%-7s  %-8s  %-17s  %-7s  %-16s  %-6s  %s\n", gamma.c_str(),
                (fixed(r.efficacy) + (violates ? "!" : "")).c_str(),
                fixed(r.baseline_efficacy).c_str(), fixed(r.utility).c_str(),
                fixed(r.baseline_utility).c_str(),
                fixed(r.chance_level, 3).c_str(), rows[i].file.c_str());
  }
  if (rows.size() > 1) {
    std::printf("efficacy non-increasing in gamma: %s\n",
                monotone ? "yes" : "no (rows marked !)");
  }
  std::fflush(stdout);
  if (svg) {
    write_svg(*svg, rows);
    std::cout << "plot=" << *svg << "\n";
  }
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kConstraint:
    case ErrorCode::kPrecondition:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vertical unlearning on synthetic factor data."};
  app.name("vunlearn");
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags;
  bool force = false;
  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(gen, gen_flags);
  gen->add_flag("--force", force, "overwrite a non-empty dataset directory");

  bool baseline = false, unlearn = false;
  auto* train = app.add_subcommand("train", "train a split model");
  add_common(train, train_flags);
  train->add_flag("--baseline", baseline, "task loss only");
  train->add_flag("--unlearn", unlearn, "task loss plus detachment terms");
  train->add_option("--mode", train_flags.mode, "sequential or parallel")
      ->check(CLI::IsMember({"sequential", "parallel"}));

  std::optional<std::string> model, baseline_model;
  auto* eval = app.add_subcommand("evaluate", "score a checkpoint");
  add_common(eval, eval_flags);
  eval->add_option("--checkpoint", model,
                   "model to attack (default <run>/unlearn.ckpt)");
  eval->add_option("--baseline-checkpoint", baseline_model,
                   "reference model (default <run>/baseline.ckpt)");

  std::vector<std::string> files;
  std::optional<std::string> svg;
  auto* rep = app.add_subcommand("report", "merge evaluation reports");
  rep->add_option("reports", files, "report.json files")->required();
  rep->add_option("--svg", svg, "write an efficacy-vs-gamma plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(gen_flags, force);
    if (*train) return cmd_train(train_flags, baseline, unlearn);
    if (*eval) return cmd_evaluate(eval_flags, model, baseline_model);
    if (*rep) return cmd_report(files, svg);
  } catch (const Error& e) {
    std::cerr << "error (" << vunlearn::error_code_name(e.code())
              << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
