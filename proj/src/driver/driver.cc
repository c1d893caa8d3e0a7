// Copyright 2026 The kfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kfuzz/driver/driver.h"

#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kfuzz::driver {
namespace {

absl::Status WriteText(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
  out.close();
  if (!out) return absl::InternalError("cannot write " + p.string());
  return absl::OkStatus();
}

std::vector<int64_t> BufferCounts(const kir::Kernel& k,
                                  const sanrt::KernelInputs& in) {
  std::vector<int64_t> counts;
  for (size_t i = 0; i < k.params.size(); ++i) {
    if (k.params[i].is_buffer()) counts.push_back(in.args.at(i).count);
  }
  return counts;
}

}  // namespace

ExitCode ExitCodeFor(const absl::Status& s) {
  switch (s.code()) {
    case absl::StatusCode::kOk:
      return kExitOk;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kNotFound:
      return kExitUsage;
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kOutOfRange:
      return kExitValidation;
    default:
      return kExitInternal;
  }
}

absl::Status ValidateGrid(const kir::GridConfig& g) {
  if (g.blocks <= 0 || g.threads <= 0) {
    return absl::FailedPreconditionError(
        fmt::format("invalid_launch: grid dimensions must be positive, got "
                    "blocks={} threads={}",
                    g.blocks, g.threads));
  }
  if (g.dyn_shared_bytes < 0) {
    return absl::FailedPreconditionError(fmt::format(
        "invalid_launch: negative dynamic shared size {}", g.dyn_shared_bytes));
  }
  return absl::OkStatus();
}

absl::StatusOr<Compiled> Compile(std::string_view text,
                                 const PipelineConfig& config,
                                 kir::Diagnostic* diag) {
  absl::StatusOr<kir::Kernel> k = kir::ParseKernel(text, diag);
  if (!k.ok()) return k.status();

  Compiled c;
  c.source = *k;
  if (config.axiprune) {
    std::tie(c.kernel, c.prune) = axiprune::Prune(c.source);
    c.prune_text = axiprune::DumpPruneReport(c.source, c.prune);
  } else {
    c.kernel = c.source;
    c.prune_text = "axiprune off\n";
  }
  c.summary = affine::Analyze(c.kernel);
  c.affine_text = affine::DumpAffine(c.kernel, c.summary);

  const affine::PlanKind plan =
      config.prex ? pact::PlanKindFor(c.summary) : affine::PlanKind::kAll;
  if (config.prex && !c.summary.affine) {
    std::string causes;
    for (const auto& [id, cause] : c.summary.reasons) {
      causes += fmt::format(" i{}:{}", id, affine::ToString(cause));
    }
    c.warnings.push_back(fmt::format(
        "kernel {} is not affine, using plan=all;{}", c.kernel.name, causes));
  }
  absl::StatusOr<pact::LoweredProgram> p =
      pact::Lower(c.kernel, c.summary, plan);
  if (!p.ok()) return p.status();
  c.program = *std::move(p);
  c.lowered_text = pact::PrintLowered(c.program);
  return c;
}

absl::Status WriteArtifacts(const Compiled& c, const std::string& dir,
                            const std::string& stem) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return absl::InternalError("cannot create " + dir);
  const fs::path root(dir);
  if (absl::Status s =
          WriteText(root / (stem + ".lowered.kir"), c.lowered_text);
      !s.ok()) {
    return s;
  }
  if (absl::Status s = WriteText(root / (stem + ".affine.txt"), c.affine_text);
      !s.ok()) {
    return s;
  }
  return WriteText(root / (stem + ".prune.txt"), c.prune_text);
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sanrt::KernelInputs DefaultInputs(const kir::Kernel& k,
                                  const PipelineConfig& config) {
  const int64_t elems = config.buffer_elems > 0
                            ? config.buffer_elems
                            : config.grid.blocks * config.grid.threads;
  sanrt::KernelInputs in;
  for (const kir::Param& p : k.params) {
    if (p.is_buffer()) {
      in.args.push_back(sanrt::Arg::Buffer(
          elems, fuzz::Bytes(elems * kir::ScalarSize(p.elem), 0)));
      continue;
    }
    const auto it = config.scalars.find(p.name);
    const int64_t v = it == config.scalars.end() ? 0 : it->second;
    in.args.push_back(sanrt::Arg::Scalar(
        kir::IsFloat(p.elem) ? sanrt::Value::Float(v) : sanrt::Value::Int(v)));
  }
  return in;
}

fuzz::HarnessConfig HarnessConfigFor(const PipelineConfig& config) {
  fuzz::HarnessConfig h;
  h.grid = config.grid;
  h.prex = config.prex;
  h.axiprune = config.axiprune;
  h.detector = config.detector;
  h.step_budget = config.step_budget;
  h.timeout_ms = config.timeout_ms;
  return h;
}

absl::StatusOr<fuzz::Bytes> SeedBlob(const kir::Kernel& k,
                                     const PipelineConfig& config) {
  if (!config.input_blob.empty()) {
    absl::StatusOr<std::string> raw = ReadFile(config.input_blob);
    if (!raw.ok()) return raw.status();
    return fuzz::Bytes(raw->begin(), raw->end());
  }
  return fuzz::EncodeInputs(k, HarnessConfigFor(config),
                            DefaultInputs(k, config));
}

bool RunReport::bug_found() const {
  return outcome.status != fuzz::ExecOutcome::Status::kOk;
}

std::string RunReport::Line() const {
  std::string status = "ok";
  if (outcome.status == fuzz::ExecOutcome::Status::kCrash) status = "crash";
  if (outcome.status == fuzz::ExecOutcome::Status::kHang) status = "hang";
  std::string line = fmt::format(
      "run status={} plan={} steps={} blocks_executed={}", status,
      affine::ToString(plan), outcome.steps, outcome.blocks_executed);
  if (outcome.key) line += " key=" + outcome.key->ToString();
  return line;
}

absl::StatusOr<RunReport> RunOnce(const Compiled& c,
                                  const PipelineConfig& config,
                                  const fuzz::Bytes& blob) {
  if (absl::Status s = ValidateGrid(config.grid); !s.ok()) return s;
  absl::StatusOr<fuzz::Harness> h =
      fuzz::Harness::Create(c.source, HarnessConfigFor(config));
  if (!h.ok()) return h.status();
  RunReport r;
  r.plan = c.program.plan;
  r.outcome = h->Run(blob);
  return r;
}

absl::StatusOr<fuzz::CampaignState> RunCampaign(const kir::Kernel& k,
                                                const PipelineConfig& config,
                                                const fuzz::Bytes& seed) {
  if (absl::Status s = ValidateGrid(config.grid); !s.ok()) return s;
  absl::StatusOr<fuzz::Harness> h =
      fuzz::Harness::Create(k, HarnessConfigFor(config));
  if (!h.ok()) return h.status();
  fuzz::CampaignOptions o;
  o.budget_execs = config.budget_execs;
  o.seed = config.seed;
  o.workers = config.workers;
  o.out_dir = config.out_dir;
  return fuzz::FuzzLoop(*h, {seed}, o);
}

double BenchResult::StepRatio(int row) const {
  const int64_t steps = rows.at(row).steps;
  return steps == 0 ? 0.0 : static_cast<double>(rows.at(0).steps) / steps;
}

double BenchResult::ThroughputRatio(int row) const {
  const double base = rows.at(0).execs_per_sec;
  return base == 0 ? 0.0 : rows.at(row).execs_per_sec / base;
}

std::string BenchResult::Text() const {
  std::string out =
      fmt::format("{:<16}{:<30}{:>12}{:>8}{:>14}{:>10}{:>10}\n", "config",
                  "plan", "steps", "blocks", "execs/sec", "step_x", "wall_x");
  for (size_t i = 0; i < rows.size(); ++i) {
    const BenchRow& r = rows[i];
    out += fmt::format(
        "{:<16}{:<30}{:>12}{:>8}{:>14.1f}{:>10.2f}{:>10.2f}\n", r.config,
        affine::ToString(r.plan), r.steps, r.blocks_executed, r.execs_per_sec,
        StepRatio(static_cast<int>(i)), ThroughputRatio(static_cast<int>(i)));
  }
  return out;
}

std::string BenchResult::JsonLines() const {
  std::string out;
  for (size_t i = 0; i < rows.size(); ++i) {
    const BenchRow& r = rows[i];
    nlohmann::json j = {
        {"type", "bench"},
        {"config", r.config},
        {"plan", affine::ToString(r.plan)},
        {"steps", r.steps},
        {"blocks_executed", r.blocks_executed},
        {"execs_per_sec", r.execs_per_sec},
        {"step_ratio", StepRatio(static_cast<int>(i))},
        {"throughput_ratio", ThroughputRatio(static_cast<int>(i))}};
    out += j.dump() + "\n";
  }
  return out;
}

absl::StatusOr<BenchResult> Bench(const kir::Kernel& k,
                                  const kir::GridConfig& grid,
                                  const sanrt::KernelInputs& inputs,
                                  sanrt::DetectorMode detector, int repeats) {
  if (absl::Status s = ValidateGrid(grid); !s.ok()) return s;
  struct Setup {
    const char* name;
    bool prex;
    bool axiprune;
  };
  constexpr Setup kSetups[] = {{"baseline", false, false},
                               {"prex", true, false},
                               {"prex+axiprune", true, true}};
  BenchResult result;
  for (const Setup& setup : kSetups) {
    fuzz::HarnessConfig hc;
    hc.grid = grid;
    hc.prex = setup.prex;
    hc.axiprune = setup.axiprune;
    hc.detector = detector;
    hc.buffer_counts = BufferCounts(k, inputs);
    hc.step_budget = int64_t{1} << 40;
    hc.timeout_ms = int64_t{1} << 40;
    absl::StatusOr<fuzz::Harness> h = fuzz::Harness::Create(k, hc);
    if (!h.ok()) return h.status();
    const fuzz::Bytes blob = h->Encode(inputs);

    BenchRow row;
    row.config = setup.name;
    const kir::Kernel& run_kernel =
        setup.axiprune ? axiprune::Prune(k).first : k;
    row.plan = setup.prex ? pact::PlanKindFor(affine::Analyze(run_kernel))
                          : affine::PlanKind::kAll;
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < std::max(repeats, 1); ++i) {
      const fuzz::ExecOutcome o = h->Run(blob);
      if (o.status == fuzz::ExecOutcome::Status::kHang ||
          (o.key && o.key->kind == fuzz::FindingKind::kHostCrash)) {
        return absl::FailedPreconditionError(fmt::format(
            "bench input fails under {}: {}", setup.name, o.detail));
      }
      row.steps = o.steps;
      row.blocks_executed = o.blocks_executed;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    row.execs_per_sec = secs > 0 ? std::max(repeats, 1) / secs : 0;
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace kfuzz::driver
