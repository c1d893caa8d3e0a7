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

// kfuzz: compile, run, fuzz and benchmark kir kernels.
//
//   kfuzz compile K.kir [--emit-lowered] [--dump-affine] [--dump-prune-report]
//   kfuzz run K.kir [--input BLOB]
//   kfuzz fuzz K.kir [--budget-execs N] [--workers N]
//   kfuzz bench K.kir [--repeats N]
//   kfuzz gms
//
// Options may also come from `--config FILE` (key = value lines); flags on
// the command line win.

#include <fmt/format.h>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/numbers.h"
#include "kfuzz/driver/driver.h"
#include "kfuzz/gms/gmsbench.h"

namespace kfuzz::driver {
namespace {

struct Flags {
  PipelineConfig config;
  std::string detector = "exact";
  std::vector<std::string> args;
  bool json = false;
  bool emit_lowered = false;
  bool dump_affine = false;
  bool dump_prune_report = false;
  int repeats = 100;
};

int Fail(const absl::Status& s) {
  std::cerr << "error: " << s.message() << "\n";
  return ExitCodeFor(s);
}

absl::Status Finalize(Flags& f) {
  const std::optional<sanrt::DetectorMode> mode =
      sanrt::DetectorModeFromString(f.detector);
  if (!mode) {
    return absl::InvalidArgumentError("unknown detector: " + f.detector);
  }
  f.config.detector = *mode;
  for (const std::string& a : f.args) {
    const size_t eq = a.find('=');
    int64_t v = 0;
    if (eq == std::string::npos || !absl::SimpleAtoi(a.substr(eq + 1), &v)) {
      return absl::InvalidArgumentError("expected NAME=INT, got " + a);
    }
    f.config.scalars[a.substr(0, eq)] = v;
  }
  return absl::OkStatus();
}

absl::StatusOr<Compiled> CompileInput(const PipelineConfig& config) {
  absl::StatusOr<std::string> text = ReadFile(config.input);
  if (!text.ok()) return text.status();
  kir::Diagnostic diag;
  absl::StatusOr<Compiled> c = Compile(*text, config, &diag);
  if (!c.ok()) {
    if (c.status().code() == absl::StatusCode::kInvalidArgument ||
        c.status().code() == absl::StatusCode::kFailedPrecondition) {
      const char* kind = diag.kind == kir::Diagnostic::Kind::kSyntax
                             ? "SyntaxError"
                             : "ValidationError";
      return absl::Status(
          c.status().code(),
          fmt::format("{}: {}:{}", kind, config.input, diag.ToString()));
    }
    return c.status();
  }
  for (const std::string& w : c->warnings)
    std::cerr << "warning: " << w << "\n";
  return c;
}

int CmdCompile(const Flags& f) {
  absl::StatusOr<Compiled> c = CompileInput(f.config);
  if (!c.ok()) return Fail(c.status());
  const std::string stem =
      std::filesystem::path(f.config.input).stem().string();
  if (absl::Status s = WriteArtifacts(*c, f.config.out_dir, stem); !s.ok()) {
    return Fail(s);
  }
  if (f.emit_lowered) std::cout << c->lowered_text;
  if (f.dump_affine) std::cout << c->affine_text;
  if (f.dump_prune_report) std::cout << c->prune_text;
  if (!f.emit_lowered && !f.dump_affine && !f.dump_prune_report) {
    std::cout << fmt::format(
        "compile kernel={} plan={} phases={} barriers_removed={} "
        "math_removed={} out={}\n",
        c->kernel.name, affine::ToString(c->program.plan),
        c->program.phases.size(), c->prune.barriers_removed.size(),
        c->prune.math_removed.size(), f.config.out_dir);
  }
  return kExitOk;
}

int CmdRun(const Flags& f) {
  if (absl::Status s = ValidateGrid(f.config.grid); !s.ok()) return Fail(s);
  absl::StatusOr<Compiled> c = CompileInput(f.config);
  if (!c.ok()) return Fail(c.status());
  absl::StatusOr<fuzz::Bytes> blob = SeedBlob(c->source, f.config);
  if (!blob.ok()) return Fail(blob.status());
  absl::StatusOr<RunReport> r = RunOnce(*c, f.config, *blob);
  if (!r.ok()) return Fail(r.status());
  std::cout << r->Line() << "\n";
  if (r->bug_found()) {
    std::cout << "detail " << r->outcome.detail << "\n";
    return kExitBugFound;
  }
  return kExitOk;
}

int CmdFuzz(const Flags& f) {
  if (absl::Status s = ValidateGrid(f.config.grid); !s.ok()) return Fail(s);
  absl::StatusOr<Compiled> c = CompileInput(f.config);
  if (!c.ok()) return Fail(c.status());
  absl::StatusOr<fuzz::Bytes> seed = SeedBlob(c->source, f.config);
  if (!seed.ok()) return Fail(seed.status());
  absl::StatusOr<fuzz::CampaignState> s =
      RunCampaign(c->source, f.config, *seed);
  if (!s.ok()) return Fail(s.status());
  std::cout << s->StatsText();
  for (const fuzz::Finding& x : s->findings) {
    std::cout << fmt::format("finding key={} exec={} hits={} depth={}\n",
                             x.key.ToString(), x.exec_index, x.hits,
                             x.reproducer.depth);
  }
  return s->findings.empty() ? kExitOk : kExitBugFound;
}

int CmdBench(const Flags& f) {
  if (absl::Status s = ValidateGrid(f.config.grid); !s.ok()) return Fail(s);
  absl::StatusOr<Compiled> c = CompileInput(f.config);
  if (!c.ok()) return Fail(c.status());
  sanrt::KernelInputs in = DefaultInputs(c->source, f.config);
  if (!f.config.input_blob.empty()) {
    absl::StatusOr<fuzz::Bytes> blob = SeedBlob(c->source, f.config);
    if (!blob.ok()) return Fail(blob.status());
    in = fuzz::DecodeInputs(c->source, HarnessConfigFor(f.config), *blob,
                            nullptr);
  }
  absl::StatusOr<BenchResult> r =
      Bench(c->source, f.config.grid, in, f.config.detector, f.repeats);
  if (!r.ok()) return Fail(r.status());
  std::cout << (f.json ? r->JsonLines() : r->Text());
  return kExitOk;
}

int CmdGms(const Flags& f) {
  absl::StatusOr<std::vector<gms::Case>> cases = gms::Generate(f.config.seed);
  if (!cases.ok()) return Fail(cases.status());
  absl::StatusOr<gms::Matrix> rz =
      gms::Score(*cases, sanrt::DetectorMode::kRedzone);
  if (!rz.ok()) return Fail(rz.status());
  absl::StatusOr<gms::Matrix> ex =
      gms::Score(*cases, sanrt::DetectorMode::kExact);
  if (!ex.ok()) return Fail(ex.status());

  const std::filesystem::path root(f.config.out_dir);
  if (absl::Status s = gms::WriteCorpus(*cases, (root / "corpus").string());
      !s.ok()) {
    return Fail(s);
  }
  const std::string text = gms::MatrixText(*rz, *ex);
  const std::string lines = gms::MatrixJsonLines(*rz, *ex);
  for (const auto& [name, body] :
       {std::pair{"matrix.txt", &text}, std::pair{"matrix.jsonl", &lines}}) {
    std::ofstream out(root / name, std::ios::trunc);
    out << *body;
    if (!out) return Fail(absl::InternalError("cannot write matrix"));
  }
  std::cout << (f.json ? lines : text);
  return kExitOk;
}

void AddKernelArg(CLI::App* app, Flags& f) {
  app->add_option("kernel", f.config.input, "kernel source (.kir)")->required();
}

// Shared by every subcommand and settable from the config file.
void AddPipelineOptions(CLI::App* app, Flags& f) {
  app->add_option("-B,--blocks", f.config.grid.blocks, "grid blocks")
      ->capture_default_str();
  app->add_option("-T,--threads", f.config.grid.threads, "threads per block")
      ->capture_default_str();
  app->add_option("--dyn-shared", f.config.grid.dyn_shared_bytes,
                  "dynamic shared bytes per block")
      ->capture_default_str();
  app->add_option("--detector", f.detector, "none, redzone or exact")
      ->capture_default_str();
  app->add_flag("--prex,!--no-prex", f.config.prex,
                "partial representative execution");
  app->add_flag("--axiprune,!--no-axiprune", f.config.axiprune,
                "barrier and math pruning");
  app->add_option("--input", f.config.input_blob,
                  "input blob in harness layout");
  app->add_option("--buffer-elems", f.config.buffer_elems,
                  "synthesized buffer length, default B*T");
  app->add_option("--arg", f.args, "synthesized scalar NAME=INT");
  app->add_option("--step-budget", f.config.step_budget,
                  "per-thread interpreter step budget")
      ->capture_default_str();
}

int Main(int argc, char** argv) {
  CLI::App app{"kfuzz: memory-safety fuzzing for kir kernels"};
  app.set_config("--config", "", "key = value configuration file");
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--seed", f.config.seed, "seed for every random choice")
      ->capture_default_str();
  app.add_option("-o,--out", f.config.out_dir, "output directory")
      ->capture_default_str();
  app.add_flag("--json", f.json, "line-delimited JSON output");
  app.add_option("--timeout-ms", f.config.timeout_ms, "per-execution timeout")
      ->capture_default_str();
  app.add_option("--budget-execs", f.config.budget_execs, "fuzz executions")
      ->capture_default_str();
  app.add_option("--workers", f.config.workers, "fuzz executions per round")
      ->capture_default_str();
  app.add_option("--repeats", f.repeats, "bench executions per configuration")
      ->capture_default_str();
  AddPipelineOptions(&app, f);

  CLI::App* compile = app.add_subcommand("compile", "lower a kernel");
  AddKernelArg(compile, f);
  compile->add_flag("--emit-lowered", f.emit_lowered, "print the lowered IR");
  compile->add_flag("--dump-affine", f.dump_affine, "print the affine summary");
  compile->add_flag("--dump-prune-report", f.dump_prune_report,
                    "print the prune report");

  CLI::App* run = app.add_subcommand("run", "execute one input");
  AddKernelArg(run, f);

  CLI::App* fz = app.add_subcommand("fuzz", "run a fuzzing campaign");
  AddKernelArg(fz, f);

  CLI::App* bench = app.add_subcommand("bench", "compare optimizations");
  AddKernelArg(bench, f);

  CLI::App* gms = app.add_subcommand("gms", "generate and score the corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (absl::Status s = Finalize(f); !s.ok()) return Fail(s);

  if (compile->parsed()) return CmdCompile(f);
  if (run->parsed()) return CmdRun(f);
  if (fz->parsed()) return CmdFuzz(f);
  if (bench->parsed()) return CmdBench(f);
  if (gms->parsed()) return CmdGms(f);
  return kExitUsage;
}

}  // namespace
}  // namespace kfuzz::driver

int main(int argc, char** argv) {
  try {
    return kfuzz::driver::Main(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kfuzz::driver::kExitInternal;
  }
}
