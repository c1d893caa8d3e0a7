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

// Pipeline orchestration behind the kfuzz command line: compile (parse,
// affine analysis, pruning, lowering), single runs, fuzz campaigns and the
// throughput comparison.

#ifndef KFUZZ_DRIVER_DRIVER_H_
#define KFUZZ_DRIVER_DRIVER_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kfuzz/affine/affine.h"
#include "kfuzz/axiprune/axiprune.h"
#include "kfuzz/fuzz/fuzzer.h"
#include "kfuzz/fuzz/harness.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/kir/parser.h"
#include "kfuzz/pact/pact.h"

namespace kfuzz::driver {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,       // bad flags, unreadable files, syntax errors
  kExitValidation = 2,  // kernel or launch configuration rejected
  kExitBugFound = 3,
  kExitInternal = 4,
};

// InvalidArgument and NotFound map to usage, FailedPrecondition and
// OutOfRange to validation, everything else to internal.
ExitCode ExitCodeFor(const absl::Status& s);

struct PipelineConfig {
  std::string input;  // kernel file
  kir::GridConfig grid;
  sanrt::DetectorMode detector = sanrt::DetectorMode::kExact;
  bool prex = true;
  bool axiprune = true;
  int64_t timeout_ms = 10000;
  int64_t step_budget = 100000;  // per thread
  int64_t budget_execs = 100000;
  int workers = 1;
  uint64_t seed = 1;
  std::string out_dir = "kfuzz-out";
  std::string input_blob;    // harness layout; empty synthesizes inputs
  int64_t buffer_elems = 0;  // synthesized buffer length, 0 is B*T
  std::map<std::string, int64_t> scalars;  // synthesized scalar values
};

// Zero or negative grid dimensions and negative dynamic shared sizes are
// FailedPrecondition ("invalid_launch: ...").
absl::Status ValidateGrid(const kir::GridConfig& g);

struct Compiled {
  kir::Kernel source;
  kir::Kernel kernel;  // after pruning, when enabled
  affine::AffineSummary summary;
  axiprune::PruneReport prune;
  pact::LoweredProgram program;
  std::vector<std::string> warnings;

  std::string lowered_text;
  std::string affine_text;
  std::string prune_text;
};

// Parse failures are InvalidArgument (syntax) or FailedPrecondition
// (validation) with `diag` filled in.
absl::StatusOr<Compiled> Compile(std::string_view text,
                                 const PipelineConfig& config,
                                 kir::Diagnostic* diag = nullptr);

// <stem>.lowered.kir, <stem>.affine.txt and <stem>.prune.txt under `dir`.
absl::Status WriteArtifacts(const Compiled& c, const std::string& dir,
                            const std::string& stem);

absl::StatusOr<std::string> ReadFile(const std::string& path);

// Buffers of `buffer_elems` (or B*T) zeroed elements and scalars from
// `config.scalars`, zero when absent.
sanrt::KernelInputs DefaultInputs(const kir::Kernel& k,
                                  const PipelineConfig& config);

fuzz::HarnessConfig HarnessConfigFor(const PipelineConfig& config);

// The seed blob: `input_blob` when set, else the encoded default inputs.
absl::StatusOr<fuzz::Bytes> SeedBlob(const kir::Kernel& k,
                                     const PipelineConfig& config);

struct RunReport {
  fuzz::ExecOutcome outcome;
  affine::PlanKind plan = affine::PlanKind::kAll;

  bool bug_found() const;
  std::string Line() const;  // `run status=... plan=... steps=...`
};

absl::StatusOr<RunReport> RunOnce(const Compiled& c,
                                  const PipelineConfig& config,
                                  const fuzz::Bytes& blob);

absl::StatusOr<fuzz::CampaignState> RunCampaign(const kir::Kernel& k,
                                                const PipelineConfig& config,
                                                const fuzz::Bytes& seed);

struct BenchRow {
  std::string config;  // baseline, prex, prex+axiprune
  affine::PlanKind plan = affine::PlanKind::kAll;
  int64_t steps = 0;
  int64_t blocks_executed = 0;
  double execs_per_sec = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;

  // Baseline steps over the row's steps.
  double StepRatio(int row) const;
  double ThroughputRatio(int row) const;
  std::string Text() const;
  std::string JsonLines() const;
};

// Runs the same kernel and inputs under baseline, +PREX and +PREX+AXIPrune,
// `repeats` executions each for wall-clock throughput.
absl::StatusOr<BenchResult> Bench(const kir::Kernel& k,
                                  const kir::GridConfig& grid,
                                  const sanrt::KernelInputs& inputs,
                                  sanrt::DetectorMode detector,
                                  int repeats = 100);

}  // namespace kfuzz::driver

#endif  // KFUZZ_DRIVER_DRIVER_H_
