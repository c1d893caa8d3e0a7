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

// Lowering of SPMD kernels to host task programs.
//
// One task runs one block. The kernel body is cut at every barrier into
// phases; a task runs each phase as a loop over the threads of the block.
// Locals that are live across a barrier move into per-task arrays of length
// blockDim indexed by tid. When the affine plan only needs corner threads,
// tid becomes a task argument instead of a loop.

#ifndef KFUZZ_PACT_PACT_H_
#define KFUZZ_PACT_PACT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kfuzz/affine/affine.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/sanrt/launch.h"
#include "kfuzz/sanrt/memory.h"
#include "kfuzz/sanrt/report.h"

namespace kfuzz::pact {

// The code of one phase: the straight-line pieces of the kernel reachable
// from the phase entry without crossing a barrier. blocks[0] is the entry
// and branch targets index into `blocks`. A kReturn with next_phase >= 0
// ends the phase at a former barrier.
struct PhaseLoop {
  int index = 0;
  std::vector<kir::BasicBlock> blocks;
  // Global id of the kernel piece each block came from; stable across
  // phases, used for edge coverage.
  std::vector<int> pieces;
};

struct LoweredProgram {
  // Declarations (params, shared arrays, local names) of the source kernel.
  kir::Kernel kernel;
  std::vector<PhaseLoop> phases;
  std::vector<int> promoted;  // local slots, ascending
  bool tid_exposed = false;
  affine::AffineSummary summary;
  affine::PlanKind plan = affine::PlanKind::kAll;
  int piece_count = 0;

  bool IsPromoted(int slot) const;
};

// Plan kind implied by a summary: boundary_threads for unguarded affine
// kernels, boundary_blocks_all_threads for guarded ones, all otherwise.
affine::PlanKind PlanKindFor(const affine::AffineSummary& s);

// tid is exposed iff `plan` is boundary_threads. Fails with
// FailedPrecondition ("UnsupportedBarrierPlacement") when a barrier sits
// under thread-dependent control flow.
absl::StatusOr<LoweredProgram> Lower(const kir::Kernel& k,
                                     const affine::AffineSummary& s,
                                     affine::PlanKind plan);

// Lowers with the summary and plan kind derived from `k`.
absl::StatusOr<LoweredProgram> Lower(const kir::Kernel& k);

// The lowered program in the kir dialect extended with `task`, `phase` and
// `loop tid` headers and `name[tid]` operands.
std::string PrintLowered(const LoweredProgram& p);

struct RunOptions {
  sanrt::DetectorMode detector = sanrt::DetectorMode::kExact;
  // Stop at the first report (fuzzing); otherwise collect all of them.
  bool abort_on_report = false;
  int64_t step_budget = 1000000;  // per thread
  bool record_trace = false;
  sanrt::Config memory;
};

struct RunResult {
  std::map<uint64_t, std::pair<bool, std::vector<uint8_t>>> memory;
  std::vector<std::vector<uint8_t>> buffers;  // by param position
  std::vector<sanrt::AccessRecord> trace;
  std::vector<sanrt::BugReport> reports;
  int64_t dropped_reports = 0;
  int64_t steps = 0;
  bool aborted = false;
};

// Runs tasks of a lowered program one at a time against a single simulated
// memory. Callers pick the blocks (and, for exposed-tid programs, the
// threads) to run.
class Executor {
 public:
  Executor(const LoweredProgram& p, const kir::GridConfig& g,
           const RunOptions& o);
  ~Executor();
  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  // Validates the grid and binds the arguments.
  absl::Status Start(const sanrt::KernelInputs& in);

  // Runs block `block`. `threads` must be empty unless tid is exposed, in
  // which case an empty list means every thread.
  absl::Status RunBlock(int64_t block,
                        const std::vector<int64_t>& threads = {});

  // Called with the piece id of every block entered.
  void set_piece_hook(std::function<void(int)> hook);

  bool aborted() const;
  int64_t report_count() const;
  const std::vector<sanrt::BugReport>& reports() const;
  int64_t steps() const;
  // Whether the load/store with this instruction id has executed.
  bool covered(int instr_id) const;

  RunResult Finish();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

struct Schedule {
  std::vector<int64_t> blocks;   // empty: every block, ascending
  std::vector<int64_t> threads;  // exposed-tid programs only
};

// Runs the scheduled tasks in order and collects the outcome. Fails with
// DeadlineExceeded ("NonTermination") on a step budget overrun and
// ResourceExhausted when the arena is exhausted.
absl::StatusOr<RunResult> RunLowered(const LoweredProgram& p,
                                     const kir::GridConfig& g,
                                     const sanrt::KernelInputs& in,
                                     const Schedule& schedule,
                                     const RunOptions& o);

}  // namespace kfuzz::pact

#endif  // KFUZZ_PACT_PACT_H_
