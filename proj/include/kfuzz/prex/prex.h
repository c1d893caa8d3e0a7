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

// Partial representative execution.
//
// Runs only the blocks (or threads) of a lowered program that can expose a
// memory bug. Unguarded affine kernels run their four corner threads.
// Guarded affine kernels run whole blocks from both ends of the grid
// inwards until every load and store has executed or a bug is reported.
// Everything else runs every block.

#ifndef KFUZZ_PREX_PREX_H_
#define KFUZZ_PREX_PREX_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "kfuzz/pact/pact.h"

namespace kfuzz::prex {

struct PrexCursor {
  int64_t head = 0;
  int64_t tail = -1;
  bool has_bug = false;
  std::vector<bool> covered;  // by position in the access id list
};

struct PrexOptions {
  pact::RunOptions run;
  // Also keep going until every piece of the program has been entered.
  bool require_piece_coverage = false;
  // Called with the piece id of every lowered block entered.
  std::function<void(int)> piece_hook;
  // Skip the final memory snapshot; reports and steps are still filled in.
  bool skip_snapshot = false;
};

struct PrexResult {
  pact::RunResult run;
  affine::PlanKind plan = affine::PlanKind::kAll;
  int64_t blocks_executed = 0;
  int64_t thread_instances = 0;
  // Head/tail rounds; boundary-block plans only.
  int64_t iterations = 0;
  std::vector<int64_t> block_order;
  std::vector<int> covered_ids;  // access ids that executed, ascending
  double covered_fraction = 0;
};

// Ids of the load and store instructions of the source kernel, ascending.
std::vector<int> AccessIds(const pact::LoweredProgram& p);

// Fails like pact::RunLowered on budget overrun or arena exhaustion.
absl::StatusOr<PrexResult> Execute(const pact::LoweredProgram& p,
                                   const kir::GridConfig& g,
                                   const sanrt::KernelInputs& in,
                                   const PrexOptions& o = {});

// `prex plan=... blocks_executed=... covered_fraction=... bugs=...`
std::string StatsLine(const PrexResult& r);

}  // namespace kfuzz::prex

#endif  // KFUZZ_PREX_PREX_H_
