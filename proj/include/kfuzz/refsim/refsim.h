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

// Reference interpreter with barrier-phase semantics.
//
// Blocks run one after another. Within a block, every thread runs to its
// next barrier (or to its end) before any thread starts the next phase;
// threads of a phase run in ascending order unless a shuffle seed is given.
// Bugs are classified against exact allocation bounds and lifetimes and
// never stop execution.

#ifndef KFUZZ_REFSIM_REFSIM_H_
#define KFUZZ_REFSIM_REFSIM_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/sanrt/launch.h"
#include "kfuzz/sanrt/memory.h"
#include "kfuzz/sanrt/report.h"

namespace kfuzz::refsim {

struct Options {
  int64_t step_budget = 1000000;  // per thread
  std::optional<uint64_t> shuffle_seed;
  bool record_trace = true;
  sanrt::Config memory;
};

struct Bug {
  sanrt::ThreadId thread;
  int instr_id = -1;
  sanrt::BugClass cls = sanrt::BugClass::kBO;

  friend auto operator<=>(const Bug&, const Bug&) = default;
};

using BugSet = std::set<Bug>;

struct Result {
  // Global memory at exit: base address -> (live, contents).
  std::map<uint64_t, std::pair<bool, std::vector<uint8_t>>> memory;
  // Final contents of each buffer param, indexed by param position.
  std::vector<std::vector<uint8_t>> buffers;
  std::vector<sanrt::AccessRecord> trace;
  BugSet bugs;
  int64_t steps = 0;
};

// Fails with DeadlineExceeded ("NonTermination") when a thread exceeds the
// step budget, ResourceExhausted when the arena is exhausted and
// InvalidArgument for a bad grid or argument list.
absl::StatusOr<Result> RunReference(const kir::Kernel& k,
                                    const kir::GridConfig& g,
                                    const sanrt::KernelInputs& in,
                                    const Options& options = {});

std::set<sanrt::ThreadId> BugThreads(const BugSet& bugs);

// One line per record, in execution order.
std::string DumpTrace(const std::vector<sanrt::AccessRecord>& trace);

}  // namespace kfuzz::refsim

#endif  // KFUZZ_REFSIM_REFSIM_H_
