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

// Access-index preserving pruning.
//
// Removes work that cannot change which addresses a kernel touches:
// barriers, when no value communicated through memory reaches an index or a
// branch, and math calls whose results never reach one. Stored values may
// change; addresses and access kinds may not.

#ifndef KFUZZ_AXIPRUNE_AXIPRUNE_H_
#define KFUZZ_AXIPRUNE_AXIPRUNE_H_

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kfuzz/kir/ir.h"

namespace kfuzz::axiprune {

enum class RetainReason : uint8_t { kUsedInBranch, kUsedAsIndex };

std::string_view ToString(RetainReason r);

struct PruneReport {
  std::vector<int> barriers_removed;  // instruction ids, ascending
  std::vector<int> math_removed;
  std::map<int, std::vector<RetainReason>> math_retained;
  // Why barriers were kept, when they were: the first offending use.
  std::string barrier_blocker;
};

struct Options {
  // Values derived from shared loads count as shared too. Off: only the
  // loaded locals themselves are checked.
  bool transitive = true;
};

// All barriers go, or none do.
kir::Kernel BarrierElimination(const kir::Kernel& k, const Options& o,
                               PruneReport* report);

kir::Kernel MathElimination(const kir::Kernel& k, PruneReport* report);

// Barrier elimination, then math elimination.
std::pair<kir::Kernel, PruneReport> Prune(const kir::Kernel& k,
                                          const Options& o = {});

std::string DumpPruneReport(const kir::Kernel& k, const PruneReport& r);

}  // namespace kfuzz::axiprune

#endif  // KFUZZ_AXIPRUNE_AXIPRUNE_H_
