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

// Control-flow graph analyses over kir::Kernel blocks.

#ifndef KFUZZ_KIR_CFG_H_
#define KFUZZ_KIR_CFG_H_

#include <vector>

#include "kfuzz/kir/ir.h"

namespace kfuzz::kir {

class Cfg {
 public:
  explicit Cfg(const Kernel& k);

  int size() const { return static_cast<int>(succs_.size()); }
  const std::vector<int>& succs(int b) const { return succs_[b]; }
  const std::vector<int>& preds(int b) const { return preds_[b]; }
  bool reachable(int b) const { return rpo_index_[b] >= 0; }
  // Reverse post-order of blocks reachable from the entry.
  const std::vector<int>& rpo() const { return rpo_; }

  // Immediate dominator; -1 for the entry and unreachable blocks.
  int idom(int b) const { return idom_[b]; }
  bool Dominates(int a, int b) const;

  // Immediate post-dominator. The virtual exit has index size(); blocks
  // post-dominated only by it report size().
  int ipdom(int b) const { return ipdom_[b]; }

  // True when every retreating edge targets a dominator of its source.
  bool IsReducible() const;

  // control_deps(b): branch blocks whose outcome decides whether b runs.
  const std::vector<int>& control_deps(int b) const { return cdeps_[b]; }

 private:
  void ComputeDominators();
  void ComputePostDominators();
  void ComputeControlDependence();

  std::vector<std::vector<int>> succs_;
  std::vector<std::vector<int>> preds_;
  std::vector<int> rpo_;
  std::vector<int> rpo_index_;
  std::vector<int> idom_;
  std::vector<int> ipdom_;
  std::vector<std::vector<int>> cdeps_;
};

// Which values may differ between threads.
enum class VarianceScope {
  // Differ between threads of one block (threadIdx, loads, allocations).
  kWithinBlock,
  // Differ anywhere in the grid (adds blockIdx).
  kGrid,
};

struct VarianceInfo {
  std::vector<bool> local_variant;   // per local slot
  std::vector<bool> branch_variant;  // per block: terminator condition varies
  std::vector<bool> block_guarded;   // per block: control-dependent on a
                                     // varying branch (transitively)
};

VarianceInfo AnalyzeVariance(const Kernel& k, const Cfg& cfg,
                             VarianceScope scope);

bool ExprIsVariant(const Expr& e, const VarianceInfo& info,
                   VarianceScope scope);

}  // namespace kfuzz::kir

#endif  // KFUZZ_KIR_CFG_H_
