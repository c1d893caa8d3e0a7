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

#include "kfuzz/kir/cfg.h"

#include <algorithm>
#include <functional>

namespace kfuzz::kir {
namespace {

// Cooper, Harvey and Kennedy's iterative dominator algorithm over an
// arbitrary graph given as predecessor lists and an RPO numbering.
std::vector<int> IterativeIdom(const std::vector<std::vector<int>>& preds,
                               const std::vector<int>& order, int root) {
  const int n = static_cast<int>(preds.size());
  std::vector<int> index(n, -1);
  for (size_t i = 0; i < order.size(); ++i)
    index[order[i]] = static_cast<int>(i);
  std::vector<int> idom(n, -1);
  idom[root] = root;
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (index[a] > index[b]) a = idom[a];
      while (index[b] > index[a]) b = idom[b];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b : order) {
      if (b == root) continue;
      int new_idom = -1;
      for (int p : preds[b]) {
        if (index[p] < 0 || idom[p] < 0) continue;
        new_idom = new_idom < 0 ? p : intersect(p, new_idom);
      }
      if (new_idom >= 0 && idom[b] != new_idom) {
        idom[b] = new_idom;
        changed = true;
      }
    }
  }
  idom[root] = -1;
  return idom;
}

std::vector<int> PostOrder(const std::vector<std::vector<int>>& succs,
                           int root) {
  std::vector<int> order;
  std::vector<char> seen(succs.size(), 0);
  // Iterative DFS keeps deep CFGs off the call stack.
  std::vector<std::pair<int, size_t>> stack{{root, 0}};
  seen[root] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < succs[node].size()) {
      int s = succs[node][next++];
      if (!seen[s]) {
        seen[s] = 1;
        stack.push_back({s, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

Cfg::Cfg(const Kernel& k) {
  const int n = static_cast<int>(k.blocks.size());
  succs_.assign(n, {});
  preds_.assign(n, {});
  for (int b = 0; b < n; ++b) {
    if (k.blocks[b].instrs.empty()) continue;
    const Instruction& term = k.blocks[b].instrs.back();
    auto add = [&](int t) {
      if (t < 0 || t >= n) return;
      if (std::find(succs_[b].begin(), succs_[b].end(), t) == succs_[b].end()) {
        succs_[b].push_back(t);
        preds_[t].push_back(b);
      }
    };
    if (term.opcode == Opcode::kJump) add(term.target);
    if (term.opcode == Opcode::kBranch) {
      add(term.target);
      add(term.target_else);
    }
  }
  rpo_index_.assign(n, -1);
  if (n > 0) {
    rpo_ = PostOrder(succs_, 0);
    std::reverse(rpo_.begin(), rpo_.end());
    for (size_t i = 0; i < rpo_.size(); ++i)
      rpo_index_[rpo_[i]] = static_cast<int>(i);
  }
  ComputeDominators();
  ComputePostDominators();
  ComputeControlDependence();
}

void Cfg::ComputeDominators() {
  if (succs_.empty()) return;
  idom_ = IterativeIdom(preds_, rpo_, 0);
}

bool Cfg::Dominates(int a, int b) const {
  if (!reachable(a) || !reachable(b)) return false;
  for (int x = b; x >= 0; x = idom_[x]) {
    if (x == a) return true;
  }
  return false;
}

void Cfg::ComputePostDominators() {
  const int n = size();
  const int exit = n;
  // Reverse graph with a virtual exit. Returning blocks feed the exit, and so
  // does any block that cannot reach a return (infinite loops), which keeps
  // post-dominance defined everywhere.
  std::vector<std::vector<int>> rsuccs(n + 1);
  std::vector<std::vector<int>> rpreds(n + 1);
  auto edge = [&](int from, int to) {  // forward edge from -> to
    rsuccs[to].push_back(from);
    rpreds[from].push_back(to);
  };
  for (int b = 0; b < n; ++b) {
    for (int s : succs_[b]) edge(b, s);
    if (succs_[b].empty()) edge(b, exit);
  }
  std::vector<char> reaches_exit(n + 1, 0);
  for (int b : PostOrder(rsuccs, exit)) reaches_exit[b] = 1;
  for (int b = 0; b < n; ++b) {
    if (!reaches_exit[b]) edge(b, exit);
  }
  std::vector<int> order = PostOrder(rsuccs, exit);
  std::reverse(order.begin(), order.end());
  std::vector<int> ip = IterativeIdom(rpreds, order, exit);
  ipdom_.assign(n, exit);
  for (int b = 0; b < n; ++b) ipdom_[b] = ip[b] < 0 ? exit : ip[b];
}

void Cfg::ComputeControlDependence() {
  const int n = size();
  cdeps_.assign(n, {});
  for (int a = 0; a < n; ++a) {
    if (succs_[a].size() < 2) continue;
    for (int b : succs_[a]) {
      // Walk the post-dominator tree from b up to ipdom(a).
      for (int x = b; x != n && x != ipdom_[a]; x = ipdom_[x]) {
        if (std::find(cdeps_[x].begin(), cdeps_[x].end(), a) ==
            cdeps_[x].end()) {
          cdeps_[x].push_back(a);
        }
      }
    }
  }
}

bool Cfg::IsReducible() const {
  // A DFS back edge u -> v (v on the DFS stack) is fine only when v
  // dominates u.
  const int n = size();
  if (n == 0) return true;
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<int, size_t>> stack{{0, 0}};
  state[0] = 1;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < succs_[node].size()) {
      int s = succs_[node][next++];
      if (state[s] == 1) {
        if (!Dominates(s, node)) return false;
      } else if (state[s] == 0) {
        state[s] = 1;
        stack.push_back({s, 0});
      }
    } else {
      state[node] = 2;
      stack.pop_back();
    }
  }
  return true;
}

bool ExprIsVariant(const Expr& e, const VarianceInfo& info,
                   VarianceScope scope) {
  switch (e.kind) {
    case Expr::Kind::kIntrinsic:
      return e.intrinsic == Intrinsic::kThreadIdx ||
             (scope == VarianceScope::kGrid &&
              e.intrinsic == Intrinsic::kBlockIdx);
    case Expr::Kind::kLocal:
    case Expr::Kind::kPromoted:
      return info.local_variant[e.slot];
    case Expr::Kind::kBinary:
      return ExprIsVariant(*e.lhs, info, scope) ||
             ExprIsVariant(*e.rhs, info, scope);
    default:
      return false;
  }
}

VarianceInfo AnalyzeVariance(const Kernel& k, const Cfg& cfg,
                             VarianceScope scope) {
  const int n = cfg.size();
  VarianceInfo info;
  info.local_variant.assign(k.locals.size(), false);
  info.branch_variant.assign(n, false);
  info.block_guarded.assign(n, false);

  std::vector<int> def_count(k.locals.size(), 0);
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) {
      if (inst.dst >= 0) ++def_count[inst.dst];
    }
  }

  bool changed = true;
  auto mark = [&](std::vector<bool>& v, int i) {
    if (!v[i]) {
      v[i] = true;
      changed = true;
    }
  };
  while (changed) {
    changed = false;
    for (int b = 0; b < n; ++b) {
      bool guarded = false;
      for (int dep : cfg.control_deps(b)) {
        guarded =
            guarded || info.branch_variant[dep] || info.block_guarded[dep];
      }
      if (guarded) mark(info.block_guarded, b);
      for (const Instruction& inst : k.blocks[b].instrs) {
        if (inst.opcode == Opcode::kBranch &&
            ExprIsVariant(*inst.a, info, scope)) {
          mark(info.branch_variant, b);
        }
        if (inst.dst < 0) continue;
        bool variant = false;
        switch (inst.opcode) {
          case Opcode::kArith:
            variant = ExprIsVariant(*inst.a, info, scope) ||
                      ExprIsVariant(*inst.b, info, scope);
            break;
          case Opcode::kMath:
            variant = ExprIsVariant(*inst.a, info, scope);
            break;
          // Loaded values and per-thread allocations are treated as varying.
          case Opcode::kLoad:
          case Opcode::kAlloca:
          case Opcode::kMalloc:
            variant = true;
            break;
          default:
            break;
        }
        // A local assigned on several paths takes whichever value the
        // thread's path produced.
        if (def_count[inst.dst] > 1 && info.block_guarded[b]) variant = true;
        if (variant) mark(info.local_variant, inst.dst);
      }
    }
  }
  return info;
}

}  // namespace kfuzz::kir
