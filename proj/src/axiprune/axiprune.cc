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

#include "kfuzz/axiprune/axiprune.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <set>

namespace kfuzz::axiprune {
namespace {

using kir::BufferRef;
using kir::Expr;
using kir::ExprPtr;
using kir::Instruction;
using kir::Opcode;

using BufKey = std::pair<BufferRef::Kind, int>;

BufKey KeyOf(const BufferRef& r) { return {r.kind, r.index}; }

bool Mentions(const ExprPtr& e, const std::vector<bool>& set) {
  if (!e) return false;
  bool hit = false;
  kir::ForEachLocal(*e, [&](int s) { hit = hit || set[s]; });
  return hit;
}

void Mark(const ExprPtr& e, std::vector<bool>* set) {
  if (e) kir::ForEachLocal(*e, [&](int s) { (*set)[s] = true; });
}

bool IsAllocation(const Instruction& in) {
  return in.opcode == Opcode::kAlloca || in.opcode == Opcode::kMalloc;
}

// Expressions whose values decide addresses or control flow.
enum class Use { kBranch, kIndex };

template <typename Fn>
void ForEachSensitiveUse(const kir::Kernel& k, Fn&& fn) {
  for (const kir::BasicBlock& bb : k.blocks) {
    for (const Instruction& in : bb.instrs) {
      if (in.opcode == Opcode::kBranch) fn(in, in.a, Use::kBranch);
      if (in.IsMemoryAccess()) fn(in, in.a, Use::kIndex);
      // Allocation sizes move every later allocation.
      if (IsAllocation(in)) fn(in, in.a, Use::kIndex);
    }
  }
}

// Locals whose value reaches a sensitive use of the given kinds, following
// definitions backwards and loads back to every store into the same buffer.
std::vector<bool> BackwardSlice(const kir::Kernel& k,
                                const std::set<Use>& kinds) {
  std::vector<bool> in_slice(k.locals.size(), false);
  ForEachSensitiveUse(k, [&](const Instruction&, const ExprPtr& e, Use u) {
    if (kinds.contains(u)) Mark(e, &in_slice);
  });
  std::set<BufKey> buffers;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const kir::BasicBlock& bb : k.blocks) {
      for (const Instruction& in : bb.instrs) {
        if (in.opcode == Opcode::kStore) {
          if (!buffers.contains(KeyOf(in.buffer))) continue;
          std::vector<bool> before = in_slice;
          Mark(in.b, &in_slice);
          changed = changed || before != in_slice;
          continue;
        }
        if (in.dst < 0 || !in_slice[in.dst]) continue;
        if (in.opcode == Opcode::kLoad) {
          changed = buffers.insert(KeyOf(in.buffer)).second || changed;
          continue;
        }
        if (IsAllocation(in)) continue;
        std::vector<bool> before = in_slice;
        Mark(in.a, &in_slice);
        Mark(in.b, &in_slice);
        changed = changed || before != in_slice;
      }
    }
  }
  return in_slice;
}

ExprPtr Substitute(const ExprPtr& e, const std::map<int, ExprPtr>& repl) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::kLocal: {
      auto it = repl.find(e->slot);
      return it == repl.end() ? e : it->second;
    }
    case Expr::Kind::kBinary: {
      ExprPtr l = Substitute(e->lhs, repl);
      ExprPtr r = Substitute(e->rhs, repl);
      if (l == e->lhs && r == e->rhs) return e;
      return Expr::Binary(e->op, std::move(l), std::move(r));
    }
    default:
      return e;
  }
}

}  // namespace

std::string_view ToString(RetainReason r) {
  return r == RetainReason::kUsedInBranch ? "used_in_branch" : "used_as_index";
}

kir::Kernel BarrierElimination(const kir::Kernel& k, const Options& o,
                               PruneReport* report) {
  std::vector<int> barriers;
  bool heap_ops = false;
  std::set<BufKey> written;
  for (const kir::BasicBlock& bb : k.blocks) {
    for (const Instruction& in : bb.instrs) {
      if (in.opcode == Opcode::kBarrier) barriers.push_back(in.id);
      if (in.opcode == Opcode::kMalloc || in.opcode == Opcode::kFree) {
        heap_ops = true;
      }
      if (in.opcode == Opcode::kStore) written.insert(KeyOf(in.buffer));
    }
  }
  if (barriers.empty()) return k;

  std::string blocker;
  if (heap_ops) {
    // Heap addresses depend on the order in which threads allocate.
    blocker = "device heap operations";
  }

  // Values that another thread may have produced before a barrier: loads
  // from shared arrays and from any buffer the kernel writes.
  std::vector<bool> shared_value(k.locals.size(), false);
  for (const kir::BasicBlock& bb : k.blocks) {
    for (const Instruction& in : bb.instrs) {
      if (in.opcode != Opcode::kLoad) continue;
      if (in.buffer.kind == BufferRef::Kind::kShared ||
          written.contains(KeyOf(in.buffer))) {
        shared_value[in.dst] = true;
      }
    }
  }
  if (o.transitive) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const kir::BasicBlock& bb : k.blocks) {
        for (const Instruction& in : bb.instrs) {
          if (in.dst < 0 || shared_value[in.dst]) continue;
          if (in.opcode != Opcode::kArith && in.opcode != Opcode::kMath) {
            continue;
          }
          if (Mentions(in.a, shared_value) || Mentions(in.b, shared_value)) {
            shared_value[in.dst] = true;
            changed = true;
          }
        }
      }
    }
  }
  ForEachSensitiveUse(k, [&](const Instruction& in, const ExprPtr& e, Use u) {
    if (!blocker.empty() || !Mentions(e, shared_value)) return;
    blocker = fmt::format("i{} uses a shared value {}", in.id,
                          u == Use::kBranch ? "in a branch" : "as an index");
  });

  if (report) report->barrier_blocker = blocker;
  if (!blocker.empty()) return k;

  kir::Kernel out = k;
  for (kir::BasicBlock& bb : out.blocks) {
    std::erase_if(bb.instrs, [](const Instruction& in) {
      return in.opcode == Opcode::kBarrier;
    });
  }
  if (report) {
    report->barriers_removed.insert(report->barriers_removed.end(),
                                    barriers.begin(), barriers.end());
  }
  return out;
}

kir::Kernel MathElimination(const kir::Kernel& k, PruneReport* report) {
  const std::vector<bool> branch_slice = BackwardSlice(k, {Use::kBranch});
  const std::vector<bool> index_slice = BackwardSlice(k, {Use::kIndex});

  std::vector<int> def_count(k.locals.size(), 0);
  for (const kir::BasicBlock& bb : k.blocks) {
    for (const Instruction& in : bb.instrs) {
      if (in.dst >= 0) ++def_count[in.dst];
    }
  }

  // Single-definition outputs are replaced by their input everywhere.
  std::map<int, ExprPtr> repl;
  std::set<int> removed;
  for (const kir::BasicBlock& bb : k.blocks) {
    for (const Instruction& in : bb.instrs) {
      if (in.opcode != Opcode::kMath) continue;
      if (branch_slice[in.dst] || index_slice[in.dst]) {
        std::vector<RetainReason> reasons;
        if (branch_slice[in.dst])
          reasons.push_back(RetainReason::kUsedInBranch);
        if (index_slice[in.dst]) reasons.push_back(RetainReason::kUsedAsIndex);
        if (report) report->math_retained[in.id] = std::move(reasons);
        continue;
      }
      removed.insert(in.id);
      if (report) report->math_removed.push_back(in.id);
      if (def_count[in.dst] == 1) repl[in.dst] = in.a;
    }
  }
  // Resolve chains such as y = sqrt x; z = exp y.
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& [slot, e] : repl) {
      ExprPtr next = Substitute(e, repl);
      if (next != e) {
        e = std::move(next);
        changed = true;
      }
    }
  }

  kir::Kernel out = k;
  for (kir::BasicBlock& bb : out.blocks) {
    std::vector<Instruction> kept;
    for (Instruction& in : bb.instrs) {
      if (removed.contains(in.id)) {
        if (repl.contains(in.dst)) continue;
        // Other definitions of the output remain; keep this one as a copy.
        Instruction copy;
        copy.opcode = Opcode::kArith;
        copy.id = in.id;
        copy.dst = in.dst;
        copy.binop = kir::BinaryOp::kAdd;
        copy.a = Substitute(in.a, repl);
        copy.b = Expr::Int(0);
        kept.push_back(std::move(copy));
        continue;
      }
      in.a = Substitute(in.a, repl);
      in.b = Substitute(in.b, repl);
      kept.push_back(std::move(in));
    }
    bb.instrs = std::move(kept);
  }
  return out;
}

std::pair<kir::Kernel, PruneReport> Prune(const kir::Kernel& k,
                                          const Options& o) {
  PruneReport report;
  kir::Kernel out = BarrierElimination(k, o, &report);
  out = MathElimination(out, &report);
  return {std::move(out), std::move(report)};
}

std::string DumpPruneReport(const kir::Kernel& k, const PruneReport& r) {
  std::string out = fmt::format("prune {}\n", k.name);
  out +=
      fmt::format("barriers_removed {} ids=[{}]\n", r.barriers_removed.size(),
                  fmt::join(r.barriers_removed, ","));
  if (!r.barrier_blocker.empty()) {
    out += fmt::format("barriers_kept_because {}\n", r.barrier_blocker);
  }
  out += fmt::format("math_removed {} ids=[{}]\n", r.math_removed.size(),
                     fmt::join(r.math_removed, ","));
  out += fmt::format("math_retained {}\n", r.math_retained.size());
  for (const auto& [id, reasons] : r.math_retained) {
    std::vector<std::string_view> names;
    for (RetainReason why : reasons) names.push_back(ToString(why));
    out += fmt::format("retained i{} {}\n", id, fmt::join(names, ","));
  }
  return out;
}

}  // namespace kfuzz::axiprune
