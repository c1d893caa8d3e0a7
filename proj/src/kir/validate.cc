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

#include "kfuzz/kir/validate.h"

#include <set>
#include <vector>

#include "fmt/format.h"
#include "kfuzz/kir/cfg.h"

namespace kfuzz::kir {
namespace {

using Issue = std::optional<ValidationIssue>;

ValidationIssue Make(const char* rule, int block, int instr_id,
                     std::string message) {
  return ValidationIssue{rule, block, instr_id, std::move(message)};
}

bool IsBlockInvariant(const Expr& e, const Kernel& k) {
  switch (e.kind) {
    case Expr::Kind::kIntLit:
    case Expr::Kind::kFloatLit:
      return true;
    case Expr::Kind::kParam:
      return !k.params[e.slot].is_buffer();
    case Expr::Kind::kIntrinsic:
      return e.intrinsic == Intrinsic::kBlockDim ||
             e.intrinsic == Intrinsic::kGridDim;
    case Expr::Kind::kBinary:
      return IsBlockInvariant(*e.lhs, k) && IsBlockInvariant(*e.rhs, k);
    default:
      return false;
  }
}

Issue CheckExprOperands(const Kernel& k, const Expr& e,
                        const std::vector<bool>& is_pointer, int block,
                        int id) {
  switch (e.kind) {
    case Expr::Kind::kParam:
      if (e.slot < 0 || e.slot >= static_cast<int>(k.params.size())) {
        return Make(kRuleBufferInExpression, block, id, "bad param slot");
      }
      if (k.params[e.slot].is_buffer()) {
        return Make(
            kRuleBufferInExpression, block, id,
            fmt::format("buffer '{}' used as a value", k.params[e.slot].name));
      }
      return std::nullopt;
    case Expr::Kind::kLocal:
    case Expr::Kind::kPromoted:
      if (e.slot < 0 || e.slot >= static_cast<int>(k.locals.size())) {
        return Make(kRuleUndefinedLocal, block, id, "bad local slot");
      }
      if (is_pointer[e.slot]) {
        return Make(
            kRulePointerMisuse, block, id,
            fmt::format("pointer '{}' used as a value", k.locals[e.slot]));
      }
      return std::nullopt;
    case Expr::Kind::kBinary:
      if (Issue i = CheckExprOperands(k, *e.lhs, is_pointer, block, id))
        return i;
      return CheckExprOperands(k, *e.rhs, is_pointer, block, id);
    default:
      return std::nullopt;
  }
}

const std::vector<int64_t>* DeclaredFields(
    const Kernel& k, const BufferRef& ref,
    const std::vector<const Instruction*>& ptr_def) {
  switch (ref.kind) {
    case BufferRef::Kind::kParam:
      return &k.params[ref.index].fields;
    case BufferRef::Kind::kShared:
      return &k.shared[ref.index].fields;
    case BufferRef::Kind::kLocal:
      return ptr_def[ref.index] ? &ptr_def[ref.index]->fields : nullptr;
    case BufferRef::Kind::kPromoted:
      break;
  }
  return nullptr;
}

Issue CheckDeclarations(const Kernel& k) {
  std::set<std::string> names;
  auto claim = [&](const std::string& n) { return names.insert(n).second; };
  for (const Param& p : k.params) {
    if (!claim(p.name)) {
      return Make(kRuleDuplicateName, -1, -1,
                  fmt::format("'{}' declared twice", p.name));
    }
  }
  int dynamic = 0;
  for (const SharedDecl& s : k.shared) {
    if (!claim(s.name)) {
      return Make(kRuleDuplicateName, -1, -1,
                  fmt::format("'{}' declared twice", s.name));
    }
    if (s.dynamic && ++dynamic > 1) {
      return Make(
          kRuleMultipleDynamicShared, -1, -1,
          fmt::format("second dynamic shared declaration '{}'", s.name));
    }
    if (!s.dynamic && (!s.count || !IsBlockInvariant(*s.count, k))) {
      return Make(kRuleVariantSharedSize, -1, -1,
                  fmt::format("size of '{}' is not block-invariant", s.name));
    }
  }
  for (const std::string& l : k.locals) {
    if (!claim(l)) {
      return Make(kRuleDuplicateName, -1, -1,
                  fmt::format("local '{}' shadows a declaration", l));
    }
  }
  std::set<std::string> labels;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const BasicBlock& bb = k.blocks[b];
    int first = bb.instrs.empty() ? -1 : bb.instrs.front().id;
    if (!labels.insert(bb.label).second) {
      return Make(kRuleDuplicateLabel, static_cast<int>(b), first,
                  fmt::format("label '{}' defined twice", bb.label));
    }
  }
  return std::nullopt;
}

Issue CheckBlockShape(const Kernel& k) {
  const int n = static_cast<int>(k.blocks.size());
  if (n == 0) return Make(kRuleTerminator, -1, -1, "kernel has no blocks");
  for (int b = 0; b < n; ++b) {
    const BasicBlock& bb = k.blocks[b];
    if (bb.instrs.empty() || !bb.instrs.back().IsTerminator()) {
      return Make(
          kRuleTerminator, b, bb.instrs.empty() ? -1 : bb.instrs.back().id,
          fmt::format("block '{}' does not end in a terminator", bb.label));
    }
    for (size_t i = 0; i + 1 < bb.instrs.size(); ++i) {
      if (bb.instrs[i].IsTerminator()) {
        return Make(
            kRuleTerminator, b, bb.instrs[i].id,
            fmt::format("terminator in the middle of block '{}'", bb.label));
      }
    }
    const Instruction& t = bb.instrs.back();
    auto bad = [n](int target) { return target < 0 || target >= n; };
    if ((t.opcode == Opcode::kJump && bad(t.target)) ||
        (t.opcode == Opcode::kBranch &&
         (bad(t.target) || bad(t.target_else)))) {
      return Make(kRuleUndefinedLabel, b, t.id, "branch target does not exist");
    }
  }
  return std::nullopt;
}

Issue CheckOperands(const Kernel& k, std::vector<const Instruction*>& ptr_def) {
  const int nl = static_cast<int>(k.locals.size());
  std::vector<int> defs(nl, 0);
  std::vector<bool> is_pointer(nl, false);
  ptr_def.assign(nl, nullptr);
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) {
      if (inst.dst < 0) continue;
      if (inst.dst >= nl)
        return Make(kRuleUndefinedLocal, -1, inst.id, "bad dst slot");
      ++defs[inst.dst];
      if (inst.opcode == Opcode::kAlloca || inst.opcode == Opcode::kMalloc) {
        is_pointer[inst.dst] = true;
        ptr_def[inst.dst] = &inst;
      }
    }
  }
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const int bi = static_cast<int>(b);
    for (const Instruction& inst : k.blocks[b].instrs) {
      if (inst.dst >= 0 && is_pointer[inst.dst] && defs[inst.dst] != 1) {
        return Make(kRulePointerMisuse, bi, inst.id,
                    fmt::format("pointer '{}' must have exactly one definition",
                                k.locals[inst.dst]));
      }
      for (const ExprPtr& e : {inst.a, inst.b}) {
        if (!e) continue;
        if (Issue i = CheckExprOperands(k, *e, is_pointer, bi, inst.id))
          return i;
      }
      bool uses_buffer = inst.opcode == Opcode::kLoad ||
                         inst.opcode == Opcode::kStore ||
                         inst.opcode == Opcode::kFree;
      if (!uses_buffer) continue;
      const BufferRef& ref = inst.buffer;
      switch (ref.kind) {
        case BufferRef::Kind::kParam:
          if (ref.index < 0 || ref.index >= static_cast<int>(k.params.size()) ||
              !k.params[ref.index].is_buffer()) {
            return Make(kRulePointerMisuse, bi, inst.id,
                        "operand is not a buffer");
          }
          break;
        case BufferRef::Kind::kShared:
          if (ref.index < 0 || ref.index >= static_cast<int>(k.shared.size())) {
            return Make(kRulePointerMisuse, bi, inst.id, "bad shared slot");
          }
          break;
        case BufferRef::Kind::kLocal:
          if (ref.index < 0 || ref.index >= nl || !is_pointer[ref.index]) {
            return Make(kRulePointerMisuse, bi, inst.id,
                        fmt::format("'{}' is not a buffer",
                                    ref.index >= 0 && ref.index < nl
                                        ? k.locals[ref.index]
                                        : std::string("?")));
          }
          break;
        case BufferRef::Kind::kPromoted:
          return Make(kRulePointerMisuse, bi, inst.id,
                      "promoted operand outside a lowered program");
      }
      if (ref.field >= 0) {
        const std::vector<int64_t>* fields = DeclaredFields(k, ref, ptr_def);
        if (!fields || ref.field >= static_cast<int>(fields->size())) {
          return Make(kRuleBadField, bi, inst.id,
                      fmt::format("field {} of '{}' is not declared", ref.field,
                                  k.BufferName(ref)));
        }
      }
    }
  }
  return std::nullopt;
}

Issue CheckDefiniteAssignment(const Kernel& k, const Cfg& cfg) {
  const int n = cfg.size();
  const int nl = static_cast<int>(k.locals.size());
  std::vector<std::vector<bool>> in(n, std::vector<bool>(nl, true));
  std::vector<std::vector<bool>> out(n, std::vector<bool>(nl, true));
  in[0].assign(nl, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b : cfg.rpo()) {
      std::vector<bool> cur(nl, b != 0);
      if (b != 0) {
        for (int p : cfg.preds(b)) {
          if (!cfg.reachable(p)) continue;
          for (int l = 0; l < nl; ++l) cur[l] = cur[l] && out[p][l];
        }
      }
      in[b] = cur;
      for (const Instruction& inst : k.blocks[b].instrs) {
        if (inst.dst >= 0) cur[inst.dst] = true;
      }
      if (cur != out[b]) {
        out[b] = std::move(cur);
        changed = true;
      }
    }
  }
  for (int b : cfg.rpo()) {
    std::vector<bool> defined = in[b];
    for (const Instruction& inst : k.blocks[b].instrs) {
      int missing = -1;
      auto use = [&](int slot) {
        if (missing < 0 && !defined[slot]) missing = slot;
      };
      if (inst.a) ForEachLocal(*inst.a, use);
      if (inst.b) ForEachLocal(*inst.b, use);
      if ((inst.IsMemoryAccess() || inst.opcode == Opcode::kFree) &&
          inst.buffer.kind == BufferRef::Kind::kLocal) {
        use(inst.buffer.index);
      }
      if (missing >= 0) {
        return Make(kRuleUndefinedLocal, b, inst.id,
                    fmt::format("'{}' may be used before it is defined",
                                k.locals[missing]));
      }
      if (inst.dst >= 0) defined[inst.dst] = true;
    }
  }
  return std::nullopt;
}

Issue CheckScopes(const Kernel& k, const Cfg& cfg) {
  const int n = cfg.size();
  std::vector<int> depth_in(n, -1);
  depth_in[0] = 0;
  std::vector<int> work{0};
  while (!work.empty()) {
    int b = work.back();
    work.pop_back();
    int depth = depth_in[b];
    for (const Instruction& inst : k.blocks[b].instrs) {
      switch (inst.opcode) {
        case Opcode::kScopeBegin:
          ++depth;
          break;
        case Opcode::kScopeEnd:
          if (depth == 0) {
            return Make(kRuleScopeMismatch, b, inst.id,
                        "scope_end without scope_begin");
          }
          --depth;
          break;
        case Opcode::kBarrier:
          if (depth > 0) {
            return Make(kRuleBarrierInScope, b, inst.id,
                        "barrier inside a scope");
          }
          break;
        case Opcode::kReturn:
          if (depth > 0) {
            return Make(kRuleScopeMismatch, b, inst.id,
                        "return inside an open scope");
          }
          break;
        default:
          break;
      }
    }
    for (int s : cfg.succs(b)) {
      if (depth_in[s] < 0) {
        depth_in[s] = depth;
        work.push_back(s);
      } else if (depth_in[s] != depth) {
        return Make(
            kRuleScopeMismatch, s, k.blocks[s].instrs.front().id,
            fmt::format("block '{}' is entered at different scope depths",
                        k.blocks[s].label));
      }
    }
  }
  return std::nullopt;
}

Issue CheckBarriers(const Kernel& k, const Cfg& cfg) {
  VarianceInfo info = AnalyzeVariance(k, cfg, VarianceScope::kWithinBlock);
  for (int b : cfg.rpo()) {
    if (!info.block_guarded[b]) continue;
    for (const Instruction& inst : k.blocks[b].instrs) {
      if (inst.opcode == Opcode::kBarrier) {
        return Make(kRuleBarrierDivergence, b, inst.id,
                    "barrier under thread-dependent control flow");
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<ValidationIssue> FindValidationIssue(const Kernel& k) {
  if (Issue i = CheckDeclarations(k)) return i;
  if (Issue i = CheckBlockShape(k)) return i;
  std::vector<const Instruction*> ptr_def;
  if (Issue i = CheckOperands(k, ptr_def)) return i;
  Cfg cfg(k);
  if (!cfg.IsReducible()) {
    return Make(kRuleIrreducible, -1, -1, "control flow graph is irreducible");
  }
  if (Issue i = CheckDefiniteAssignment(k, cfg)) return i;
  if (Issue i = CheckScopes(k, cfg)) return i;
  if (Issue i = CheckBarriers(k, cfg)) return i;
  return std::nullopt;
}

absl::Status ValidateKernel(const Kernel& k) {
  if (std::optional<ValidationIssue> issue = FindValidationIssue(k)) {
    return absl::FailedPreconditionError(
        fmt::format("{}: {}", issue->rule, issue->message));
  }
  return absl::OkStatus();
}

}  // namespace kfuzz::kir
