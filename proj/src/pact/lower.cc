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

#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <map>

#include "kfuzz/kir/cfg.h"
#include "kfuzz/kir/printer.h"
#include "kfuzz/pact/pact.h"

namespace kfuzz::pact {
namespace {

using kir::BufferRef;
using kir::Expr;
using kir::ExprPtr;
using kir::Instruction;
using kir::Opcode;

// A run of instructions of one kernel block that ends at a barrier or at
// the block terminator.
struct Piece {
  int block = 0;
  int ordinal = 0;  // position among the pieces of its block
  size_t begin = 0;
  size_t end = 0;  // exclusive; the last instruction is a barrier or terminator
  bool ends_at_barrier = false;
};

void ForEachUse(const Instruction& in, const std::function<void(int)>& fn) {
  if (in.a) kir::ForEachLocal(*in.a, fn);
  if (in.b) kir::ForEachLocal(*in.b, fn);
  if ((in.IsMemoryAccess() || in.opcode == Opcode::kFree) &&
      in.buffer.kind == BufferRef::Kind::kLocal) {
    fn(in.buffer.index);
  }
}

// Locals live right after some barrier.
std::vector<bool> LiveAcrossBarriers(const kir::Kernel& k,
                                     const kir::Cfg& cfg) {
  const size_t nl = k.locals.size();
  const int nb = static_cast<int>(k.blocks.size());
  auto transfer = [&](int b, std::vector<bool> live,
                      std::vector<bool>* across) {
    const auto& instrs = k.blocks[b].instrs;
    for (size_t i = instrs.size(); i-- > 0;) {
      const Instruction& in = instrs[i];
      if (in.opcode == Opcode::kBarrier && across) {
        for (size_t s = 0; s < nl; ++s) {
          if (live[s]) (*across)[s] = true;
        }
      }
      if (in.dst >= 0) live[in.dst] = false;
      ForEachUse(in, [&](int s) { live[s] = true; });
    }
    return live;
  };
  std::vector<std::vector<bool>> live_in(nb, std::vector<bool>(nl, false));
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b = nb - 1; b >= 0; --b) {
      std::vector<bool> out(nl, false);
      for (int s : cfg.succs(b)) {
        for (size_t i = 0; i < nl; ++i) out[i] = out[i] || live_in[s][i];
      }
      std::vector<bool> in = transfer(b, std::move(out), nullptr);
      if (in != live_in[b]) {
        live_in[b] = std::move(in);
        changed = true;
      }
    }
  }
  std::vector<bool> across(nl, false);
  for (int b = 0; b < nb; ++b) {
    std::vector<bool> out(nl, false);
    for (int s : cfg.succs(b)) {
      for (size_t i = 0; i < nl; ++i) out[i] = out[i] || live_in[s][i];
    }
    transfer(b, std::move(out), &across);
  }
  return across;
}

ExprPtr Rewrite(const ExprPtr& e, const std::vector<bool>& promoted) {
  if (!e) return e;
  switch (e->kind) {
    case Expr::Kind::kLocal:
      return promoted[e->slot] ? Expr::Promoted(e->slot) : e;
    case Expr::Kind::kBinary: {
      ExprPtr l = Rewrite(e->lhs, promoted);
      ExprPtr r = Rewrite(e->rhs, promoted);
      if (l == e->lhs && r == e->rhs) return e;
      return Expr::Binary(e->op, std::move(l), std::move(r));
    }
    default:
      return e;
  }
}

Instruction RewriteInstruction(const Instruction& in,
                               const std::vector<bool>& promoted) {
  Instruction out = in;
  out.a = Rewrite(in.a, promoted);
  out.b = Rewrite(in.b, promoted);
  if (in.dst >= 0 && promoted[in.dst]) out.dst_promoted = true;
  if (in.buffer.kind == BufferRef::Kind::kLocal && in.buffer.index >= 0 &&
      promoted[in.buffer.index]) {
    out.buffer.kind = BufferRef::Kind::kPromoted;
  }
  return out;
}

}  // namespace

bool LoweredProgram::IsPromoted(int slot) const {
  return std::binary_search(promoted.begin(), promoted.end(), slot);
}

affine::PlanKind PlanKindFor(const affine::AffineSummary& s) {
  if (!s.affine) return affine::PlanKind::kAll;
  return s.guarded ? affine::PlanKind::kBoundaryBlocksAllThreads
                   : affine::PlanKind::kBoundaryThreads;
}

absl::StatusOr<LoweredProgram> Lower(const kir::Kernel& k) {
  affine::AffineSummary s = affine::Analyze(k);
  const affine::PlanKind plan = PlanKindFor(s);
  return Lower(k, s, plan);
}

absl::StatusOr<LoweredProgram> Lower(const kir::Kernel& k,
                                     const affine::AffineSummary& s,
                                     affine::PlanKind plan) {
  const kir::Cfg cfg(k);
  const kir::VarianceInfo vi =
      kir::AnalyzeVariance(k, cfg, kir::VarianceScope::kWithinBlock);

  // Cut blocks into pieces and number the barriers.
  std::vector<Piece> pieces;
  std::vector<int> first_piece(k.blocks.size(), -1);
  std::map<int, int> phase_after_barrier;  // barrier instr id -> phase
  std::vector<int> phase_entry = {0};      // phase -> piece
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    const auto& instrs = k.blocks[b].instrs;
    first_piece[b] = static_cast<int>(pieces.size());
    Piece cur{static_cast<int>(b), 0, 0, 0, false};
    for (size_t i = 0; i < instrs.size(); ++i) {
      if (instrs[i].opcode != Opcode::kBarrier) continue;
      if (vi.block_guarded[b]) {
        return absl::FailedPreconditionError(fmt::format(
            "UnsupportedBarrierPlacement: barrier i{} in block '{}' is under "
            "thread-dependent control flow",
            instrs[i].id, k.blocks[b].label));
      }
      cur.end = i + 1;
      cur.ends_at_barrier = true;
      pieces.push_back(cur);
      phase_after_barrier[instrs[i].id] = static_cast<int>(phase_entry.size());
      phase_entry.push_back(static_cast<int>(pieces.size()));
      cur = Piece{static_cast<int>(b), cur.ordinal + 1, i + 1, 0, false};
    }
    cur.end = instrs.size();
    pieces.push_back(cur);
  }

  LoweredProgram p;
  p.kernel = k;
  p.kernel.blocks.clear();
  p.summary = s;
  p.plan = plan;
  p.tid_exposed = plan == affine::PlanKind::kBoundaryThreads;
  p.piece_count = static_cast<int>(pieces.size());

  const std::vector<bool> promoted = LiveAcrossBarriers(k, cfg);
  for (size_t i = 0; i < promoted.size(); ++i) {
    if (promoted[i]) p.promoted.push_back(static_cast<int>(i));
  }

  for (size_t ph = 0; ph < phase_entry.size(); ++ph) {
    PhaseLoop loop;
    loop.index = static_cast<int>(ph);
    std::map<int, int> local_of;  // piece -> block index in this phase
    std::deque<int> work;
    auto index_of = [&](int piece) {
      auto [it, inserted] =
          local_of.emplace(piece, static_cast<int>(loop.pieces.size()));
      if (inserted) {
        loop.pieces.push_back(piece);
        work.push_back(piece);
      }
      return it->second;
    };
    index_of(phase_entry[ph]);
    std::vector<kir::BasicBlock> blocks;
    while (!work.empty()) {
      const int id = work.front();
      work.pop_front();
      const Piece& pc = pieces[id];
      const kir::BasicBlock& src = k.blocks[pc.block];
      kir::BasicBlock bb;
      bb.label = pc.ordinal == 0 ? src.label
                                 : fmt::format("{}.{}", src.label, pc.ordinal);
      for (size_t i = pc.begin; i < pc.end; ++i) {
        Instruction in = RewriteInstruction(src.instrs[i], promoted);
        if (in.opcode == Opcode::kBarrier) {
          Instruction end;
          end.opcode = Opcode::kReturn;
          end.id = in.id;
          end.next_phase = phase_after_barrier.at(in.id);
          in = std::move(end);
        } else if (in.opcode == Opcode::kJump || in.opcode == Opcode::kBranch) {
          in.target = index_of(first_piece[in.target]);
          if (in.opcode == Opcode::kBranch) {
            in.target_else = index_of(first_piece[in.target_else]);
          }
        }
        bb.instrs.push_back(std::move(in));
      }
      const int slot = local_of.at(id);
      if (static_cast<int>(blocks.size()) <= slot) blocks.resize(slot + 1);
      blocks[slot] = std::move(bb);
    }
    loop.blocks = std::move(blocks);
    p.phases.push_back(std::move(loop));
  }
  return p;
}

std::string PrintLowered(const LoweredProgram& p) {
  const kir::Kernel& k = p.kernel;
  std::string out = fmt::format("task {}(", k.name);
  for (size_t i = 0; i < k.params.size(); ++i) {
    const kir::Param& prm = k.params[i];
    if (i) out += ", ";
    if (prm.is_buffer()) {
      out += fmt::format("{}: *{} {}", prm.name, kir::ToString(prm.space),
                         kir::ToString(prm.elem));
    } else {
      out += fmt::format("{}: {}", prm.name, kir::ToString(prm.elem));
    }
  }
  out += p.tid_exposed ? ", blockIdx.x, tid)\n" : ", blockIdx.x)\n";
  out += fmt::format("plan {}\n", affine::ToString(p.plan));
  for (const kir::SharedDecl& s : k.shared) {
    if (s.dynamic) {
      out += fmt::format("stack {}: dyn {}\n", s.name, kir::ToString(s.elem));
    } else {
      out += fmt::format("stack {}: [{}] {}\n", s.name,
                         kir::PrintExpr(k, *s.count), kir::ToString(s.elem));
    }
  }
  for (int slot : p.promoted) {
    out += fmt::format("promoted {}: [blockDim.x]\n", k.locals[slot]);
  }
  for (const PhaseLoop& loop : p.phases) {
    out += fmt::format("phase {}\n", loop.index);
    out += p.tid_exposed ? "at tid\n" : "loop tid\n";
    kir::Kernel view = k;
    view.blocks = loop.blocks;
    for (const kir::BasicBlock& bb : loop.blocks) {
      out += bb.label + ":\n";
      for (const Instruction& in : bb.instrs) {
        out += "  " + kir::PrintInstruction(view, in) + "\n";
      }
    }
    out += "end\n";
  }
  return out;
}

}  // namespace kfuzz::pact
