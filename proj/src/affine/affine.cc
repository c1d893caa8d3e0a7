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

#include "kfuzz/affine/affine.h"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <set>

#include "kfuzz/kir/cfg.h"

namespace kfuzz::affine {

using kir::BinaryOp;
using kir::Expr;
using kir::Instruction;
using kir::Opcode;

namespace {

int64_t WrapMul(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) *
                              static_cast<uint64_t>(b));
}

int64_t WrapAdd(int64_t a, int64_t b) {
  return static_cast<int64_t>(static_cast<uint64_t>(a) +
                              static_cast<uint64_t>(b));
}

std::string AtomName(const kir::Kernel& k, int atom) {
  if (atom == kBlockDimAtom) return "blockDim.x";
  if (atom == kGridDimAtom) return "gridDim.x";
  return k.params[atom].name;
}

}  // namespace

InvariantPoly InvariantPoly::Constant(int64_t c) {
  InvariantPoly p;
  p.AddTerm({}, c);
  return p;
}

InvariantPoly InvariantPoly::Atom(int atom) {
  InvariantPoly p;
  p.AddTerm({atom}, 1);
  return p;
}

void InvariantPoly::AddTerm(const Monomial& m, int64_t coeff) {
  const int64_t sum = WrapAdd(terms_[m], coeff);
  if (sum == 0) {
    terms_.erase(m);
  } else {
    terms_[m] = sum;
  }
}

InvariantPoly InvariantPoly::operator+(const InvariantPoly& o) const {
  InvariantPoly r = *this;
  for (const auto& [m, c] : o.terms_) r.AddTerm(m, c);
  return r;
}

InvariantPoly InvariantPoly::operator-(const InvariantPoly& o) const {
  InvariantPoly r = *this;
  for (const auto& [m, c] : o.terms_) r.AddTerm(m, WrapMul(c, -1));
  return r;
}

InvariantPoly InvariantPoly::operator*(const InvariantPoly& o) const {
  InvariantPoly r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m = ma;
      m.insert(m.end(), mb.begin(), mb.end());
      std::sort(m.begin(), m.end());
      r.AddTerm(m, WrapMul(ca, cb));
    }
  }
  return r;
}

int64_t InvariantPoly::Evaluate(const std::vector<sanrt::Value>& params,
                                int64_t blocks, int64_t threads) const {
  int64_t total = 0;
  for (const auto& [m, c] : terms_) {
    int64_t term = c;
    for (int atom : m) {
      int64_t v = 0;
      if (atom == kBlockDimAtom) {
        v = threads;
      } else if (atom == kGridDimAtom) {
        v = blocks;
      } else {
        v = params[atom].AsInt();
      }
      term = WrapMul(term, v);
    }
    total = WrapAdd(total, term);
  }
  return total;
}

std::string InvariantPoly::ToString(const kir::Kernel& k) const {
  if (terms_.empty()) return "0";
  std::string out;
  auto emit = [&](const Monomial& m, int64_t c) {
    const bool negative = c < 0;
    const uint64_t mag =
        negative ? 0 - static_cast<uint64_t>(c) : static_cast<uint64_t>(c);
    if (!out.empty()) {
      out += negative ? "-" : "+";
    } else if (negative) {
      out += "-";
    }
    std::vector<std::string> factors;
    if (mag != 1 || m.empty()) factors.push_back(fmt::format("{}", mag));
    for (int atom : m) factors.push_back(AtomName(k, atom));
    out += fmt::format("{}", fmt::join(factors, "*"));
  };
  for (const auto& [m, c] : terms_) {
    if (!m.empty()) emit(m, c);
  }
  auto it = terms_.find(Monomial{});
  if (it != terms_.end()) emit(it->first, it->second);
  return out;
}

std::string AffineRow::Key(const kir::Kernel& k) const {
  return fmt::format("{}|{}|{}", m.ToString(k), n.ToString(k), c.ToString(k));
}

int64_t AffineRow::Evaluate(const std::vector<sanrt::Value>& params,
                            int64_t blocks, int64_t threads, int64_t tid,
                            int64_t bid) const {
  return WrapAdd(WrapAdd(WrapMul(m.Evaluate(params, blocks, threads), tid),
                         WrapMul(n.Evaluate(params, blocks, threads), bid)),
                 c.Evaluate(params, blocks, threads));
}

std::string_view ToString(NonAffineCause c) {
  switch (c) {
    case NonAffineCause::kIndirectLoad:
      return "indirect_load";
    case NonAffineCause::kNonlinear:
      return "nonlinear";
    case NonAffineCause::kMathDependent:
      return "math_dependent";
  }
  return "?";
}

std::string_view ToString(PlanKind p) {
  switch (p) {
    case PlanKind::kBoundaryThreads:
      return "boundary_threads";
    case PlanKind::kBoundaryBlocksAllThreads:
      return "boundary_blocks_all_threads";
    case PlanKind::kAll:
      return "all";
  }
  return "?";
}

namespace {

struct Linear {
  InvariantPoly m, n, c;
};

struct Outcome {
  bool ok = true;
  Linear lin;
  NonAffineCause cause = NonAffineCause::kNonlinear;

  static Outcome Fail(NonAffineCause c) { return Outcome{false, {}, c}; }
};

bool IsInvariant(const Linear& l) { return l.m.IsZero() && l.n.IsZero(); }

Linear Scale(const Linear& l, const InvariantPoly& s) {
  return Linear{l.m * s, l.n * s, l.c * s};
}

class Decomposer {
 public:
  explicit Decomposer(const kir::Kernel& k)
      : k_(k), defs_(k.locals.size()), def_count_(k.locals.size(), 0) {
    for (const kir::BasicBlock& bb : k.blocks) {
      for (const Instruction& in : bb.instrs) {
        if (in.dst >= 0) {
          ++def_count_[in.dst];
          defs_[in.dst] = &in;
        }
      }
    }
  }

  Outcome Decompose(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::kIntLit:
        return Outcome{true, {{}, {}, InvariantPoly::Constant(e.int_value)}};
      case Expr::Kind::kParam:
        if (kir::IsFloat(k_.params[e.slot].elem)) {
          return Outcome::Fail(NonAffineCause::kNonlinear);
        }
        return Outcome{true, {{}, {}, InvariantPoly::Atom(e.slot)}};
      case Expr::Kind::kIntrinsic:
        switch (e.intrinsic) {
          case kir::Intrinsic::kThreadIdx:
            return Outcome{true, {InvariantPoly::Constant(1), {}, {}}};
          case kir::Intrinsic::kBlockIdx:
            return Outcome{true, {{}, InvariantPoly::Constant(1), {}}};
          case kir::Intrinsic::kBlockDim:
            return Outcome{true, {{}, {}, InvariantPoly::Atom(kBlockDimAtom)}};
          case kir::Intrinsic::kGridDim:
            return Outcome{true, {{}, {}, InvariantPoly::Atom(kGridDimAtom)}};
        }
        break;
      case Expr::Kind::kBinary:
        return Combine(e.op, *e.lhs, *e.rhs);
      case Expr::Kind::kLocal:
        return Local(e.slot);
      default:
        break;
    }
    return Outcome::Fail(NonAffineCause::kNonlinear);
  }

 private:
  Outcome Combine(BinaryOp op, const Expr& lhs, const Expr& rhs) {
    const Outcome a = Decompose(lhs);
    if (!a.ok) return a;
    const Outcome b = Decompose(rhs);
    if (!b.ok) return b;
    switch (op) {
      case BinaryOp::kAdd:
        return Outcome{
            true, {a.lin.m + b.lin.m, a.lin.n + b.lin.n, a.lin.c + b.lin.c}};
      case BinaryOp::kSub:
        return Outcome{
            true, {a.lin.m - b.lin.m, a.lin.n - b.lin.n, a.lin.c - b.lin.c}};
      case BinaryOp::kMul:
        if (IsInvariant(a.lin)) return Outcome{true, Scale(b.lin, a.lin.c)};
        if (IsInvariant(b.lin)) return Outcome{true, Scale(a.lin, b.lin.c)};
        return Outcome::Fail(NonAffineCause::kNonlinear);
      default:
        return Outcome::Fail(NonAffineCause::kNonlinear);
    }
  }

  Outcome Local(int slot) {
    if (auto it = memo_.find(slot); it != memo_.end()) return it->second;
    if (def_count_[slot] != 1 || !visiting_.insert(slot).second) {
      return Outcome::Fail(NonAffineCause::kNonlinear);
    }
    const Instruction& def = *defs_[slot];
    Outcome out = Outcome::Fail(NonAffineCause::kNonlinear);
    switch (def.opcode) {
      case Opcode::kArith:
        out = Combine(def.binop, *def.a, *def.b);
        break;
      case Opcode::kMath:
        out = Outcome::Fail(NonAffineCause::kMathDependent);
        break;
      case Opcode::kLoad:
        out = Outcome::Fail(NonAffineCause::kIndirectLoad);
        break;
      default:
        break;
    }
    visiting_.erase(slot);
    memo_[slot] = out;
    return out;
  }

  const kir::Kernel& k_;
  std::vector<const Instruction*> defs_;
  std::vector<int> def_count_;
  std::map<int, Outcome> memo_;
  std::set<int> visiting_;
};

}  // namespace

AffineSummary Analyze(const kir::Kernel& k) {
  AffineSummary s;
  const kir::Cfg cfg(k);
  const kir::VarianceInfo vi =
      kir::AnalyzeVariance(k, cfg, kir::VarianceScope::kGrid);
  Decomposer d(k);
  std::map<std::string, size_t> row_of;
  for (size_t b = 0; b < k.blocks.size(); ++b) {
    for (const Instruction& in : k.blocks[b].instrs) {
      if (!in.IsMemoryAccess()) continue;
      if (vi.block_guarded[b]) s.guarded = true;
      const Outcome o = d.Decompose(*in.a);
      if (!o.ok) {
        s.affine = false;
        s.reasons.emplace_back(in.id, o.cause);
        continue;
      }
      AffineRow row{o.lin.m, o.lin.n, o.lin.c, {}};
      const std::string key = row.Key(k);
      auto [it, inserted] = row_of.emplace(key, s.rows.size());
      if (inserted) s.rows.push_back(std::move(row));
      s.rows[it->second].instr_ids.push_back(in.id);
    }
  }
  if (!s.affine) s.rows.clear();
  return s;
}

Plan SelectRepresentativeThreads(const AffineSummary& s,
                                 const kir::GridConfig& g) {
  Plan p;
  if (!s.affine) {
    p.kind = PlanKind::kAll;
  } else if (s.guarded) {
    p.kind = PlanKind::kBoundaryBlocksAllThreads;
  } else {
    p.kind = PlanKind::kBoundaryThreads;
    std::set<sanrt::ThreadId> corners;
    for (int64_t b : {int64_t{0}, g.blocks - 1}) {
      for (int64_t t : {int64_t{0}, g.threads - 1}) {
        corners.insert(sanrt::ThreadId{b, t});
      }
    }
    p.threads.assign(corners.begin(), corners.end());
  }
  return p;
}

std::string DumpAffine(const kir::Kernel& k, const AffineSummary& s) {
  std::string out = fmt::format("kernel {}\n", k.name);
  if (!s.affine) {
    out += "status non_affine\n";
    for (const auto& [id, cause] : s.reasons) {
      out += fmt::format("reason instr={} cause={}\n", id, ToString(cause));
    }
    return out;
  }
  out += "status affine\n";
  out += fmt::format("guarded {}\n", s.guarded);
  out += fmt::format("rows {}\n", s.rows.size());
  std::vector<std::string> t_rows;
  std::vector<std::string> b_entries;
  for (size_t i = 0; i < s.rows.size(); ++i) {
    const AffineRow& r = s.rows[i];
    out += fmt::format("row {} m={} n={} c={} instrs={}\n", i, r.m.ToString(k),
                       r.n.ToString(k), r.c.ToString(k),
                       fmt::join(r.instr_ids, ","));
    t_rows.push_back(fmt::format("[{}, {}]", r.m.ToString(k), r.n.ToString(k)));
    b_entries.push_back(r.c.ToString(k));
  }
  out += fmt::format("T [{}]\n", fmt::join(t_rows, ", "));
  out += fmt::format("b [{}]\n", fmt::join(b_entries, ", "));
  return out;
}

}  // namespace kfuzz::affine
