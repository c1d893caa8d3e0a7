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

#include "kfuzz/pact/pact.h"

namespace kfuzz::pact {

using kir::BufferRef;
using kir::Expr;
using kir::Instruction;
using kir::Opcode;
using sanrt::AccessKind;
using sanrt::Site;
using sanrt::ThreadId;
using sanrt::Value;

class Executor::Impl {
 public:
  Impl(const LoweredProgram& p, const kir::GridConfig& g, const RunOptions& o)
      : p_(p),
        g_(g),
        o_(o),
        mem_(o.memory, o.detector, o.abort_on_report),
        local_elem_(p.kernel.locals.size(), kir::ScalarType::kI32),
        promoted_ordinal_(p.kernel.locals.size(), -1) {
    int max_id = -1;
    for (const PhaseLoop& loop : p.phases) {
      for (const kir::BasicBlock& bb : loop.blocks) {
        for (const Instruction& in : bb.instrs) {
          max_id = std::max(max_id, in.id);
          if (in.opcode == Opcode::kAlloca || in.opcode == Opcode::kMalloc) {
            local_elem_[in.dst] = in.elem;
          }
        }
      }
    }
    covered_.assign(max_id + 2, false);
    for (size_t i = 0; i < p.promoted.size(); ++i) {
      promoted_ordinal_[p.promoted[i]] = static_cast<int>(i);
    }
  }

  absl::Status Start(const sanrt::KernelInputs& in) {
    if (absl::Status s = sanrt::ValidateGrid(g_, o_.memory); !s.ok()) {
      return s;
    }
    mem_.set_trace(o_.record_trace);
    auto params = sanrt::BindParams(p_.kernel, in, mem_);
    if (!params.ok()) return params.status();
    params_ = *std::move(params);
    started_ = true;
    return absl::OkStatus();
  }

  absl::Status RunBlock(int64_t block, const std::vector<int64_t>& threads) {
    if (!started_) return absl::FailedPreconditionError("executor not started");
    if (block < 0 || block >= g_.blocks) {
      return absl::InvalidArgumentError(
          fmt::format("block {} outside the grid of {}", block, g_.blocks));
    }
    if (!threads.empty() && !p_.tid_exposed) {
      return absl::InvalidArgumentError(
          "thread ids given for a program that loops over tid");
    }
    for (int64_t t : threads) {
      if (t < 0 || t >= g_.threads) {
        return absl::InvalidArgumentError(
            fmt::format("thread {} outside the block of {}", t, g_.threads));
      }
    }
    if (mem_.aborted()) return absl::OkStatus();
    if (!p_.tid_exposed) {
      std::vector<int64_t> all(g_.threads);
      for (int64_t t = 0; t < g_.threads; ++t) all[t] = t;
      return RunTask(block, all);
    }
    const int64_t n =
        threads.empty() ? g_.threads : static_cast<int64_t>(threads.size());
    for (int64_t i = 0; i < n && !mem_.aborted(); ++i) {
      const int64_t t = threads.empty() ? i : threads[i];
      if (absl::Status s = RunTask(block, {t}); !s.ok()) return s;
    }
    return absl::OkStatus();
  }

  void set_piece_hook(std::function<void(int)> hook) {
    hook_ = std::move(hook);
  }

  bool aborted() const { return mem_.aborted(); }
  int64_t report_count() const {
    return static_cast<int64_t>(mem_.reports().size()) + mem_.dropped_reports();
  }
  int64_t steps() const { return steps_; }
  const std::vector<sanrt::BugReport>& reports() const {
    return mem_.reports();
  }
  bool covered(int id) const {
    return id >= 0 && id < static_cast<int>(covered_.size()) && covered_[id];
  }

  RunResult Finish() {
    RunResult r;
    r.memory = mem_.HeapSnapshot();
    for (size_t i = 0; i < p_.kernel.params.size(); ++i) {
      r.buffers.push_back(p_.kernel.params[i].is_buffer() && started_
                              ? mem_.ReadBytes(params_[i].i)
                              : std::vector<uint8_t>{});
    }
    r.trace = mem_.trace();
    r.reports = mem_.reports();
    r.dropped_reports = mem_.dropped_reports();
    r.steps = steps_;
    r.aborted = mem_.aborted();
    return r;
  }

 private:
  struct Thread {
    ThreadId id;
    int phase = 0;
    bool done = false;
    int64_t steps = 0;
  };

  // One task: a block, run for the given threads.
  absl::Status RunTask(int64_t block, const std::vector<int64_t>& tids) {
    auto shared = sanrt::AllocateShared(p_.kernel, params_, g_, block, mem_);
    if (!shared.ok()) return shared.status();
    shared_ = *std::move(shared);

    const Site task_site{ThreadId{block, -1}, -1, true};
    promoted_alloc_.clear();
    promoted_vals_.assign(p_.promoted.size(),
                          std::vector<Value>(g_.threads, Value::Int(0)));
    for (size_t i = 0; i < p_.promoted.size(); ++i) {
      sanrt::AllocRequest req;
      req.count = g_.threads;
      req.elem = kir::ScalarType::kI64;
      req.space = kir::MemorySpace::kLocalStatic;
      req.allocator = kir::Allocator::kStack;
      req.region = sanrt::Region::kCompiler;
      req.compiler_induced = true;
      auto id = mem_.Allocate(req, task_site);
      if (!id.ok()) return id.status();
      promoted_alloc_.push_back(*id);
    }

    std::vector<Thread> threads(tids.size());
    for (size_t i = 0; i < tids.size(); ++i) {
      threads[i].id = ThreadId{block, tids[i]};
    }
    locals_.assign(p_.kernel.locals.size(), Value::Int(0));
    bool any = true;
    while (any && !mem_.aborted()) {
      any = false;
      for (Thread& t : threads) {
        if (t.done) continue;
        any = true;
        if (absl::Status s = RunPhase(t); !s.ok()) return s;
        if (mem_.aborted()) break;
      }
    }
    mem_.EndBlock();
    return absl::OkStatus();
  }

  Value ReadPromoted(int slot, const Thread& t, int instr_id) {
    const int ord = promoted_ordinal_[slot];
    mem_.CheckSlot(promoted_alloc_[ord], t.id.thread, AccessKind::kRead,
                   Site{t.id, instr_id, true});
    return promoted_vals_[ord][t.id.thread];
  }

  void WriteDst(const Instruction& in, const Thread& t, Value v) {
    if (!in.dst_promoted) {
      locals_[in.dst] = v;
      return;
    }
    const int ord = promoted_ordinal_[in.dst];
    mem_.CheckSlot(promoted_alloc_[ord], t.id.thread, AccessKind::kWrite,
                   Site{t.id, in.id, true});
    promoted_vals_[ord][t.id.thread] = v;
  }

  Value Eval(const Expr& e, const Thread& t, int instr_id) {
    switch (e.kind) {
      case Expr::Kind::kIntLit:
        return Value::Int(e.int_value);
      case Expr::Kind::kFloatLit:
        return Value::Float(e.float_value);
      case Expr::Kind::kLocal:
        return locals_[e.slot];
      case Expr::Kind::kPromoted:
        return ReadPromoted(e.slot, t, instr_id);
      case Expr::Kind::kParam:
        return params_[e.slot];
      case Expr::Kind::kIntrinsic:
        switch (e.intrinsic) {
          case kir::Intrinsic::kThreadIdx:
            return Value::Int(t.id.thread);
          case kir::Intrinsic::kBlockIdx:
            return Value::Int(t.id.block);
          case kir::Intrinsic::kBlockDim:
            return Value::Int(g_.threads);
          case kir::Intrinsic::kGridDim:
            return Value::Int(g_.blocks);
        }
        break;
      case Expr::Kind::kBinary: {
        const Value l = Eval(*e.lhs, t, instr_id);
        const Value r = Eval(*e.rhs, t, instr_id);
        return sanrt::EvalBinary(e.op, l, r);
      }
    }
    return Value::Int(0);
  }

  int64_t AllocOf(const BufferRef& ref, const Thread& t, int instr_id) {
    switch (ref.kind) {
      case BufferRef::Kind::kParam:
        return params_[ref.index].i;
      case BufferRef::Kind::kShared:
        return shared_[ref.index];
      case BufferRef::Kind::kLocal:
        return locals_[ref.index].i;
      case BufferRef::Kind::kPromoted:
        return ReadPromoted(ref.index, t, instr_id).i;
    }
    return -1;
  }

  kir::ScalarType ElemOf(const BufferRef& ref) const {
    if (ref.kind == BufferRef::Kind::kLocal ||
        ref.kind == BufferRef::Kind::kPromoted) {
      return local_elem_[ref.index];
    }
    return p_.kernel.BufferElem(ref);
  }

  void Enter(const PhaseLoop& loop, int b) {
    if (hook_) hook_(loop.pieces[b]);
  }

  absl::Status RunPhase(Thread& t) {
    const PhaseLoop& loop = p_.phases[t.phase];
    // Plain locals do not survive a phase boundary.
    std::fill(locals_.begin(), locals_.end(), Value::Int(0));
    int b = 0;
    size_t ip = 0;
    Enter(loop, b);
    while (true) {
      const Instruction& in = loop.blocks[b].instrs[ip++];
      if (++t.steps > o_.step_budget) {
        return absl::DeadlineExceededError(fmt::format(
            "NonTermination: thread (block {}, thread {}) exceeded the step "
            "budget of {}",
            t.id.block, t.id.thread, o_.step_budget));
      }
      ++steps_;
      const Site site{t.id, in.id, false};
      switch (in.opcode) {
        case Opcode::kArith: {
          const Value l = Eval(*in.a, t, in.id);
          const Value r = Eval(*in.b, t, in.id);
          WriteDst(in, t, sanrt::EvalBinary(in.binop, l, r));
          break;
        }
        case Opcode::kMath:
          WriteDst(in, t, sanrt::EvalMath(in.math, Eval(*in.a, t, in.id)));
          break;
        case Opcode::kLoad: {
          const int64_t alloc = AllocOf(in.buffer, t, in.id);
          const int64_t index = Eval(*in.a, t, in.id).AsInt();
          covered_[in.id] = true;
          const Value v =
              mem_.Load(alloc, in.buffer.field, index, ElemOf(in.buffer), site);
          if (mem_.aborted()) return absl::OkStatus();
          WriteDst(in, t, v);
          break;
        }
        case Opcode::kStore: {
          const int64_t alloc = AllocOf(in.buffer, t, in.id);
          const int64_t index = Eval(*in.a, t, in.id).AsInt();
          const Value v = Eval(*in.b, t, in.id);
          covered_[in.id] = true;
          mem_.Store(alloc, in.buffer.field, index, ElemOf(in.buffer), v, site);
          break;
        }
        case Opcode::kAlloca:
        case Opcode::kMalloc: {
          sanrt::AllocRequest req;
          req.count = Eval(*in.a, t, in.id).AsInt();
          req.elem = in.elem;
          req.fields = in.fields;
          req.allocator = in.allocator;
          if (in.opcode == Opcode::kAlloca) {
            req.region = sanrt::Region::kStack;
            req.thread_slot = t.id.thread;
            req.space = in.a->kind == Expr::Kind::kIntLit
                            ? kir::MemorySpace::kLocalStatic
                            : kir::MemorySpace::kLocalDynamic;
          } else {
            req.region = sanrt::Region::kHeap;
            req.space = in.allocator == kir::Allocator::kHostApi
                            ? kir::MemorySpace::kGlobalHost
                            : kir::MemorySpace::kGlobalDevice;
          }
          auto id = mem_.Allocate(req, site);
          if (!id.ok()) return id.status();
          WriteDst(in, t, Value::Ptr(*id));
          break;
        }
        case Opcode::kFree:
          mem_.Free(AllocOf(in.buffer, t, in.id), in.buffer.field, in.allocator,
                    site);
          break;
        case Opcode::kBarrier:
          return absl::InternalError("barrier left in a lowered phase");
        case Opcode::kScopeBegin:
          mem_.PushScope(t.id.thread);
          break;
        case Opcode::kScopeEnd:
          mem_.PopScope(t.id.thread);
          break;
        case Opcode::kBranch:
          b = Eval(*in.a, t, in.id).Truthy() ? in.target : in.target_else;
          ip = 0;
          Enter(loop, b);
          break;
        case Opcode::kJump:
          b = in.target;
          ip = 0;
          Enter(loop, b);
          break;
        case Opcode::kReturn:
          if (in.next_phase >= 0) {
            t.phase = in.next_phase;
          } else {
            t.done = true;
          }
          return absl::OkStatus();
      }
      if (mem_.aborted()) return absl::OkStatus();
    }
  }

  const LoweredProgram& p_;
  const kir::GridConfig g_;
  const RunOptions o_;
  sanrt::Memory mem_;
  std::vector<kir::ScalarType> local_elem_;
  std::vector<int> promoted_ordinal_;
  std::vector<bool> covered_;
  std::function<void(int)> hook_;
  bool started_ = false;
  int64_t steps_ = 0;

  std::vector<Value> params_;
  std::vector<int64_t> shared_;
  std::vector<int64_t> promoted_alloc_;
  std::vector<std::vector<Value>> promoted_vals_;
  std::vector<Value> locals_;
};

Executor::Executor(const LoweredProgram& p, const kir::GridConfig& g,
                   const RunOptions& o)
    : impl_(std::make_unique<Impl>(p, g, o)) {}

Executor::~Executor() = default;

absl::Status Executor::Start(const sanrt::KernelInputs& in) {
  return impl_->Start(in);
}

absl::Status Executor::RunBlock(int64_t block,
                                const std::vector<int64_t>& threads) {
  return impl_->RunBlock(block, threads);
}

void Executor::set_piece_hook(std::function<void(int)> hook) {
  impl_->set_piece_hook(std::move(hook));
}

bool Executor::aborted() const { return impl_->aborted(); }
int64_t Executor::report_count() const { return impl_->report_count(); }
int64_t Executor::steps() const { return impl_->steps(); }
const std::vector<sanrt::BugReport>& Executor::reports() const {
  return impl_->reports();
}

bool Executor::covered(int instr_id) const { return impl_->covered(instr_id); }

RunResult Executor::Finish() { return impl_->Finish(); }

absl::StatusOr<RunResult> RunLowered(const LoweredProgram& p,
                                     const kir::GridConfig& g,
                                     const sanrt::KernelInputs& in,
                                     const Schedule& schedule,
                                     const RunOptions& o) {
  Executor ex(p, g, o);
  if (absl::Status s = ex.Start(in); !s.ok()) return s;
  if (schedule.blocks.empty()) {
    for (int64_t b = 0; b < g.blocks && !ex.aborted(); ++b) {
      if (absl::Status s = ex.RunBlock(b, schedule.threads); !s.ok()) return s;
    }
  } else {
    for (int64_t b : schedule.blocks) {
      if (ex.aborted()) break;
      if (absl::Status s = ex.RunBlock(b, schedule.threads); !s.ok()) return s;
    }
  }
  return ex.Finish();
}

}  // namespace kfuzz::pact
