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

#include "kfuzz/refsim/refsim.h"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <random>

namespace kfuzz::refsim {
namespace {

using kir::BufferRef;
using kir::Expr;
using kir::Instruction;
using kir::Opcode;
using sanrt::AccessKind;
using sanrt::Allocation;
using sanrt::AllocState;
using sanrt::BugClass;
using sanrt::ThreadId;
using sanrt::Value;

struct Thread {
  ThreadId id;
  int block = 0;
  size_t ip = 0;
  bool done = false;
  int64_t steps = 0;
  std::vector<Value> locals;
};

class Interpreter {
 public:
  Interpreter(const kir::Kernel& k, const kir::GridConfig& g, const Options& o)
      : k_(k),
        g_(g),
        o_(o),
        mem_(o.memory, sanrt::DetectorMode::kNone),
        local_elem_(k.locals.size(), kir::ScalarType::kI32) {
    for (const kir::BasicBlock& bb : k.blocks) {
      for (const Instruction& in : bb.instrs) {
        if (in.opcode == Opcode::kAlloca || in.opcode == Opcode::kMalloc) {
          local_elem_[in.dst] = in.elem;
        }
      }
    }
  }

  absl::StatusOr<Result> Run(const sanrt::KernelInputs& in) {
    if (absl::Status s = sanrt::ValidateGrid(g_, o_.memory); !s.ok()) {
      return s;
    }
    mem_.set_trace(o_.record_trace);
    auto params = sanrt::BindParams(k_, in, mem_);
    if (!params.ok()) return params.status();
    params_ = *std::move(params);

    std::mt19937_64 rng(o_.shuffle_seed.value_or(0));
    std::vector<int64_t> order(g_.threads);
    for (int64_t b = 0; b < g_.blocks; ++b) {
      auto shared = sanrt::AllocateShared(k_, params_, g_, b, mem_);
      if (!shared.ok()) return shared.status();
      shared_ = *std::move(shared);

      std::vector<Thread> threads(g_.threads);
      for (int64_t t = 0; t < g_.threads; ++t) {
        threads[t].id = ThreadId{b, t};
        threads[t].locals.assign(k_.locals.size(), Value::Int(0));
      }
      while (true) {
        std::iota(order.begin(), order.end(), 0);
        if (o_.shuffle_seed.has_value()) {
          std::shuffle(order.begin(), order.end(), rng);
        }
        bool any = false;
        for (int64_t t : order) {
          if (threads[t].done) continue;
          any = true;
          if (absl::Status s = RunPhase(threads[t]); !s.ok()) return s;
        }
        if (!any) break;
      }
      mem_.EndBlock();
    }

    Result r;
    r.memory = mem_.HeapSnapshot();
    for (size_t i = 0; i < k_.params.size(); ++i) {
      r.buffers.push_back(k_.params[i].is_buffer()
                              ? mem_.ReadBytes(params_[i].i)
                              : std::vector<uint8_t>{});
    }
    r.trace = mem_.trace();
    r.bugs = std::move(bugs_);
    r.steps = steps_;
    return r;
  }

 private:
  Value Eval(const Expr& e, const Thread& t) const {
    switch (e.kind) {
      case Expr::Kind::kIntLit:
        return Value::Int(e.int_value);
      case Expr::Kind::kFloatLit:
        return Value::Float(e.float_value);
      case Expr::Kind::kLocal:
        return t.locals[e.slot];
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
      case Expr::Kind::kBinary:
        return sanrt::EvalBinary(e.op, Eval(*e.lhs, t), Eval(*e.rhs, t));
      case Expr::Kind::kPromoted:
        break;
    }
    return Value::Int(0);
  }

  int64_t AllocOf(const BufferRef& ref, const Thread& t) const {
    switch (ref.kind) {
      case BufferRef::Kind::kParam:
        return params_[ref.index].i;
      case BufferRef::Kind::kShared:
        return shared_[ref.index];
      case BufferRef::Kind::kLocal:
        return t.locals[ref.index].i;
      case BufferRef::Kind::kPromoted:
        break;
    }
    return -1;
  }

  kir::ScalarType ElemOf(const BufferRef& ref) const {
    if (ref.kind == BufferRef::Kind::kLocal) return local_elem_[ref.index];
    return k_.BufferElem(ref);
  }

  void AddBug(const Thread& t, const Instruction& in, BugClass cls) {
    bugs_.insert(Bug{t.id, in.id, cls});
  }

  // Exact classification of a load or store against the allocation the
  // operand names.
  void Classify(const Thread& t, const Instruction& in, int64_t alloc,
                int64_t index, int64_t elem_size) {
    const Allocation& a = mem_.allocation(alloc);
    if (a.state == AllocState::kFreed) return AddBug(t, in, BugClass::kUAF);
    if (a.state == AllocState::kOutOfScope) {
      return AddBug(t, in, BugClass::kUAS);
    }
    __int128 lo = 0;
    __int128 hi = a.size;
    const int field = in.buffer.field;
    const bool has_field =
        field >= 0 && field + 1 < static_cast<int>(a.field_offsets.size());
    const __int128 start = has_field ? a.field_offsets[field] : 0;
    if (has_field) {
      lo = a.field_offsets[field];
      hi = a.field_offsets[field + 1];
    }
    const __int128 first = start + static_cast<__int128>(index) * elem_size;
    const __int128 last = first + elem_size;
    if (first >= lo && last <= hi) return;
    const bool overflow = first >= lo && first - hi < o_.memory.redzone;
    AddBug(t, in, overflow ? BugClass::kBO : BugClass::kOobRw);
  }

  void ClassifyFree(const Thread& t, const Instruction& in, int64_t alloc) {
    const Allocation& a = mem_.allocation(alloc);
    if (a.state == AllocState::kFreed) return AddBug(t, in, BugClass::kDF);
    const int field = in.buffer.field;
    const bool interior =
        field > 0 && field + 1 < static_cast<int>(a.field_offsets.size()) &&
        a.field_offsets[field] != 0;
    if (a.state != AllocState::kLive || a.region != sanrt::Region::kHeap ||
        interior || a.allocator != in.allocator) {
      AddBug(t, in, BugClass::kIF);
    }
  }

  absl::Status RunPhase(Thread& t) {
    while (true) {
      const Instruction& in = k_.blocks[t.block].instrs[t.ip];
      if (++t.steps > o_.step_budget) {
        return absl::DeadlineExceededError(fmt::format(
            "NonTermination: thread (block {}, thread {}) exceeded the step "
            "budget of {}",
            t.id.block, t.id.thread, o_.step_budget));
      }
      ++steps_;
      const sanrt::Site site{t.id, in.id, false};
      ++t.ip;
      switch (in.opcode) {
        case Opcode::kArith:
          t.locals[in.dst] =
              sanrt::EvalBinary(in.binop, Eval(*in.a, t), Eval(*in.b, t));
          break;
        case Opcode::kMath:
          t.locals[in.dst] = sanrt::EvalMath(in.math, Eval(*in.a, t));
          break;
        case Opcode::kLoad: {
          const int64_t alloc = AllocOf(in.buffer, t);
          const kir::ScalarType elem = ElemOf(in.buffer);
          const int64_t index = Eval(*in.a, t).AsInt();
          Classify(t, in, alloc, index, kir::ScalarSize(elem));
          t.locals[in.dst] =
              mem_.Load(alloc, in.buffer.field, index, elem, site);
          break;
        }
        case Opcode::kStore: {
          const int64_t alloc = AllocOf(in.buffer, t);
          const kir::ScalarType elem = ElemOf(in.buffer);
          const int64_t index = Eval(*in.a, t).AsInt();
          Classify(t, in, alloc, index, kir::ScalarSize(elem));
          mem_.Store(alloc, in.buffer.field, index, elem, Eval(*in.b, t), site);
          break;
        }
        case Opcode::kAlloca:
        case Opcode::kMalloc: {
          sanrt::AllocRequest req;
          req.count = Eval(*in.a, t).AsInt();
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
          t.locals[in.dst] = Value::Ptr(*id);
          break;
        }
        case Opcode::kFree: {
          const int64_t alloc = AllocOf(in.buffer, t);
          ClassifyFree(t, in, alloc);
          mem_.Free(alloc, in.buffer.field, in.allocator, site);
          break;
        }
        case Opcode::kBarrier:
          return absl::OkStatus();
        case Opcode::kScopeBegin:
          mem_.PushScope(t.id.thread);
          break;
        case Opcode::kScopeEnd:
          mem_.PopScope(t.id.thread);
          break;
        case Opcode::kBranch:
          t.block = Eval(*in.a, t).Truthy() ? in.target : in.target_else;
          t.ip = 0;
          break;
        case Opcode::kJump:
          t.block = in.target;
          t.ip = 0;
          break;
        case Opcode::kReturn:
          t.done = true;
          return absl::OkStatus();
      }
    }
  }

  const kir::Kernel& k_;
  const kir::GridConfig g_;
  const Options& o_;
  sanrt::Memory mem_;
  std::vector<kir::ScalarType> local_elem_;
  std::vector<Value> params_;
  std::vector<int64_t> shared_;
  BugSet bugs_;
  int64_t steps_ = 0;
};

}  // namespace

absl::StatusOr<Result> RunReference(const kir::Kernel& k,
                                    const kir::GridConfig& g,
                                    const sanrt::KernelInputs& in,
                                    const Options& options) {
  Interpreter interp(k, g, options);
  return interp.Run(in);
}

std::set<ThreadId> BugThreads(const BugSet& bugs) {
  std::set<ThreadId> out;
  for (const Bug& b : bugs) out.insert(b.thread);
  return out;
}

std::string DumpTrace(const std::vector<sanrt::AccessRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    out += sanrt::FormatRecord(r);
    out += '\n';
  }
  return out;
}

}  // namespace kfuzz::refsim
