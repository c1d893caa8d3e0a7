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

#include "kfuzz/kir/ir.h"

#include <algorithm>
#include <array>
#include <utility>

namespace kfuzz::kir {
namespace {

template <typename E, size_t N>
std::optional<E> Lookup(
    const std::array<std::pair<std::string_view, E>, N>& table,
    std::string_view s) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename E, size_t N>
std::string_view Name(
    const std::array<std::pair<std::string_view, E>, N>& table, E value) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, ScalarType>, 4> kScalarTypes{{
    {"i32", ScalarType::kI32},
    {"i64", ScalarType::kI64},
    {"f32", ScalarType::kF32},
    {"f64", ScalarType::kF64},
}};

constexpr std::array<std::pair<std::string_view, MemorySpace>, 6> kSpaces{{
    {"global_host", MemorySpace::kGlobalHost},
    {"global_device", MemorySpace::kGlobalDevice},
    {"local_static", MemorySpace::kLocalStatic},
    {"local_dynamic", MemorySpace::kLocalDynamic},
    {"shared_static", MemorySpace::kSharedStatic},
    {"shared_dynamic", MemorySpace::kSharedDynamic},
}};

constexpr std::array<std::pair<std::string_view, BinaryOp>, 18> kBinaryOps{{
    {"add", BinaryOp::kAdd},
    {"sub", BinaryOp::kSub},
    {"mul", BinaryOp::kMul},
    {"div", BinaryOp::kDiv},
    {"rem", BinaryOp::kRem},
    {"and", BinaryOp::kAnd},
    {"or", BinaryOp::kOr},
    {"xor", BinaryOp::kXor},
    {"shl", BinaryOp::kShl},
    {"shr", BinaryOp::kShr},
    {"min", BinaryOp::kMin},
    {"max", BinaryOp::kMax},
    {"eq", BinaryOp::kEq},
    {"ne", BinaryOp::kNe},
    {"lt", BinaryOp::kLt},
    {"le", BinaryOp::kLe},
    {"gt", BinaryOp::kGt},
    {"ge", BinaryOp::kGe},
}};

constexpr std::array<std::pair<std::string_view, MathFn>, 5> kMathFns{{
    {"sqrt", MathFn::kSqrt},
    {"exp", MathFn::kExp},
    {"log", MathFn::kLog},
    {"sin", MathFn::kSin},
    {"cos", MathFn::kCos},
}};

bool PtrEqual(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return ExprEqual(*a, *b);
}

}  // namespace

int ScalarSize(ScalarType t) {
  return (t == ScalarType::kI32 || t == ScalarType::kF32) ? 4 : 8;
}

bool IsFloat(ScalarType t) {
  return t == ScalarType::kF32 || t == ScalarType::kF64;
}

std::string_view ToString(ScalarType t) { return Name(kScalarTypes, t); }
std::string_view ToString(MemorySpace s) { return Name(kSpaces, s); }
std::string_view ToString(BinaryOp op) { return Name(kBinaryOps, op); }
std::string_view ToString(MathFn fn) { return Name(kMathFns, fn); }

std::string_view ToString(Intrinsic i) {
  switch (i) {
    case Intrinsic::kThreadIdx:
      return "threadIdx.x";
    case Intrinsic::kBlockIdx:
      return "blockIdx.x";
    case Intrinsic::kBlockDim:
      return "blockDim.x";
    case Intrinsic::kGridDim:
      return "gridDim.x";
  }
  return "?";
}

std::string_view ToString(Allocator a) {
  switch (a) {
    case Allocator::kHostApi:
      return "host_api";
    case Allocator::kDeviceMalloc:
      return "device_malloc";
    case Allocator::kStack:
      return "stack";
  }
  return "?";
}

std::string_view ToString(Opcode op) {
  switch (op) {
    case Opcode::kArith:
      return "arith";
    case Opcode::kMath:
      return "math";
    case Opcode::kLoad:
      return "load";
    case Opcode::kStore:
      return "store";
    case Opcode::kAlloca:
      return "alloca";
    case Opcode::kMalloc:
      return "malloc";
    case Opcode::kFree:
      return "free";
    case Opcode::kBarrier:
      return "barrier";
    case Opcode::kScopeBegin:
      return "scope_begin";
    case Opcode::kScopeEnd:
      return "scope_end";
    case Opcode::kBranch:
      return "branch";
    case Opcode::kJump:
      return "jump";
    case Opcode::kReturn:
      return "return";
  }
  return "?";
}

std::optional<ScalarType> ScalarTypeFromString(std::string_view s) {
  return Lookup(kScalarTypes, s);
}
std::optional<MemorySpace> MemorySpaceFromString(std::string_view s) {
  return Lookup(kSpaces, s);
}
std::optional<BinaryOp> BinaryOpFromString(std::string_view s) {
  return Lookup(kBinaryOps, s);
}
std::optional<MathFn> MathFnFromString(std::string_view s) {
  return Lookup(kMathFns, s);
}

ExprPtr Expr::Int(int64_t v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kIntLit;
  e->int_value = v;
  return e;
}

ExprPtr Expr::Float(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kFloatLit;
  e->float_value = v;
  return e;
}

ExprPtr Expr::Local(int slot) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kLocal;
  e->slot = slot;
  return e;
}

ExprPtr Expr::Param(int slot) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kParam;
  e->slot = slot;
  return e;
}

ExprPtr Expr::Intr(Intrinsic i) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kIntrinsic;
  e->intrinsic = i;
  return e;
}

ExprPtr Expr::Binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kBinary;
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

ExprPtr Expr::Promoted(int slot) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kPromoted;
  e->slot = slot;
  return e;
}

bool ExprEqual(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::kIntLit:
      return a.int_value == b.int_value;
    case Expr::Kind::kFloatLit:
      return a.float_value == b.float_value;
    case Expr::Kind::kLocal:
    case Expr::Kind::kParam:
    case Expr::Kind::kPromoted:
      return a.slot == b.slot;
    case Expr::Kind::kIntrinsic:
      return a.intrinsic == b.intrinsic;
    case Expr::Kind::kBinary:
      return a.op == b.op && ExprEqual(*a.lhs, *b.lhs) &&
             ExprEqual(*a.rhs, *b.rhs);
  }
  return false;
}

bool ExprEqual(const ExprPtr& a, const ExprPtr& b) { return PtrEqual(a, b); }

bool MentionsIntrinsic(const Expr& e, Intrinsic i) {
  if (e.kind == Expr::Kind::kIntrinsic) return e.intrinsic == i;
  if (e.kind == Expr::Kind::kBinary) {
    return MentionsIntrinsic(*e.lhs, i) || MentionsIntrinsic(*e.rhs, i);
  }
  return false;
}

bool InstructionEqual(const Instruction& a, const Instruction& b) {
  return a.opcode == b.opcode && a.id == b.id && a.dst == b.dst &&
         a.binop == b.binop && a.math == b.math && PtrEqual(a.a, b.a) &&
         PtrEqual(a.b, b.b) && a.buffer == b.buffer && a.elem == b.elem &&
         a.allocator == b.allocator && a.fields == b.fields &&
         a.target == b.target && a.target_else == b.target_else &&
         a.dst_promoted == b.dst_promoted && a.next_phase == b.next_phase;
}

int Kernel::FindBlock(std::string_view label) const {
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].label == label) return static_cast<int>(i);
  }
  return -1;
}

int Kernel::FindParam(std::string_view n) const {
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == n) return static_cast<int>(i);
  }
  return -1;
}

int Kernel::FindShared(std::string_view n) const {
  for (size_t i = 0; i < shared.size(); ++i) {
    if (shared[i].name == n) return static_cast<int>(i);
  }
  return -1;
}

int Kernel::FindLocal(std::string_view n) const {
  for (size_t i = 0; i < locals.size(); ++i) {
    if (locals[i] == n) return static_cast<int>(i);
  }
  return -1;
}

const Instruction* Kernel::FindInstruction(int id) const {
  for (const BasicBlock& bb : blocks) {
    for (const Instruction& inst : bb.instrs) {
      if (inst.id == id) return &inst;
    }
  }
  return nullptr;
}

int Kernel::MaxInstructionId() const {
  int max_id = -1;
  for (const BasicBlock& bb : blocks) {
    for (const Instruction& inst : bb.instrs)
      max_id = std::max(max_id, inst.id);
  }
  return max_id;
}

ScalarType Kernel::BufferElem(const BufferRef& ref) const {
  switch (ref.kind) {
    case BufferRef::Kind::kParam:
      return params[ref.index].elem;
    case BufferRef::Kind::kShared:
      return shared[ref.index].elem;
    case BufferRef::Kind::kLocal:
    case BufferRef::Kind::kPromoted:
      for (const BasicBlock& bb : blocks) {
        for (const Instruction& inst : bb.instrs) {
          if ((inst.opcode == Opcode::kAlloca ||
               inst.opcode == Opcode::kMalloc) &&
              inst.dst == ref.index) {
            return inst.elem;
          }
        }
      }
      break;
  }
  return ScalarType::kI32;
}

std::string Kernel::BufferName(const BufferRef& ref) const {
  switch (ref.kind) {
    case BufferRef::Kind::kParam:
      return params[ref.index].name;
    case BufferRef::Kind::kShared:
      return shared[ref.index].name;
    case BufferRef::Kind::kLocal:
      return locals[ref.index];
    case BufferRef::Kind::kPromoted:
      return locals[ref.index] + "[tid]";
  }
  return "?";
}

bool KernelEqual(const Kernel& a, const Kernel& b) {
  if (a.name != b.name || a.params != b.params || a.locals != b.locals ||
      a.shared.size() != b.shared.size() ||
      a.blocks.size() != b.blocks.size()) {
    return false;
  }
  for (size_t i = 0; i < a.shared.size(); ++i) {
    const SharedDecl& x = a.shared[i];
    const SharedDecl& y = b.shared[i];
    if (x.name != y.name || x.dynamic != y.dynamic || x.elem != y.elem ||
        x.fields != y.fields || !PtrEqual(x.count, y.count)) {
      return false;
    }
  }
  for (size_t i = 0; i < a.blocks.size(); ++i) {
    const BasicBlock& x = a.blocks[i];
    const BasicBlock& y = b.blocks[i];
    if (x.label != y.label || x.instrs.size() != y.instrs.size()) return false;
    for (size_t j = 0; j < x.instrs.size(); ++j) {
      if (!InstructionEqual(x.instrs[j], y.instrs[j])) return false;
    }
  }
  return true;
}

int CountMemoryAccesses(const Kernel& k) {
  int n = 0;
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) n += inst.IsMemoryAccess();
  }
  return n;
}

int CountInstructions(const Kernel& k) {
  int n = 0;
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) n += !inst.IsTerminator();
  }
  return n;
}

std::vector<int> MemoryAccessIds(const Kernel& k) {
  std::vector<int> ids;
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) {
      if (inst.IsMemoryAccess()) ids.push_back(inst.id);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace kfuzz::kir
