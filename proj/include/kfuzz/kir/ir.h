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

// The kernel IR: a small SPMD language with labeled basic blocks.
//
// A Kernel is an immutable value once it leaves the parser or a transform.
// Locals, params and shared declarations are referenced by slot index; the
// name tables on Kernel exist for printing and diagnostics.

#ifndef KFUZZ_KIR_IR_H_
#define KFUZZ_KIR_IR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kfuzz::kir {

enum class ScalarType : uint8_t { kI32, kI64, kF32, kF64 };

enum class MemorySpace : uint8_t {
  kGlobalHost,
  kGlobalDevice,
  kLocalStatic,
  kLocalDynamic,
  kSharedStatic,
  kSharedDynamic,
};

enum class Intrinsic : uint8_t { kThreadIdx, kBlockIdx, kBlockDim, kGridDim };

enum class BinaryOp : uint8_t {
  kAdd,
  kSub,
  kMul,
  kDiv,
  kRem,
  kAnd,
  kOr,
  kXor,
  kShl,
  kShr,
  kMin,
  kMax,
  kEq,
  kNe,
  kLt,
  kLe,
  kGt,
  kGe,
};

enum class MathFn : uint8_t { kSqrt, kExp, kLog, kSin, kCos };

// Which runtime API owns an allocation. Kernel-side `malloc`/`free` use the
// device heap; `malloc.host`/`free.host` model emulated host API calls.
enum class Allocator : uint8_t { kHostApi, kDeviceMalloc, kStack };

int ScalarSize(ScalarType t);
bool IsFloat(ScalarType t);

std::string_view ToString(ScalarType t);
std::string_view ToString(MemorySpace s);
std::string_view ToString(Intrinsic i);
std::string_view ToString(BinaryOp op);
std::string_view ToString(MathFn fn);
std::string_view ToString(Allocator a);

std::optional<ScalarType> ScalarTypeFromString(std::string_view s);
std::optional<MemorySpace> MemorySpaceFromString(std::string_view s);
std::optional<BinaryOp> BinaryOpFromString(std::string_view s);
std::optional<MathFn> MathFnFromString(std::string_view s);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind : uint8_t {
    kIntLit,
    kFloatLit,
    kLocal,
    kParam,
    kIntrinsic,
    kBinary,
    // Only appears in lowered programs: `name[tid]` read of a promoted local.
    kPromoted,
  };

  Kind kind = Kind::kIntLit;
  int64_t int_value = 0;
  double float_value = 0.0;
  int slot = -1;  // local, param or promoted slot
  Intrinsic intrinsic = Intrinsic::kThreadIdx;
  BinaryOp op = BinaryOp::kAdd;
  ExprPtr lhs;
  ExprPtr rhs;

  static ExprPtr Int(int64_t v);
  static ExprPtr Float(double v);
  static ExprPtr Local(int slot);
  static ExprPtr Param(int slot);
  static ExprPtr Intr(Intrinsic i);
  static ExprPtr Binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
  static ExprPtr Promoted(int slot);
};

bool ExprEqual(const Expr& a, const Expr& b);
bool ExprEqual(const ExprPtr& a, const ExprPtr& b);

// Calls `fn(slot)` for every local referenced by the expression.
template <typename Fn>
void ForEachLocal(const Expr& e, Fn&& fn) {
  switch (e.kind) {
    case Expr::Kind::kLocal:
    case Expr::Kind::kPromoted:
      fn(e.slot);
      return;
    case Expr::Kind::kBinary:
      ForEachLocal(*e.lhs, fn);
      ForEachLocal(*e.rhs, fn);
      return;
    default:
      return;
  }
}

bool MentionsIntrinsic(const Expr& e, Intrinsic i);

// A memory operand: a buffer param, a shared declaration or a local holding
// a pointer, optionally narrowed to one declared sub-object.
struct BufferRef {
  // kPromoted only appears in lowered programs: a pointer read from the
  // promoted array of local `index`.
  enum class Kind : uint8_t { kParam, kShared, kLocal, kPromoted };
  Kind kind = Kind::kParam;
  int index = -1;
  int field = -1;  // -1: whole allocation

  friend bool operator==(const BufferRef&, const BufferRef&) = default;
};

enum class Opcode : uint8_t {
  kArith,
  kMath,
  kLoad,
  kStore,
  kAlloca,
  kMalloc,
  kFree,
  kBarrier,
  kScopeBegin,
  kScopeEnd,
  kBranch,
  kJump,
  kReturn,
};

std::string_view ToString(Opcode op);

struct Instruction {
  Opcode opcode = Opcode::kReturn;
  int id = -1;   // stable across transforms; used by traces and reports
  int dst = -1;  // defined local slot
  BinaryOp binop = BinaryOp::kAdd;
  MathFn math = MathFn::kSqrt;
  // kArith: lhs/rhs. kMath: src in `a`. kLoad/kStore: index in `a`, stored
  // value in `b`. kAlloca/kMalloc: element count in `a`. kBranch: condition.
  ExprPtr a;
  ExprPtr b;
  BufferRef buffer;
  ScalarType elem = ScalarType::kI32;
  Allocator allocator = Allocator::kDeviceMalloc;
  std::vector<int64_t> fields;  // kAlloca sub-object element counts
  int target = -1;              // kJump, kBranch (then)
  int target_else = -1;         // kBranch
  // Lowered programs only: the result is stored to the promoted array.
  bool dst_promoted = false;
  // Lowered programs only: on a kReturn, the phase this thread continues
  // with after the barrier it replaces.
  int next_phase = -1;

  bool IsTerminator() const {
    return opcode == Opcode::kBranch || opcode == Opcode::kJump ||
           opcode == Opcode::kReturn;
  }
  bool IsMemoryAccess() const {
    return opcode == Opcode::kLoad || opcode == Opcode::kStore;
  }
};

bool InstructionEqual(const Instruction& a, const Instruction& b);

struct BasicBlock {
  std::string label;
  std::vector<Instruction> instrs;
};

struct Param {
  enum class Kind : uint8_t { kBuffer, kScalar };
  std::string name;
  Kind kind = Kind::kScalar;
  ScalarType elem = ScalarType::kI32;
  MemorySpace space = MemorySpace::kGlobalHost;  // buffers only
  std::vector<int64_t> fields;                   // buffers only

  bool is_buffer() const { return kind == Kind::kBuffer; }
  friend bool operator==(const Param&, const Param&) = default;
};

struct SharedDecl {
  std::string name;
  bool dynamic = false;
  ExprPtr count;  // element count; null for dynamic declarations
  ScalarType elem = ScalarType::kF32;
  std::vector<int64_t> fields;
};

struct GridConfig {
  int64_t blocks = 1;   // B
  int64_t threads = 1;  // T
  int64_t dyn_shared_bytes = 0;

  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct Kernel {
  std::string name;
  std::vector<Param> params;
  std::vector<SharedDecl> shared;
  std::vector<BasicBlock> blocks;  // blocks[0] is the entry
  std::vector<std::string> locals;

  int entry() const { return 0; }

  int FindBlock(std::string_view label) const;
  int FindParam(std::string_view name) const;
  int FindShared(std::string_view name) const;
  int FindLocal(std::string_view name) const;

  // Instruction lookup by id; null when absent.
  const Instruction* FindInstruction(int id) const;
  int MaxInstructionId() const;

  // Element type and declared sub-object list behind a buffer operand, for
  // params and shared declarations. Locals resolve through their alloca or
  // malloc definition.
  ScalarType BufferElem(const BufferRef& ref) const;
  std::string BufferName(const BufferRef& ref) const;
};

bool KernelEqual(const Kernel& a, const Kernel& b);

// Number of load/store instructions.
int CountMemoryAccesses(const Kernel& k);

// Number of non-terminator instructions.
int CountInstructions(const Kernel& k);

// Ids of all load/store instructions, ascending.
std::vector<int> MemoryAccessIds(const Kernel& k);

}  // namespace kfuzz::kir

#endif  // KFUZZ_KIR_IR_H_
