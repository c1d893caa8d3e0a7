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

#include "kfuzz/kir/printer.h"

#include <charconv>

#include "fmt/format.h"
#include "fmt/ranges.h"

namespace kfuzz::kir {
namespace {

void AppendExpr(const Kernel& k, const Expr& e, bool nested, std::string* out) {
  switch (e.kind) {
    case Expr::Kind::kIntLit:
      *out += std::to_string(e.int_value);
      return;
    case Expr::Kind::kFloatLit:
      *out += FormatFloat(e.float_value);
      return;
    case Expr::Kind::kLocal:
      *out += k.locals[e.slot];
      return;
    case Expr::Kind::kPromoted:
      *out += k.locals[e.slot] + "[tid]";
      return;
    case Expr::Kind::kParam:
      *out += k.params[e.slot].name;
      return;
    case Expr::Kind::kIntrinsic:
      *out += ToString(e.intrinsic);
      return;
    case Expr::Kind::kBinary:
      if (nested) out->push_back('(');
      *out += ToString(e.op);
      out->push_back(' ');
      AppendExpr(k, *e.lhs, true, out);
      out->push_back(' ');
      AppendExpr(k, *e.rhs, true, out);
      if (nested) out->push_back(')');
      return;
  }
}

std::string Nested(const Kernel& k, const Expr& e) {
  std::string out;
  AppendExpr(k, e, true, &out);
  return out;
}

std::string Fields(const std::vector<int64_t>& fields) {
  if (fields.empty()) return "";
  return fmt::format(" {{{}}}", fmt::join(fields, ", "));
}

std::string Buffer(const Kernel& k, const BufferRef& ref) {
  std::string s = k.BufferName(ref);
  if (ref.field >= 0) s += fmt::format(".{}", ref.field);
  return s;
}

std::string Dst(const Kernel& k, const Instruction& inst) {
  return inst.dst_promoted ? k.locals[inst.dst] + "[tid]" : k.locals[inst.dst];
}

}  // namespace

std::string FormatFloat(double v) {
  char buf[64];
  std::to_chars_result r = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eni") == std::string::npos) s += ".0";
  return s;
}

std::string PrintExpr(const Kernel& k, const Expr& e) {
  std::string out;
  AppendExpr(k, e, false, &out);
  return out;
}

std::string PrintInstruction(const Kernel& k, const Instruction& inst) {
  auto label = [&](int b) {
    return b >= 0 && b < static_cast<int>(k.blocks.size()) ? k.blocks[b].label
                                                           : std::string("?");
  };
  switch (inst.opcode) {
    case Opcode::kArith:
      return fmt::format("{} = {} {} {}", Dst(k, inst), ToString(inst.binop),
                         Nested(k, *inst.a), Nested(k, *inst.b));
    case Opcode::kMath:
      return fmt::format("{} = {} {}", Dst(k, inst), ToString(inst.math),
                         Nested(k, *inst.a));
    case Opcode::kLoad:
      return fmt::format("{} = load {}[{}]", Dst(k, inst),
                         Buffer(k, inst.buffer), PrintExpr(k, *inst.a));
    case Opcode::kStore:
      return fmt::format("store {}[{}] {}", Buffer(k, inst.buffer),
                         PrintExpr(k, *inst.a), Nested(k, *inst.b));
    case Opcode::kAlloca:
    case Opcode::kMalloc: {
      std::string_view op = inst.opcode == Opcode::kAlloca ? "alloca"
                            : inst.allocator == Allocator::kHostApi
                                ? "malloc.host"
                                : "malloc";
      return fmt::format("{} = {} {} {}{}", Dst(k, inst), op,
                         ToString(inst.elem), Nested(k, *inst.a),
                         Fields(inst.fields));
    }
    case Opcode::kFree:
      return fmt::format(
          "{} {}", inst.allocator == Allocator::kHostApi ? "free.host" : "free",
          Buffer(k, inst.buffer));
    case Opcode::kBarrier:
      return "barrier";
    case Opcode::kScopeBegin:
      return "scope_begin";
    case Opcode::kScopeEnd:
      return "scope_end";
    case Opcode::kBranch:
      return fmt::format("branch {} {} {}", Nested(k, *inst.a),
                         label(inst.target), label(inst.target_else));
    case Opcode::kJump:
      return "jump " + label(inst.target);
    case Opcode::kReturn:
      if (inst.next_phase >= 0)
        return fmt::format("next_phase {}", inst.next_phase);
      return "return";
  }
  return "?";
}

std::string PrintKernel(const Kernel& k) {
  std::string out = fmt::format("kernel {}(", k.name);
  for (size_t i = 0; i < k.params.size(); ++i) {
    const Param& p = k.params[i];
    if (i) out += ", ";
    if (p.is_buffer()) {
      out += fmt::format("{}: *{} {}{}", p.name, ToString(p.space),
                         ToString(p.elem), Fields(p.fields));
    } else {
      out += fmt::format("{}: {}", p.name, ToString(p.elem));
    }
  }
  out += ")\n";
  for (const SharedDecl& s : k.shared) {
    if (s.dynamic) {
      out += fmt::format("shared dyn {}: {}", s.name, ToString(s.elem));
    } else {
      out += fmt::format("shared {}: [{}] {}", s.name, PrintExpr(k, *s.count),
                         ToString(s.elem));
    }
    out += Fields(s.fields) + "\n";
  }
  for (const BasicBlock& bb : k.blocks) {
    out += bb.label + ":\n";
    for (const Instruction& inst : bb.instrs) {
      out += "  " + PrintInstruction(k, inst) + "\n";
    }
  }
  return out;
}

}  // namespace kfuzz::kir
