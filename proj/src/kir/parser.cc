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

#include "kfuzz/kir/parser.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "fmt/format.h"
#include "kfuzz/kir/validate.h"

namespace kfuzz::kir {
namespace {

enum class Tok { kIdent, kInt, kFloat, kPunct, kNewline, kEnd, kBad };

struct Token {
  Tok kind = Tok::kEnd;
  std::string_view text;
  int line = 1;
  int col = 1;
  int64_t int_value = 0;
  double float_value = 0.0;
};

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool IsDigit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> Lex(std::string_view src) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1;
  size_t line_start = 0;
  auto push = [&](Tok kind, size_t begin, size_t end) {
    Token t;
    t.kind = kind;
    t.text = src.substr(begin, end - begin);
    t.line = line;
    t.col = static_cast<int>(begin - line_start) + 1;
    out.push_back(t);
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      push(Tok::kNewline, i, i + 1);
      ++i;
      ++line;
      line_start = i;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
    } else if (IsIdentStart(c)) {
      size_t b = i;
      while (i < src.size() && IsIdentChar(src[i])) ++i;
      push(Tok::kIdent, b, i);
    } else if (IsDigit(c) ||
               (c == '-' && i + 1 < src.size() && IsDigit(src[i + 1]))) {
      size_t b = i++;
      while (i < src.size() && IsDigit(src[i])) ++i;
      bool is_float = false;
      if (i + 1 < src.size() && src[i] == '.' && IsDigit(src[i + 1])) {
        is_float = true;
        ++i;
        while (i < src.size() && IsDigit(src[i])) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && IsDigit(src[j])) {
          is_float = true;
          i = j;
          while (i < src.size() && IsDigit(src[i])) ++i;
        }
      }
      push(is_float ? Tok::kFloat : Tok::kInt, b, i);
      Token& t = out.back();
      const char* first = src.data() + b;
      const char* last = src.data() + i;
      std::from_chars_result r =
          is_float ? std::from_chars(first, last, t.float_value)
                   : std::from_chars(first, last, t.int_value);
      if (r.ec != std::errc() || r.ptr != last) t.kind = Tok::kBad;
    } else if (std::string_view("()[]{}:,=*.;").find(c) !=
               std::string_view::npos) {
      push(Tok::kPunct, i, i + 1);
      ++i;
    } else {
      push(Tok::kBad, i, i + 1);
      ++i;
    }
  }
  push(Tok::kEnd, src.size(), src.size());
  return out;
}

const std::set<std::string_view>& Reserved() {
  static const auto* words = new std::set<std::string_view>{
      "kernel", "shared", "dyn",       "load",        "store",     "alloca",
      "malloc", "free",   "barrier",   "scope_begin", "scope_end", "branch",
      "jump",   "return", "threadIdx", "blockIdx",    "blockDim",  "gridDim",
      "add",    "sub",    "mul",       "div",         "rem",       "and",
      "or",     "xor",    "shl",       "shr",         "min",       "max",
      "eq",     "ne",     "lt",        "le",          "gt",        "ge",
      "sqrt",   "exp",    "log",       "sin",         "cos",       "i32",
      "i64",    "f32",    "f64",
  };
  return *words;
}

struct Pos {
  int line = 0;
  int col = 0;
};

struct PendingTarget {
  int block;
  size_t instr;
  bool else_branch;
  std::string label;
  Pos pos;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lex(src)) {}

  bool Run(Kernel* out) {
    if (!ParseHeader()) return false;
    while (true) {
      const Token& t = Peek();
      if (t.kind == Tok::kEnd) break;
      if (brace_ && IsPunct(t, '}')) {
        Next();
        SkipSeparators();
        if (Peek().kind != Tok::kEnd) return Fail(Peek(), "end of input");
        brace_closed_ = true;
        break;
      }
      if (t.kind == Tok::kNewline || IsPunct(t, ';')) {
        Next();
        continue;
      }
      if (!ParseStatement()) return false;
      const Token& end = Peek();
      if (end.kind == Tok::kNewline || IsPunct(end, ';')) {
        Next();
      } else if (!(end.kind == Tok::kEnd || (brace_ && IsPunct(end, '}')))) {
        return Fail(end, "end of statement");
      }
    }
    if (brace_ && !brace_closed_) return Fail(Peek(), "'}'");
    if (k_.blocks.empty()) return Fail(Peek(), "block label or instruction");
    for (const PendingTarget& p : pending_) {
      int target = k_.FindBlock(p.label);
      if (target < 0) {
        return FailValidation(p.pos, kRuleUndefinedLabel,
                              fmt::format("no block labeled '{}'", p.label));
      }
      Instruction& inst = k_.blocks[p.block].instrs[p.instr];
      (p.else_branch ? inst.target_else : inst.target) = target;
    }
    *out = std::move(k_);
    return true;
  }

  const Diagnostic& diag() const { return diag_; }

  // Maps a validator finding back to source positions.
  Diagnostic Locate(const ValidationIssue& issue) const {
    Diagnostic d;
    d.kind = Diagnostic::Kind::kValidation;
    d.rule = issue.rule;
    d.message = issue.message;
    Pos pos{1, 1};
    if (issue.instr_id >= 0 &&
        issue.instr_id < static_cast<int>(instr_pos_.size())) {
      pos = instr_pos_[issue.instr_id];
    } else if (issue.block >= 0 &&
               issue.block < static_cast<int>(block_pos_.size())) {
      pos = block_pos_[issue.block];
    }
    d.line = pos.line;
    d.col = pos.col;
    return d;
  }

 private:
  const Token& Peek(int ahead = 0) const {
    size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& Next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  static bool IsPunct(const Token& t, char c) {
    return t.kind == Tok::kPunct && t.text[0] == c;
  }
  static bool IsWord(const Token& t, std::string_view w) {
    return t.kind == Tok::kIdent && t.text == w;
  }
  void SkipSeparators() {
    while (Peek().kind == Tok::kNewline || IsPunct(Peek(), ';')) Next();
  }

  bool Fail(const Token& t, std::string expected) {
    diag_ = Diagnostic{};
    diag_.kind = Diagnostic::Kind::kSyntax;
    diag_.line = t.line;
    diag_.col = t.col;
    diag_.expected = std::move(expected);
    std::string found = t.kind == Tok::kEnd       ? "end of input"
                        : t.kind == Tok::kNewline ? "end of line"
                                                  : fmt::format("'{}'", t.text);
    diag_.message = fmt::format("expected {}, found {}", diag_.expected, found);
    return false;
  }

  bool FailValidation(Pos pos, const char* rule, std::string message) {
    diag_ = Diagnostic{};
    diag_.kind = Diagnostic::Kind::kValidation;
    diag_.line = pos.line;
    diag_.col = pos.col;
    diag_.rule = rule;
    diag_.message = std::move(message);
    return false;
  }

  bool Expect(char c) {
    if (!IsPunct(Peek(), c)) return Fail(Peek(), fmt::format("'{}'", c));
    Next();
    return true;
  }

  bool ExpectName(std::string* name) {
    const Token& t = Peek();
    if (t.kind != Tok::kIdent || Reserved().count(t.text)) {
      return Fail(t, "identifier");
    }
    *name = std::string(Next().text);
    return true;
  }

  bool ParseType(ScalarType* type) {
    const Token& t = Peek();
    std::optional<ScalarType> st =
        t.kind == Tok::kIdent ? ScalarTypeFromString(t.text) : std::nullopt;
    if (!st) return Fail(t, "scalar type (i32, i64, f32, f64)");
    Next();
    *type = *st;
    return true;
  }

  bool ParseIntLiteral(int64_t* v) {
    if (Peek().kind != Tok::kInt) return Fail(Peek(), "integer literal");
    *v = Next().int_value;
    return true;
  }

  bool ParseFieldList(std::vector<int64_t>* fields) {
    if (!Expect('{')) return false;
    while (true) {
      int64_t v;
      const Token& t = Peek();
      if (!ParseIntLiteral(&v)) return false;
      if (v < 0) return Fail(t, "nonnegative field size");
      fields->push_back(v);
      if (IsPunct(Peek(), ',')) {
        Next();
        continue;
      }
      return Expect('}');
    }
  }

  bool ParseHeader() {
    SkipSeparators();
    if (!IsWord(Peek(), "kernel")) return Fail(Peek(), "'kernel'");
    Next();
    if (!ExpectName(&k_.name)) return false;
    if (!Expect('(')) return false;
    if (!IsPunct(Peek(), ')')) {
      while (true) {
        Param p;
        if (!ExpectName(&p.name)) return false;
        if (!Expect(':')) return false;
        if (IsPunct(Peek(), '*')) {
          Next();
          p.kind = Param::Kind::kBuffer;
          const Token& st = Peek();
          std::optional<MemorySpace> space =
              st.kind == Tok::kIdent ? MemorySpaceFromString(st.text)
                                     : std::nullopt;
          if (!space) return Fail(st, "memory space");
          Next();
          p.space = *space;
          if (!ParseType(&p.elem)) return false;
          // `{` followed by an integer is a field list, not a body.
          if (IsPunct(Peek(), '{') && Peek(1).kind == Tok::kInt) {
            if (!ParseFieldList(&p.fields)) return false;
          }
        } else {
          p.kind = Param::Kind::kScalar;
          if (!ParseType(&p.elem)) return false;
        }
        k_.params.push_back(std::move(p));
        if (IsPunct(Peek(), ',')) {
          Next();
          continue;
        }
        break;
      }
    }
    if (!Expect(')')) return false;
    if (IsPunct(Peek(), '{')) {
      Next();
      brace_ = true;
      return true;
    }
    if (Peek().kind != Tok::kNewline && Peek().kind != Tok::kEnd) {
      return Fail(Peek(), "end of line or '{'");
    }
    return true;
  }

  bool ParseShared() {
    if (!k_.blocks.empty()) return Fail(Peek(), "instruction or block label");
    Next();  // shared
    SharedDecl s;
    if (IsWord(Peek(), "dyn")) {
      Next();
      s.dynamic = true;
    }
    if (!ExpectName(&s.name)) return false;
    if (!Expect(':')) return false;
    if (!s.dynamic) {
      if (!Expect('[')) return false;
      s.count = ParseExpr();
      if (!s.count) return false;
      if (!Expect(']')) return false;
    }
    if (!ParseType(&s.elem)) return false;
    if (IsPunct(Peek(), '{')) {
      if (!ParseFieldList(&s.fields)) return false;
    }
    k_.shared.push_back(std::move(s));
    return true;
  }

  int LocalSlot(std::string_view name) {
    int slot = k_.FindLocal(name);
    if (slot < 0) {
      slot = static_cast<int>(k_.locals.size());
      k_.locals.emplace_back(name);
    }
    return slot;
  }

  ExprPtr ParseExpr() {
    const Token& t = Peek();
    if (t.kind == Tok::kInt) return Expr::Int(Next().int_value);
    if (t.kind == Tok::kFloat) return Expr::Float(Next().float_value);
    if (IsPunct(t, '(')) {
      Next();
      ExprPtr e = ParseExpr();
      if (!e || !Expect(')')) return nullptr;
      return e;
    }
    if (t.kind != Tok::kIdent) {
      Fail(t, "expression");
      return nullptr;
    }
    if (std::optional<BinaryOp> op = BinaryOpFromString(t.text)) {
      Next();
      ExprPtr lhs = ParseExpr();
      if (!lhs) return nullptr;
      ExprPtr rhs = ParseExpr();
      if (!rhs) return nullptr;
      return Expr::Binary(*op, std::move(lhs), std::move(rhs));
    }
    static constexpr std::pair<std::string_view, Intrinsic> kIntrinsics[] = {
        {"threadIdx", Intrinsic::kThreadIdx},
        {"blockIdx", Intrinsic::kBlockIdx},
        {"blockDim", Intrinsic::kBlockDim},
        {"gridDim", Intrinsic::kGridDim},
    };
    for (const auto& [name, intr] : kIntrinsics) {
      if (t.text != name) continue;
      Pos at{t.line, t.col};
      Next();
      if (!Expect('.')) return nullptr;
      const Token& dim = Peek();
      if (IsWord(dim, "x")) {
        Next();
        return Expr::Intr(intr);
      }
      if (IsWord(dim, "y") || IsWord(dim, "z")) {
        FailValidation(
            at, kRuleMultiDimIntrinsic,
            fmt::format("{}.{}: only one-dimensional grids are supported", name,
                        dim.text));
        return nullptr;
      }
      Fail(dim, "'x'");
      return nullptr;
    }
    if (Reserved().count(t.text)) {
      Fail(t, "expression");
      return nullptr;
    }
    Next();
    if (int p = k_.FindParam(t.text); p >= 0) return Expr::Param(p);
    if (k_.FindShared(t.text) >= 0) {
      FailValidation({t.line, t.col}, kRuleBufferInExpression,
                     fmt::format("shared buffer '{}' used as a value", t.text));
      return nullptr;
    }
    return Expr::Local(LocalSlot(t.text));
  }

  bool ParseBufferRef(BufferRef* ref) {
    const Token& t = Peek();
    if (t.kind != Tok::kIdent || Reserved().count(t.text)) {
      return Fail(t, "buffer name");
    }
    Next();
    if (int p = k_.FindParam(t.text); p >= 0) {
      ref->kind = BufferRef::Kind::kParam;
      ref->index = p;
    } else if (int s = k_.FindShared(t.text); s >= 0) {
      ref->kind = BufferRef::Kind::kShared;
      ref->index = s;
    } else {
      ref->kind = BufferRef::Kind::kLocal;
      ref->index = LocalSlot(t.text);
    }
    if (IsPunct(Peek(), '.')) {
      Next();
      const Token& ft = Peek();
      int64_t f;
      if (!ParseIntLiteral(&f)) return false;
      if (f < 0 || f > (1 << 20)) return Fail(ft, "field index");
      ref->field = static_cast<int>(f);
    }
    return true;
  }

  bool ParseIndexed(Instruction* inst) {
    if (!ParseBufferRef(&inst->buffer)) return false;
    if (!Expect('[')) return false;
    inst->a = ParseExpr();
    if (!inst->a) return false;
    return Expect(']');
  }

  // Records a target of the terminator just appended; resolved after the
  // whole body is read.
  bool ParseLabelRef(bool else_branch) {
    const Token& t = Peek();
    if (t.kind != Tok::kIdent) return Fail(t, "block label");
    Next();
    pending_.push_back({static_cast<int>(k_.blocks.size()) - 1,
                        k_.blocks.back().instrs.size() - 1,
                        else_branch,
                        std::string(t.text),
                        {t.line, t.col}});
    return true;
  }

  // Optional `.host` suffix on malloc/free.
  bool ParseHostSuffix(bool* host) {
    *host = false;
    if (!IsPunct(Peek(), '.')) return true;
    Next();
    if (!IsWord(Peek(), "host")) return Fail(Peek(), "'host'");
    Next();
    *host = true;
    return true;
  }

  bool ParseAssignment(Instruction* inst) {
    std::string dst_name(Next().text);
    Next();  // '='
    const Token& op = Peek();
    if (op.kind != Tok::kIdent) return Fail(op, "operation");
    if (std::optional<BinaryOp> bop = BinaryOpFromString(op.text)) {
      Next();
      inst->opcode = Opcode::kArith;
      inst->binop = *bop;
      if (!(inst->a = ParseExpr())) return false;
      if (!(inst->b = ParseExpr())) return false;
    } else if (std::optional<MathFn> fn = MathFnFromString(op.text)) {
      Next();
      inst->opcode = Opcode::kMath;
      inst->math = *fn;
      if (!(inst->a = ParseExpr())) return false;
    } else if (op.text == "load") {
      Next();
      inst->opcode = Opcode::kLoad;
      if (!ParseIndexed(inst)) return false;
    } else if (op.text == "alloca" || op.text == "malloc") {
      inst->opcode = op.text == "alloca" ? Opcode::kAlloca : Opcode::kMalloc;
      Next();
      inst->allocator = Allocator::kStack;
      if (inst->opcode == Opcode::kMalloc) {
        bool host;
        if (!ParseHostSuffix(&host)) return false;
        inst->allocator = host ? Allocator::kHostApi : Allocator::kDeviceMalloc;
      }
      if (!ParseType(&inst->elem)) return false;
      if (!(inst->a = ParseExpr())) return false;
      if (IsPunct(Peek(), '{')) {
        if (!ParseFieldList(&inst->fields)) return false;
      }
    } else {
      return Fail(op, "operation");
    }
    if (k_.FindParam(dst_name) >= 0 || k_.FindShared(dst_name) >= 0) {
      return FailValidation(cur_pos_, kRuleDuplicateName,
                            fmt::format("cannot assign to '{}'", dst_name));
    }
    inst->dst = LocalSlot(dst_name);
    return true;
  }

  void Append(Instruction inst) {
    if (k_.blocks.empty()) {
      k_.blocks.push_back(BasicBlock{"entry", {}});
      block_pos_.push_back(cur_pos_);
    }
    inst.id = static_cast<int>(instr_pos_.size());
    instr_pos_.push_back(cur_pos_);
    k_.blocks.back().instrs.push_back(std::move(inst));
  }

  bool ParseStatement() {
    const Token& t = Peek();
    cur_pos_ = {t.line, t.col};
    if (t.kind != Tok::kIdent) return Fail(t, "instruction or block label");
    if (t.text == "shared") return ParseShared();
    if (IsPunct(Peek(1), ':') && !Reserved().count(t.text)) {
      Next();
      Next();
      k_.blocks.push_back(BasicBlock{std::string(t.text), {}});
      block_pos_.push_back(cur_pos_);
      return true;
    }
    Instruction inst;
    if (IsPunct(Peek(1), '=')) {
      if (Reserved().count(t.text)) return Fail(t, "identifier");
      if (!ParseAssignment(&inst)) return false;
      Append(std::move(inst));
      return true;
    }
    std::string_view word = Next().text;
    if (word == "store") {
      inst.opcode = Opcode::kStore;
      if (!ParseIndexed(&inst)) return false;
      if (!(inst.b = ParseExpr())) return false;
    } else if (word == "free") {
      inst.opcode = Opcode::kFree;
      bool host;
      if (!ParseHostSuffix(&host)) return false;
      inst.allocator = host ? Allocator::kHostApi : Allocator::kDeviceMalloc;
      if (!ParseBufferRef(&inst.buffer)) return false;
    } else if (word == "barrier") {
      inst.opcode = Opcode::kBarrier;
    } else if (word == "scope_begin") {
      inst.opcode = Opcode::kScopeBegin;
    } else if (word == "scope_end") {
      inst.opcode = Opcode::kScopeEnd;
    } else if (word == "return") {
      inst.opcode = Opcode::kReturn;
    } else if (word == "jump") {
      inst.opcode = Opcode::kJump;
      Append(std::move(inst));
      return ParseLabelRef(false);
    } else if (word == "branch") {
      inst.opcode = Opcode::kBranch;
      if (!(inst.a = ParseExpr())) return false;
      Append(std::move(inst));
      return ParseLabelRef(false) && ParseLabelRef(true);
    } else {
      return Fail(t, "instruction or block label");
    }
    Append(std::move(inst));
    return true;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  Kernel k_;
  bool brace_ = false;
  bool brace_closed_ = false;
  Pos cur_pos_;
  std::vector<Pos> instr_pos_;
  std::vector<Pos> block_pos_;
  std::vector<PendingTarget> pending_;
  Diagnostic diag_;
};

absl::Status ToStatus(const Diagnostic& d) {
  if (d.kind == Diagnostic::Kind::kSyntax) {
    return absl::InvalidArgumentError(d.ToString());
  }
  return absl::FailedPreconditionError(d.ToString());
}

absl::StatusOr<Kernel> Parse(std::string_view source, Diagnostic* diag,
                             bool validate) {
  Parser parser(source);
  Kernel k;
  if (!parser.Run(&k)) {
    if (diag) *diag = parser.diag();
    return ToStatus(parser.diag());
  }
  if (validate) {
    if (std::optional<ValidationIssue> issue = FindValidationIssue(k)) {
      Diagnostic d = parser.Locate(*issue);
      if (diag) *diag = d;
      return ToStatus(d);
    }
  }
  return k;
}

}  // namespace

std::string Diagnostic::ToString() const {
  if (kind == Kind::kSyntax) {
    return fmt::format("{}:{}: syntax error: {}", line, col, message);
  }
  return fmt::format("{}:{}: validation error [{}]: {}", line, col, rule,
                     message);
}

absl::StatusOr<Kernel> ParseKernel(std::string_view source, Diagnostic* diag) {
  return Parse(source, diag, /*validate=*/true);
}

absl::StatusOr<Kernel> ParseKernelUnvalidated(std::string_view source,
                                              Diagnostic* diag) {
  return Parse(source, diag, /*validate=*/false);
}

}  // namespace kfuzz::kir
