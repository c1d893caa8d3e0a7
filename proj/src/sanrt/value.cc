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

#include "kfuzz/sanrt/value.h"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <limits>

#include "kfuzz/kir/printer.h"

namespace kfuzz::sanrt {

using kir::BinaryOp;

int64_t SaturatingToInt(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9.2233720368547758e18) return std::numeric_limits<int64_t>::max();
  if (d <= -9.2233720368547758e18) return std::numeric_limits<int64_t>::min();
  return static_cast<int64_t>(d);
}

int64_t Value::AsInt() const { return is_float() ? SaturatingToInt(f) : i; }

double Value::AsFloat() const {
  return is_float() ? f : static_cast<double>(i);
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  if (a.is_float()) {
    return std::bit_cast<uint64_t>(a.f) == std::bit_cast<uint64_t>(b.f);
  }
  return a.i == b.i;
}

std::string Value::ToString() const {
  switch (kind) {
    case Kind::kInt:
      return fmt::format("{}", i);
    case Kind::kFloat:
      return kir::FormatFloat(f);
    case Kind::kPtr:
      return fmt::format("ptr#{}", i);
  }
  return "?";
}

namespace {

int64_t Wrap(uint64_t v) { return static_cast<int64_t>(v); }

int64_t IntBinary(BinaryOp op, int64_t a, int64_t b) {
  const uint64_t ua = static_cast<uint64_t>(a);
  const uint64_t ub = static_cast<uint64_t>(b);
  switch (op) {
    case BinaryOp::kAdd:
      return Wrap(ua + ub);
    case BinaryOp::kSub:
      return Wrap(ua - ub);
    case BinaryOp::kMul:
      return Wrap(ua * ub);
    case BinaryOp::kDiv:
      if (b == 0) return 0;
      if (a == std::numeric_limits<int64_t>::min() && b == -1) return a;
      return a / b;
    case BinaryOp::kRem:
      if (b == 0 || b == -1) return 0;
      return a % b;
    case BinaryOp::kAnd:
      return a & b;
    case BinaryOp::kOr:
      return a | b;
    case BinaryOp::kXor:
      return a ^ b;
    case BinaryOp::kShl:
      return Wrap(ua << (ub & 63));
    case BinaryOp::kShr:
      return a >> (ub & 63);
    case BinaryOp::kMin:
      return a < b ? a : b;
    case BinaryOp::kMax:
      return a < b ? b : a;
    case BinaryOp::kEq:
      return a == b;
    case BinaryOp::kNe:
      return a != b;
    case BinaryOp::kLt:
      return a < b;
    case BinaryOp::kLe:
      return a <= b;
    case BinaryOp::kGt:
      return a > b;
    case BinaryOp::kGe:
      return a >= b;
  }
  return 0;
}

}  // namespace

Value EvalBinary(BinaryOp op, const Value& a, const Value& b) {
  if (!a.is_float() && !b.is_float()) {
    return Value::Int(IntBinary(op, a.i, b.i));
  }
  const double x = a.AsFloat();
  const double y = b.AsFloat();
  switch (op) {
    case BinaryOp::kAdd:
      return Value::Float(x + y);
    case BinaryOp::kSub:
      return Value::Float(x - y);
    case BinaryOp::kMul:
      return Value::Float(x * y);
    case BinaryOp::kDiv:
      return Value::Float(x / y);
    case BinaryOp::kRem:
      return Value::Float(std::fmod(x, y));
    case BinaryOp::kMin:
      return Value::Float(std::fmin(x, y));
    case BinaryOp::kMax:
      return Value::Float(std::fmax(x, y));
    case BinaryOp::kEq:
      return Value::Int(x == y);
    case BinaryOp::kNe:
      return Value::Int(x != y);
    case BinaryOp::kLt:
      return Value::Int(x < y);
    case BinaryOp::kLe:
      return Value::Int(x <= y);
    case BinaryOp::kGt:
      return Value::Int(x > y);
    case BinaryOp::kGe:
      return Value::Int(x >= y);
    default:
      // Bitwise operators act on the truncated integer values.
      return Value::Int(IntBinary(op, a.AsInt(), b.AsInt()));
  }
}

Value EvalMath(kir::MathFn fn, const Value& a) {
  const double x = a.AsFloat();
  switch (fn) {
    case kir::MathFn::kSqrt:
      return Value::Float(std::sqrt(x));
    case kir::MathFn::kExp:
      return Value::Float(std::exp(x));
    case kir::MathFn::kLog:
      return Value::Float(std::log(x));
    case kir::MathFn::kSin:
      return Value::Float(std::sin(x));
    case kir::MathFn::kCos:
      return Value::Float(std::cos(x));
  }
  return Value::Float(x);
}

Value ConvertTo(const Value& v, kir::ScalarType t) {
  switch (t) {
    case kir::ScalarType::kI32:
      return Value::Int(static_cast<int32_t>(
          static_cast<uint32_t>(static_cast<uint64_t>(v.AsInt()))));
    case kir::ScalarType::kI64:
      return Value::Int(v.AsInt());
    case kir::ScalarType::kF32: {
      const double d = v.AsFloat();
      if (std::isfinite(d) &&
          std::fabs(d) > std::numeric_limits<float>::max()) {
        return Value::Float(d > 0 ? HUGE_VAL : -HUGE_VAL);
      }
      return Value::Float(static_cast<float>(d));
    }
    case kir::ScalarType::kF64:
      return Value::Float(v.AsFloat());
  }
  return v;
}

}  // namespace kfuzz::sanrt
