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

// Runtime values and the arithmetic both interpreters share.
//
// Integers are 64-bit two's complement with wraparound. Integer division or
// remainder by zero yields 0, shift amounts are masked to 6 bits, and
// comparisons produce 0 or 1. Any float operand promotes the operation to
// double precision.

#ifndef KFUZZ_SANRT_VALUE_H_
#define KFUZZ_SANRT_VALUE_H_

#include <cstdint>
#include <string>

#include "kfuzz/kir/ir.h"

namespace kfuzz::sanrt {

struct Value {
  enum class Kind : uint8_t { kInt, kFloat, kPtr };
  Kind kind = Kind::kInt;
  int64_t i = 0;  // integer payload, or allocation id for kPtr
  double f = 0.0;

  static Value Int(int64_t v) { return Value{Kind::kInt, v, 0.0}; }
  static Value Float(double v) { return Value{Kind::kFloat, 0, v}; }
  static Value Ptr(int64_t alloc_id) {
    return Value{Kind::kPtr, alloc_id, 0.0};
  }

  bool is_float() const { return kind == Kind::kFloat; }
  // Floats truncate toward zero; NaN maps to 0 and out-of-range values
  // saturate.
  int64_t AsInt() const;
  double AsFloat() const;
  bool Truthy() const { return is_float() ? f != 0.0 : i != 0; }

  friend bool operator==(const Value& a, const Value& b);
  std::string ToString() const;
};

int64_t SaturatingToInt(double d);

Value EvalBinary(kir::BinaryOp op, const Value& a, const Value& b);
Value EvalMath(kir::MathFn fn, const Value& a);

// Rounds a value to what an element of type `t` can hold.
Value ConvertTo(const Value& v, kir::ScalarType t);

}  // namespace kfuzz::sanrt

#endif  // KFUZZ_SANRT_VALUE_H_
