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

// Text frontend for kernels.
//
//   kernel vecAdd(a: *global_host f32, n: i32)
//   shared s_a: [blockDim.x] f32
//   entry:
//     id = add (mul blockIdx.x blockDim.x) threadIdx.x
//     t0 = load a[id]
//     store s_a[threadIdx.x] t0
//     barrier
//     return
//
// Expressions are prefix: `op e1 e2` with optional parentheses. A body may
// also be written in braces on one line: `kernel k() { return }`.

#ifndef KFUZZ_KIR_PARSER_H_
#define KFUZZ_KIR_PARSER_H_

#include <string>
#include <string_view>

#include "absl/status/statusor.h"
#include "kfuzz/kir/ir.h"

namespace kfuzz::kir {

struct Diagnostic {
  enum class Kind { kSyntax, kValidation };
  Kind kind = Kind::kSyntax;
  int line = 0;          // 1-based
  int col = 0;           // 1-based
  std::string expected;  // syntax errors
  std::string rule;      // validation errors
  std::string message;

  // "3:14: syntax error: expected ']'" style one-liner.
  std::string ToString() const;
};

// Parses and validates. Syntax errors come back as InvalidArgument and
// validation errors as FailedPrecondition; `diag` (optional) receives the
// position and details in both cases.
absl::StatusOr<Kernel> ParseKernel(std::string_view source,
                                   Diagnostic* diag = nullptr);

// Parses without running the validator.
absl::StatusOr<Kernel> ParseKernelUnvalidated(std::string_view source,
                                              Diagnostic* diag = nullptr);

}  // namespace kfuzz::kir

#endif  // KFUZZ_KIR_PARSER_H_
