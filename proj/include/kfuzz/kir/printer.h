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

#ifndef KFUZZ_KIR_PRINTER_H_
#define KFUZZ_KIR_PRINTER_H_

#include <string>

#include "kfuzz/kir/ir.h"

namespace kfuzz::kir {

// Canonical text; ParseKernel(PrintKernel(k)) reproduces k for parsed
// kernels (instruction ids are positional).
std::string PrintKernel(const Kernel& k);

// Nested binary operands are parenthesized; the outermost one is not.
std::string PrintExpr(const Kernel& k, const Expr& e);

// One instruction without indentation or newline. Promoted operands render
// as `name[tid]`, which only the lowered dialect uses.
std::string PrintInstruction(const Kernel& k, const Instruction& inst);

std::string FormatFloat(double v);

}  // namespace kfuzz::kir

#endif  // KFUZZ_KIR_PRINTER_H_
