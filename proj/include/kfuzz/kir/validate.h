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

#ifndef KFUZZ_KIR_VALIDATE_H_
#define KFUZZ_KIR_VALIDATE_H_

#include <optional>
#include <string>

#include "absl/status/status.h"
#include "kfuzz/kir/ir.h"

namespace kfuzz::kir {

// Rule names reported by the validator. They are part of the diagnostic
// contract and appear verbatim in CLI output.
inline constexpr char kRuleTerminator[] = "terminator";
inline constexpr char kRuleUndefinedLabel[] = "undefined_label";
inline constexpr char kRuleDuplicateLabel[] = "duplicate_label";
inline constexpr char kRuleDuplicateName[] = "duplicate_name";
inline constexpr char kRuleUndefinedLocal[] = "undefined_local";
inline constexpr char kRulePointerMisuse[] = "pointer_misuse";
inline constexpr char kRuleBadField[] = "bad_field";
inline constexpr char kRuleBarrierDivergence[] = "barrier_divergence";
inline constexpr char kRuleScopeMismatch[] = "scope_mismatch";
inline constexpr char kRuleBarrierInScope[] = "barrier_in_scope";
inline constexpr char kRuleIrreducible[] = "irreducible_cfg";
inline constexpr char kRuleVariantSharedSize[] = "variant_shared_size";
inline constexpr char kRuleMultipleDynamicShared[] = "multiple_dynamic_shared";
inline constexpr char kRuleMultiDimIntrinsic[] = "multi_dimensional_intrinsic";
inline constexpr char kRuleBufferInExpression[] = "buffer_in_expression";

struct ValidationIssue {
  std::string rule;
  int block = -1;     // offending block, or -1 for declarations
  int instr_id = -1;  // offending instruction, or -1
  std::string message;
};

// First violated invariant in a deterministic traversal order, if any.
std::optional<ValidationIssue> FindValidationIssue(const Kernel& k);

// FailedPrecondition carrying "rule: message" when the kernel is invalid.
absl::Status ValidateKernel(const Kernel& k);

}  // namespace kfuzz::kir

#endif  // KFUZZ_KIR_VALIDATE_H_
