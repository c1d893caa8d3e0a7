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

// Static affine access analysis.
//
// Every load/store index is decomposed into m*threadIdx + n*blockIdx + c
// where m, n and c are polynomials over thread-invariant atoms (integer
// scalar params, blockDim, gridDim). Arithmetic wraps at 64 bits, so a row
// evaluates to exactly what the interpreter computes.

#ifndef KFUZZ_AFFINE_AFFINE_H_
#define KFUZZ_AFFINE_AFFINE_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kfuzz/kir/ir.h"
#include "kfuzz/sanrt/report.h"
#include "kfuzz/sanrt/value.h"

namespace kfuzz::affine {

// Atoms are scalar param slots, plus these two.
inline constexpr int kBlockDimAtom = -1;
inline constexpr int kGridDimAtom = -2;

class InvariantPoly {
 public:
  using Monomial = std::vector<int>;  // sorted atoms, repeated for powers

  static InvariantPoly Constant(int64_t c);
  static InvariantPoly Atom(int atom);

  InvariantPoly operator+(const InvariantPoly& o) const;
  InvariantPoly operator-(const InvariantPoly& o) const;
  InvariantPoly operator*(const InvariantPoly& o) const;

  bool IsZero() const { return terms_.empty(); }
  const std::map<Monomial, int64_t>& terms() const { return terms_; }

  // `params` holds the bound scalar values by param slot.
  int64_t Evaluate(const std::vector<sanrt::Value>& params, int64_t blocks,
                   int64_t threads) const;

  std::string ToString(const kir::Kernel& k) const;

  friend bool operator==(const InvariantPoly&, const InvariantPoly&) = default;

 private:
  void AddTerm(const Monomial& m, int64_t coeff);

  std::map<Monomial, int64_t> terms_;
};

struct AffineRow {
  InvariantPoly m;  // threadIdx coefficient
  InvariantPoly n;  // blockIdx coefficient
  InvariantPoly c;  // translation
  std::vector<int> instr_ids;

  std::string Key(const kir::Kernel& k) const;
  int64_t Evaluate(const std::vector<sanrt::Value>& params, int64_t blocks,
                   int64_t threads, int64_t tid, int64_t bid) const;
};

enum class NonAffineCause : uint8_t {
  kIndirectLoad,
  kNonlinear,
  kMathDependent
};

std::string_view ToString(NonAffineCause c);

struct AffineSummary {
  bool affine = true;
  std::vector<AffineRow> rows;  // ordered by first instruction id
  bool guarded = false;
  std::vector<std::pair<int, NonAffineCause>> reasons;  // non-affine only
};

AffineSummary Analyze(const kir::Kernel& k);

enum class PlanKind : uint8_t {
  kBoundaryThreads,
  kBoundaryBlocksAllThreads,
  kAll
};

std::string_view ToString(PlanKind p);

struct Plan {
  PlanKind kind = PlanKind::kAll;
  // kBoundaryThreads only: the distinct corner threads, ordered.
  std::vector<sanrt::ThreadId> threads;
};

Plan SelectRepresentativeThreads(const AffineSummary& s,
                                 const kir::GridConfig& g);

// Structured text for golden tests.
std::string DumpAffine(const kir::Kernel& k, const AffineSummary& s);

}  // namespace kfuzz::affine

#endif  // KFUZZ_AFFINE_AFFINE_H_
