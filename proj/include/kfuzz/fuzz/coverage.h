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

// Edge coverage feedback.

#ifndef KFUZZ_FUZZ_COVERAGE_H_
#define KFUZZ_FUZZ_COVERAGE_H_

#include <cstdint>
#include <vector>

namespace kfuzz::fuzz {

inline constexpr int kMapSize = 1 << 16;

// Bucket class bit for a hit count: 1, 2, 3, 4-7, 8-15, 16-31, 32-127,
// 128+. Zero maps to zero.
uint8_t BucketOf(uint32_t hits);

// Hit counters of one execution.
class TraceMap {
 public:
  TraceMap();

  // Records entering `site`, counting the edge from the previous site.
  void Visit(int site);
  void VisitAccess(int instr_id);
  void Reset();

  const std::vector<uint8_t>& counters() const { return counters_; }
  const std::vector<int>& accesses() const { return accesses_; }
  // Indices of the nonzero counters, in first-hit order.
  const std::vector<int>& touched() const { return touched_; }

 private:
  std::vector<uint8_t> counters_;
  std::vector<int> touched_;
  std::vector<int> accesses_;
  uint32_t prev_ = 0;
};

// Accumulated bucket classes seen per edge, plus the covered access ids.
class CoverageMap {
 public:
  CoverageMap();

  // Merges a trace; returns true if it set a bucket bit or access bit that
  // was not set before.
  bool Merge(const TraceMap& t);
  // Whether merging `t` would add anything.
  bool HasNew(const TraceMap& t) const;
  // Union. Commutative, associative and idempotent.
  void Merge(const CoverageMap& o);

  int64_t edges() const;  // nonzero entries
  int64_t bits() const;   // set bucket bits
  const std::vector<bool>& accesses() const { return accesses_; }
  uint8_t at(int i) const { return classes_[i]; }

  friend bool operator==(const CoverageMap& a, const CoverageMap& b);

 private:
  std::vector<uint8_t> classes_;
  std::vector<bool> accesses_;
};

}  // namespace kfuzz::fuzz

#endif  // KFUZZ_FUZZ_COVERAGE_H_
