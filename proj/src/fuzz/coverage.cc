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

#include "kfuzz/fuzz/coverage.h"

#include <algorithm>
#include <bit>

namespace kfuzz::fuzz {
namespace {

uint32_t SiteHash(int site) {
  uint64_t z = static_cast<uint64_t>(site) + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return static_cast<uint32_t>(z ^ (z >> 31)) & (kMapSize - 1);
}

}  // namespace

uint8_t BucketOf(uint32_t hits) {
  if (hits == 0) return 0;
  if (hits <= 3) return static_cast<uint8_t>(1u << (hits - 1));
  if (hits <= 7) return 8;
  if (hits <= 15) return 16;
  if (hits <= 31) return 32;
  if (hits <= 127) return 64;
  return 128;
}

TraceMap::TraceMap() : counters_(kMapSize, 0) {}

void TraceMap::Visit(int site) {
  const uint32_t cur = SiteHash(site);
  const uint32_t edge = (cur ^ prev_) & (kMapSize - 1);
  uint8_t& c = counters_[edge];
  if (c == 0) touched_.push_back(static_cast<int>(edge));
  if (c != 255) ++c;
  prev_ = cur >> 1;
}

void TraceMap::VisitAccess(int instr_id) { accesses_.push_back(instr_id); }

void TraceMap::Reset() {
  for (int i : touched_) counters_[i] = 0;
  touched_.clear();
  accesses_.clear();
  prev_ = 0;
}

CoverageMap::CoverageMap() : classes_(kMapSize, 0) {}

bool CoverageMap::HasNew(const TraceMap& t) const {
  const auto& counters = t.counters();
  for (int i : t.touched()) {
    if (BucketOf(counters[i]) & ~classes_[i]) return true;
  }
  for (int id : t.accesses()) {
    if (id >= static_cast<int>(accesses_.size()) || !accesses_[id]) return true;
  }
  return false;
}

bool CoverageMap::Merge(const TraceMap& t) {
  bool fresh = false;
  const auto& counters = t.counters();
  for (int i : t.touched()) {
    const uint8_t b = BucketOf(counters[i]);
    if (b & ~classes_[i]) {
      classes_[i] |= b;
      fresh = true;
    }
  }
  for (int id : t.accesses()) {
    if (id < 0) continue;
    if (id >= static_cast<int>(accesses_.size())) accesses_.resize(id + 1);
    if (!accesses_[id]) {
      accesses_[id] = true;
      fresh = true;
    }
  }
  return fresh;
}

void CoverageMap::Merge(const CoverageMap& o) {
  for (int i = 0; i < kMapSize; ++i) classes_[i] |= o.classes_[i];
  if (o.accesses_.size() > accesses_.size())
    accesses_.resize(o.accesses_.size());
  for (size_t i = 0; i < o.accesses_.size(); ++i) {
    if (o.accesses_[i]) accesses_[i] = true;
  }
}

int64_t CoverageMap::edges() const {
  int64_t n = 0;
  for (uint8_t c : classes_) n += c != 0;
  return n;
}

int64_t CoverageMap::bits() const {
  int64_t n = 0;
  for (uint8_t c : classes_) n += std::popcount(c);
  for (bool a : accesses_) n += a;
  return n;
}

bool operator==(const CoverageMap& a, const CoverageMap& b) {
  if (a.classes_ != b.classes_) return false;
  const size_t n = std::max(a.accesses_.size(), b.accesses_.size());
  for (size_t i = 0; i < n; ++i) {
    const bool x = i < a.accesses_.size() && a.accesses_[i];
    const bool y = i < b.accesses_.size() && b.accesses_[i];
    if (x != y) return false;
  }
  return true;
}

}  // namespace kfuzz::fuzz
