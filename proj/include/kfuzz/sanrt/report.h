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

// Access records, bug classes and sanitizer reports.

#ifndef KFUZZ_SANRT_REPORT_H_
#define KFUZZ_SANRT_REPORT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>

namespace kfuzz::sanrt {

enum class BugClass : uint8_t { kBO, kOobRw, kUAF, kUAS, kIF, kDF, kUninit };

std::string_view ToString(BugClass c);
std::optional<BugClass> BugClassFromString(std::string_view s);

// Whether `reported` satisfies an expectation of class `declared`. A buffer
// overflow report is the more precise form of an arbitrary read/write.
bool ClassSatisfies(BugClass reported, BugClass declared);

enum class DetectorMode : uint8_t { kNone, kRedzone, kExact };

std::string_view ToString(DetectorMode m);
std::optional<DetectorMode> DetectorModeFromString(std::string_view s);

enum class AccessKind : uint8_t { kRead, kWrite, kFree, kAlloc };

std::string_view ToString(AccessKind k);

struct ThreadId {
  int64_t block = 0;
  int64_t thread = 0;

  friend auto operator<=>(const ThreadId&, const ThreadId&) = default;
};

struct AccessRecord {
  ThreadId thread;
  int instr_id = -1;
  AccessKind kind = AccessKind::kRead;
  int64_t alloc_id = -1;  // provenance of the base operand
  int64_t index = 0;      // element offset, verbatim
  uint64_t byte_addr = 0;
  bool compiler_induced = false;
};

// The (instr_id, byte_addr, kind) projection used for trace comparisons.
using TraceKey = std::tuple<int, uint64_t, AccessKind>;

inline TraceKey KeyOf(const AccessRecord& r) {
  return {r.instr_id, r.byte_addr, r.kind};
}

// One line of a trace dump.
std::string FormatRecord(const AccessRecord& r);

struct BugReport {
  BugClass cls = BugClass::kBO;
  AccessRecord access;
  int64_t alloc_id = -1;  // owning or nearest allocation, -1 when none
  int64_t distance = 0;   // bytes from the allocation's bounds
  DetectorMode detector = DetectorMode::kExact;

  std::pair<int, BugClass> dedup_key() const { return {access.instr_id, cls}; }

  // A single-line JSON object with stable field names.
  std::string ToJson() const;
};

}  // namespace kfuzz::sanrt

#endif  // KFUZZ_SANRT_REPORT_H_
