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

#include "kfuzz/sanrt/report.h"

#include <fmt/format.h>

#include <array>

#include "json.hpp"

namespace kfuzz::sanrt {
namespace {

constexpr std::array<std::string_view, 7> kClassNames = {
    "BO", "OOB_RW", "UAF", "UAS", "IF", "DF", "uninit"};

}  // namespace

std::string_view ToString(BugClass c) {
  return kClassNames[static_cast<int>(c)];
}

std::optional<BugClass> BugClassFromString(std::string_view s) {
  for (size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == s) return static_cast<BugClass>(i);
  }
  return std::nullopt;
}

bool ClassSatisfies(BugClass reported, BugClass declared) {
  return reported == declared ||
         (declared == BugClass::kOobRw && reported == BugClass::kBO);
}

std::string_view ToString(DetectorMode m) {
  switch (m) {
    case DetectorMode::kNone:
      return "none";
    case DetectorMode::kRedzone:
      return "redzone";
    case DetectorMode::kExact:
      return "exact";
  }
  return "?";
}

std::optional<DetectorMode> DetectorModeFromString(std::string_view s) {
  if (s == "none") return DetectorMode::kNone;
  if (s == "redzone") return DetectorMode::kRedzone;
  if (s == "exact") return DetectorMode::kExact;
  return std::nullopt;
}

std::string_view ToString(AccessKind k) {
  switch (k) {
    case AccessKind::kRead:
      return "read";
    case AccessKind::kWrite:
      return "write";
    case AccessKind::kFree:
      return "free";
    case AccessKind::kAlloc:
      return "alloc";
  }
  return "?";
}

std::string FormatRecord(const AccessRecord& r) {
  return fmt::format("b{} t{} i{} {} alloc={} idx={} addr={:#x}{}",
                     r.thread.block, r.thread.thread, r.instr_id,
                     ToString(r.kind), r.alloc_id, r.index, r.byte_addr,
                     r.compiler_induced ? " compiler" : "");
}

std::string BugReport::ToJson() const {
  nlohmann::ordered_json j;
  j["class"] = ToString(cls);
  j["instr"] = access.instr_id;
  j["address"] = fmt::format("{:#x}", access.byte_addr);
  j["alloc"] = alloc_id;
  j["distance"] = distance;
  j["detector"] = ToString(detector);
  j["kind"] = ToString(access.kind);
  j["block"] = access.thread.block;
  j["thread"] = access.thread.thread;
  j["index"] = access.index;
  j["compiler_induced"] = access.compiler_induced;
  return j.dump();
}

}  // namespace kfuzz::sanrt
