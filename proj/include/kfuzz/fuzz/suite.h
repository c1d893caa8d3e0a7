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

// Kernels with one seeded, input-reachable bug each, and bug-free seeds.
// Used to measure whether a campaign finds each bug exactly once.

#ifndef KFUZZ_FUZZ_SUITE_H_
#define KFUZZ_FUZZ_SUITE_H_

#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "kfuzz/fuzz/harness.h"

namespace kfuzz::fuzz {

struct SuiteEntry {
  std::string name;
  std::string text;  // kernel source
  HarnessConfig config;
  sanrt::KernelInputs seed;
  DedupKey expected;
};

const std::vector<SuiteEntry>& SeededSuite();

struct SuiteTarget {
  Harness harness;
  std::vector<Bytes> seeds;
};

absl::StatusOr<SuiteTarget> BuildTarget(const SuiteEntry& e);

}  // namespace kfuzz::fuzz

#endif  // KFUZZ_FUZZ_SUITE_H_
