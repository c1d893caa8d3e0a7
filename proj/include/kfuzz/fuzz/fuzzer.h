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

// Coverage-guided greybox fuzzing loop.

#ifndef KFUZZ_FUZZ_FUZZER_H_
#define KFUZZ_FUZZ_FUZZER_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kfuzz/fuzz/coverage.h"
#include "kfuzz/fuzz/harness.h"
#include "kfuzz/fuzz/mutator.h"

namespace kfuzz::fuzz {

struct TestCase {
  int id = 0;
  Bytes bytes;
  int parent = -1;
  MutationOp op = MutationOp::kSeed;
  int64_t pos = -1;
  int other_parent = -1;  // splice partner
  int64_t other_pos = -1;
  int depth = 0;        // provenance chain length; seeds are 0
  int64_t execs = 0;    // children executed from this entry
  int64_t new_cov = 0;  // of which were admitted

  // Proportional to new coverage per exec spent, at least 1. Fresh
  // entries get the maximum.
  double energy() const;
};

struct Finding {
  DedupKey key;
  TestCase reproducer;
  std::string detail;
  int64_t exec_index = 0;  // execution that first hit the key
  int64_t hits = 0;        // executions with this key
};

struct CampaignOptions {
  int64_t budget_execs = 100000;
  double budget_seconds = 0;  // 0: no wall-clock limit
  uint64_t seed = 1;
  // Children generated per round; rounds run their executions
  // concurrently and merge in generation order.
  int workers = 1;
  // Campaign directory; empty writes nothing.
  std::string out_dir;
};

struct CampaignState {
  std::vector<TestCase> corpus;
  CoverageMap coverage;
  std::vector<Finding> findings;
  int64_t execs = 0;
  int64_t crashes = 0;  // executions, before dedup
  int64_t hangs = 0;
  double elapsed_seconds = 0;
  int max_depth = 0;
  // Coverage bits after each admission, for monotonicity checks.
  std::vector<int64_t> coverage_history;

  double execs_per_sec() const;
  int64_t kernel_crashes() const;
  int64_t host_crashes() const;
  int64_t hang_findings() const;
  // `key value` lines: execs, execs_per_sec, corpus_size, findings, ...
  std::string StatsText() const;
};

// Fails with FailedPrecondition ("HarnessSetupError") when a seed hangs or
// fails to launch, and InvalidArgument when there are no seeds.
absl::StatusOr<CampaignState> FuzzLoop(const Harness& harness,
                                       const std::vector<Bytes>& seeds,
                                       const CampaignOptions& o);

// Writes corpus/, findings/crashes/, findings/hangs/ and stats.
absl::Status WriteCampaign(const CampaignState& s, const std::string& dir);

}  // namespace kfuzz::fuzz

#endif  // KFUZZ_FUZZ_FUZZER_H_
