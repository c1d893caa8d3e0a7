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

// In-process fuzz target: decodes a byte blob into kernel arguments and
// runs the lowered kernel once.
//
// Blob layout, all little-endian:
//   [u8 blocks, u8 threads]      only when the grid comes from the input
//   scalar params                declared widths, in declaration order
//   per buffer param: u32 byte length, then that many content bytes
// Short blobs are zero-extended; lengths beyond the end or the size limit
// are clamped.

#ifndef KFUZZ_FUZZ_HARNESS_H_
#define KFUZZ_FUZZ_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "kfuzz/fuzz/coverage.h"
#include "kfuzz/fuzz/mutator.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/pact/pact.h"
#include "kfuzz/sanrt/launch.h"
#include "kfuzz/sanrt/report.h"

namespace kfuzz::fuzz {

struct HarnessConfig {
  kir::GridConfig grid;
  bool grid_from_input = false;
  // Element count per buffer param, in declaration order. -1 (or a missing
  // entry) sizes the buffer by its content length.
  std::vector<int64_t> buffer_counts;
  int64_t max_buffer_bytes = 1 << 16;
  bool prex = true;
  bool axiprune = false;
  sanrt::DetectorMode detector = sanrt::DetectorMode::kExact;
  int64_t step_budget = 100000;  // per thread
  int64_t timeout_ms = 10000;
  sanrt::Config memory;
};

enum class FindingKind : uint8_t { kKernelCrash, kHostCrash, kHang };

std::string_view ToString(FindingKind k);

// BO and OOB_RW fall into one spatial bucket: how far past the end an
// access lands is a property of the input, not of the bug.
std::string_view DedupClass(sanrt::BugClass c);

struct DedupKey {
  FindingKind kind = FindingKind::kKernelCrash;
  int instr_id = -1;  // faulting instruction, kernel crashes only
  std::string cls;    // DedupClass, or the failing frame for the others

  std::string ToString() const;
  friend auto operator<=>(const DedupKey&, const DedupKey&) = default;
};

struct ExecOutcome {
  enum class Status : uint8_t { kOk, kCrash, kHang };
  Status status = Status::kOk;
  std::optional<DedupKey> key;
  std::string detail;  // report JSON or status message
  int64_t steps = 0;
  int64_t blocks_executed = 0;
};

// The blob codec on its own, for tools that store or replay inputs.
sanrt::KernelInputs DecodeInputs(const kir::Kernel& k,
                                 const HarnessConfig& config, const Bytes& blob,
                                 kir::GridConfig* grid);
Bytes EncodeInputs(const kir::Kernel& k, const HarnessConfig& config,
                   const sanrt::KernelInputs& in,
                   const kir::GridConfig* grid = nullptr);

class Harness {
 public:
  // Lowers the kernel once; fails on lowering errors.
  static absl::StatusOr<Harness> Create(const kir::Kernel& k,
                                        const HarnessConfig& config);

  // Decodes `blob`. The grid comes from the config unless it is part of
  // the input.
  sanrt::KernelInputs Decode(const Bytes& blob, kir::GridConfig* grid) const;
  // Inverse of Decode for well-formed inputs.
  Bytes Encode(const sanrt::KernelInputs& in,
               const kir::GridConfig* grid = nullptr) const;

  // Runs one input in fuzz mode: the first report ends the execution.
  // `trace`, when given, receives edge and access coverage.
  ExecOutcome Run(const Bytes& blob, TraceMap* trace = nullptr) const;

  const kir::Kernel& kernel() const { return kernel_; }
  const pact::LoweredProgram& program() const { return program_; }
  const HarnessConfig& config() const { return config_; }

 private:
  Harness() = default;

  kir::Kernel kernel_;
  pact::LoweredProgram program_;
  HarnessConfig config_;
};

// The key a failed launch status maps to: invalid_launch, out_of_memory,
// bad_argument, timeout or internal.
std::string FrameOf(const absl::Status& s);

}  // namespace kfuzz::fuzz

#endif  // KFUZZ_FUZZ_HARNESS_H_
