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

// Memory-safety benchmark corpus: 100 buggy kernels laid out over a
// spatial/temporal, memory space, allocation kind and bug class taxonomy,
// each paired with a patched twin, and a scorer that runs the corpus under
// one detector and tallies detections per taxonomy row.

#ifndef KFUZZ_GMS_GMSBENCH_H_
#define KFUZZ_GMS_GMSBENCH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/sanrt/launch.h"
#include "kfuzz/sanrt/memory.h"
#include "kfuzz/sanrt/report.h"

namespace kfuzz::gms {

enum class Axis : uint8_t { kSpatial, kTemporal };
enum class Adjacency : uint8_t { kNone, kAdjacent, kNonAdjacent };
enum class Timing : uint8_t { kNone, kImmediate, kDelayed };

std::string_view ToString(Axis a);
std::string_view ToString(Adjacency a);
std::string_view ToString(Timing t);

// One taxonomy row with its fixed case count.
struct Row {
  Axis axis = Axis::kSpatial;
  std::string group;  // global, local, shared, intra_allocation
  std::string kind;   // host, device, intra_frame_static, ...
  sanrt::BugClass cls = sanrt::BugClass::kBO;
  int count = 0;

  std::string label() const;  // "spatial global host BO"
};

// Rows in corpus order. Counts sum to 100.
const std::vector<Row>& Rows();

struct Expectation {
  bool redzone = false;
  bool exact = false;
};

struct CaseDescriptor {
  int id = 0;
  int row = 0;  // index into Rows()
  Axis axis = Axis::kSpatial;
  std::string space;  // global, local, shared
  std::string alloc;  // allocation kind, "intra_allocation" for sub-objects
  sanrt::BugClass cls = sanrt::BugClass::kBO;
  Adjacency adjacency = Adjacency::kNone;
  Timing timing = Timing::kNone;
  std::string shape;  // access pattern
  // Derived from detector semantics when the case is built.
  Expectation expected;

  std::string name() const;
};

struct Program {
  std::string text;
  kir::Kernel kernel;
  kir::GridConfig grid;
  sanrt::KernelInputs inputs;
};

struct Case {
  CaseDescriptor d;
  Program buggy;
  Program patched;
};

// Builds the corpus. Every buggy program is checked against the reference
// interpreter for a bug of its declared class and every twin for none;
// a violation is an Internal error.
absl::StatusOr<std::vector<Case>> Generate(uint64_t seed);

// Runs `p` lowered, every block and thread, collecting all reports.
absl::StatusOr<std::vector<sanrt::BugReport>> RunAudit(
    const Program& p, sanrt::DetectorMode mode,
    const sanrt::Config& memory = {});

// Whether some report has the declared class or a more precise one.
bool Detected(const std::vector<sanrt::BugReport>& reports,
              sanrt::BugClass declared);

struct RowScore {
  int row = 0;
  int total = 0;
  int detected = 0;
  int expected = 0;
};

struct Matrix {
  sanrt::DetectorMode mode = sanrt::DetectorMode::kExact;
  std::vector<RowScore> rows;
  std::vector<bool> detected;  // per case
  int64_t twin_reports = 0;    // reports raised by patched twins

  int total() const;
  int expected_total() const;
  int cases() const;
  bool MatchesExpected() const;
};

absl::StatusOr<Matrix> Score(const std::vector<Case>& cases,
                             sanrt::DetectorMode mode);

// Aligned table: one line per row, group subtotals and the overall total.
std::string MatrixText(const Matrix& redzone, const Matrix& exact);

// One JSON object per line: a record per row, then a summary per detector.
std::string MatrixJsonLines(const Matrix& redzone, const Matrix& exact);

// Writes <name>.kir, <name>.bin, <name>.patched.kir, <name>.patched.bin per
// case and manifest.jsonl. Input blobs use the fuzz harness layout with the
// grid stored in the manifest.
absl::Status WriteCorpus(const std::vector<Case>& cases,
                         const std::string& dir);

}  // namespace kfuzz::gms

#endif  // KFUZZ_GMS_GMSBENCH_H_
