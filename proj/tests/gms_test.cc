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

#include <fmt/format.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "gtest/gtest.h"
#include "json.hpp"
#include "kfuzz/fuzz/harness.h"
#include "kfuzz/gms/gmsbench.h"
#include "kfuzz/kir/parser.h"
#include "kfuzz/refsim/refsim.h"

namespace kfuzz::gms {
namespace {

using sanrt::BugClass;
using sanrt::DetectorMode;

const std::vector<Case>& Corpus() {
  static const std::vector<Case>* c = [] {
    absl::StatusOr<std::vector<Case>> r = Generate(1);
    EXPECT_TRUE(r.ok()) << r.status();
    return new std::vector<Case>(r.ok() ? *std::move(r) : std::vector<Case>{});
  }();
  return *c;
}

struct PinnedRow {
  const char* label;
  int count;
  int redzone;
  int exact;
};

// Expected detections per row under each detector.
constexpr PinnedRow kPinned[] = {
    {"spatial global host BO", 4, 4, 4},
    {"spatial global host OOB_RW", 4, 0, 4},
    {"spatial global device BO", 4, 4, 4},
    {"spatial global device OOB_RW", 4, 0, 4},
    {"spatial local intra_frame_static BO", 3, 3, 3},
    {"spatial local intra_frame_static OOB_RW", 3, 0, 3},
    {"spatial local intra_frame_dynamic BO", 3, 3, 3},
    {"spatial local intra_frame_dynamic OOB_RW", 3, 0, 3},
    {"spatial local inter_frame_static BO", 2, 2, 2},
    {"spatial local inter_frame_static OOB_RW", 2, 0, 2},
    {"spatial local inter_frame_dynamic BO", 2, 2, 2},
    {"spatial local inter_frame_dynamic OOB_RW", 2, 0, 2},
    {"spatial local beyond_local_static BO", 2, 2, 2},
    {"spatial local beyond_local_static OOB_RW", 2, 0, 2},
    {"spatial local beyond_local_dynamic BO", 2, 2, 2},
    {"spatial local beyond_local_dynamic OOB_RW", 2, 0, 2},
    {"spatial shared static BO", 7, 7, 7},
    {"spatial shared static OOB_RW", 7, 0, 7},
    {"spatial shared dynamic BO", 7, 5, 7},
    {"spatial shared dynamic OOB_RW", 7, 0, 0},
    {"spatial intra_allocation global BO", 2, 2, 2},
    {"spatial intra_allocation global OOB_RW", 2, 0, 2},
    {"spatial intra_allocation local BO", 2, 2, 2},
    {"spatial intra_allocation local OOB_RW", 2, 0, 2},
    {"spatial intra_allocation shared BO", 2, 2, 2},
    {"spatial intra_allocation shared OOB_RW", 2, 0, 2},
    {"temporal global host UAF", 2, 1, 2},
    {"temporal global host IF", 3, 1, 3},
    {"temporal global host DF", 1, 1, 1},
    {"temporal global device UAF", 2, 1, 2},
    {"temporal global device IF", 3, 1, 3},
    {"temporal global device DF", 1, 1, 1},
    {"temporal local static UAS", 2, 1, 2},
    {"temporal local dynamic UAS", 2, 1, 2},
};

TEST(GmsRows, CountsMatchTaxonomy) {
  const std::vector<Row>& rows = Rows();
  ASSERT_EQ(rows.size(), std::size(kPinned));
  int total = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].label(), kPinned[i].label);
    EXPECT_EQ(rows[i].count, kPinned[i].count) << kPinned[i].label;
    total += rows[i].count;
  }
  EXPECT_EQ(total, 100);
}

TEST(GmsGenerate, HundredCasesInRowOrder) {
  const std::vector<Case>& cases = Corpus();
  ASSERT_EQ(cases.size(), 100u);
  std::vector<int> per_row(Rows().size(), 0);
  int prev_row = 0;
  for (const Case& c : cases) {
    EXPECT_GE(c.d.row, prev_row);
    prev_row = c.d.row;
    ++per_row[c.d.row];
    EXPECT_EQ(c.d.cls, Rows()[c.d.row].cls);
    EXPECT_EQ(c.d.axis, Rows()[c.d.row].axis);
  }
  for (size_t i = 0; i < per_row.size(); ++i) {
    EXPECT_EQ(per_row[i], kPinned[i].count) << kPinned[i].label;
  }
}

TEST(GmsGenerate, NamesAreUnique) {
  std::set<std::string> names;
  for (const Case& c : Corpus()) names.insert(c.d.name());
  EXPECT_EQ(names.size(), Corpus().size());
}

TEST(GmsGenerate, DeterministicForSeed) {
  absl::StatusOr<std::vector<Case>> a = Generate(7);
  absl::StatusOr<std::vector<Case>> b = Generate(7);
  ASSERT_TRUE(a.ok() && b.ok());
  ASSERT_EQ(a->size(), b->size());
  for (size_t i = 0; i < a->size(); ++i) {
    EXPECT_EQ((*a)[i].buggy.text, (*b)[i].buggy.text);
    EXPECT_EQ((*a)[i].patched.text, (*b)[i].patched.text);
    ASSERT_EQ((*a)[i].buggy.inputs.args.size(),
              (*b)[i].buggy.inputs.args.size());
    for (size_t j = 0; j < (*a)[i].buggy.inputs.args.size(); ++j) {
      EXPECT_EQ((*a)[i].buggy.inputs.args[j].bytes,
                (*b)[i].buggy.inputs.args[j].bytes);
      EXPECT_EQ((*a)[i].buggy.inputs.args[j].scalar.AsInt(),
                (*b)[i].buggy.inputs.args[j].scalar.AsInt());
    }
  }
}

TEST(GmsGenerate, TextReparsesToKernel) {
  for (const Case& c : Corpus()) {
    for (const Program* p : {&c.buggy, &c.patched}) {
      absl::StatusOr<kir::Kernel> k = kir::ParseKernel(p->text);
      ASSERT_TRUE(k.ok()) << c.d.name() << ": " << k.status();
      EXPECT_EQ(k->params.size(), p->kernel.params.size());
    }
  }
}

// Reference interpreter as oracle: the buggy program exhibits its declared
// class and the twin is clean.
TEST(GmsOracle, ReferenceAgreesWithDeclaredClass) {
  for (const Case& c : Corpus()) {
    absl::StatusOr<refsim::Result> bug =
        refsim::RunReference(c.buggy.kernel, c.buggy.grid, c.buggy.inputs);
    ASSERT_TRUE(bug.ok()) << c.d.name() << ": " << bug.status();
    bool found = false;
    for (const refsim::Bug& b : bug->bugs) {
      found |= sanrt::ClassSatisfies(b.cls, c.d.cls);
    }
    EXPECT_TRUE(found) << c.d.name();

    absl::StatusOr<refsim::Result> twin = refsim::RunReference(
        c.patched.kernel, c.patched.grid, c.patched.inputs);
    ASSERT_TRUE(twin.ok()) << c.d.name() << ": " << twin.status();
    EXPECT_TRUE(twin->bugs.empty()) << c.d.name();
  }
}

void ExpectPinned(const Matrix& m, bool redzone) {
  ASSERT_EQ(m.rows.size(), std::size(kPinned));
  for (size_t i = 0; i < m.rows.size(); ++i) {
    const int want = redzone ? kPinned[i].redzone : kPinned[i].exact;
    EXPECT_EQ(m.rows[i].total, kPinned[i].count) << kPinned[i].label;
    EXPECT_EQ(m.rows[i].detected, want) << kPinned[i].label;
    EXPECT_EQ(m.rows[i].expected, want) << kPinned[i].label;
  }
  EXPECT_TRUE(m.MatchesExpected());
  EXPECT_EQ(m.twin_reports, 0);
  EXPECT_EQ(m.cases(), 100);
}

TEST(GmsScore, RedzoneMatrixIsPinned) {
  absl::StatusOr<Matrix> m = Score(Corpus(), DetectorMode::kRedzone);
  ASSERT_TRUE(m.ok()) << m.status();
  ExpectPinned(*m, true);
  EXPECT_EQ(m->total(), 48);
}

TEST(GmsScore, ExactMatrixIsPinned) {
  absl::StatusOr<Matrix> m = Score(Corpus(), DetectorMode::kExact);
  ASSERT_TRUE(m.ok()) << m.status();
  ExpectPinned(*m, false);
  EXPECT_EQ(m->total(), 93);
}

TEST(GmsScore, MatrixIsStableAcrossSeeds) {
  for (uint64_t seed : {2u, 3u, 11u, 97u}) {
    absl::StatusOr<std::vector<Case>> cases = Generate(seed);
    ASSERT_TRUE(cases.ok()) << cases.status();
    absl::StatusOr<Matrix> rz = Score(*cases, DetectorMode::kRedzone);
    absl::StatusOr<Matrix> ex = Score(*cases, DetectorMode::kExact);
    ASSERT_TRUE(rz.ok() && ex.ok());
    EXPECT_EQ(rz->total(), 48) << seed;
    EXPECT_EQ(ex->total(), 93) << seed;
    EXPECT_TRUE(rz->MatchesExpected()) << seed;
    EXPECT_TRUE(ex->MatchesExpected()) << seed;
    EXPECT_EQ(rz->twin_reports + ex->twin_reports, 0) << seed;
  }
}

TEST(GmsScore, ExactDominatesRedzoneOnSpatialCases) {
  absl::StatusOr<Matrix> rz = Score(Corpus(), DetectorMode::kRedzone);
  absl::StatusOr<Matrix> ex = Score(Corpus(), DetectorMode::kExact);
  ASSERT_TRUE(rz.ok() && ex.ok());
  const std::vector<Case>& cases = Corpus();
  for (size_t i = 0; i < cases.size(); ++i) {
    if (cases[i].d.axis != Axis::kSpatial) continue;
    if (cases[i].d.space == "shared" && cases[i].d.alloc == "dynamic") continue;
    if (rz->detected[i]) EXPECT_TRUE(ex->detected[i]) << cases[i].d.name();
  }
}

TEST(GmsScore, BoundaryOverflowsAreRedzoneVisibleOutsideDynamicShared) {
  absl::StatusOr<Matrix> rz = Score(Corpus(), DetectorMode::kRedzone);
  ASSERT_TRUE(rz.ok());
  const std::vector<Case>& cases = Corpus();
  for (size_t i = 0; i < cases.size(); ++i) {
    const CaseDescriptor& d = cases[i].d;
    if (d.axis != Axis::kSpatial) continue;
    if (d.cls == BugClass::kOobRw) {
      EXPECT_FALSE(rz->detected[i]) << d.name();
    } else if (!(d.space == "shared" && d.alloc == "dynamic")) {
      EXPECT_TRUE(rz->detected[i]) << d.name();
    }
  }
}

TEST(GmsAudit, LargeQuarantineExposesDelayedUseAfterFree) {
  sanrt::Config big;
  big.quarantine_bytes = int64_t{32} << 20;
  int delayed = 0;
  for (const Case& c : Corpus()) {
    if (c.d.cls != BugClass::kUAF || c.d.timing != Timing::kDelayed) continue;
    ++delayed;
    absl::StatusOr<std::vector<sanrt::BugReport>> dflt =
        RunAudit(c.buggy, DetectorMode::kRedzone);
    absl::StatusOr<std::vector<sanrt::BugReport>> wide =
        RunAudit(c.buggy, DetectorMode::kRedzone, big);
    ASSERT_TRUE(dflt.ok() && wide.ok());
    EXPECT_FALSE(Detected(*dflt, c.d.cls)) << c.d.name();
    EXPECT_TRUE(Detected(*wide, c.d.cls)) << c.d.name();
  }
  EXPECT_EQ(delayed, 2);
}

TEST(GmsAudit, DetectedHonoursClassRefinement) {
  sanrt::BugReport r;
  r.cls = BugClass::kBO;
  EXPECT_TRUE(Detected({r}, BugClass::kOobRw));
  EXPECT_TRUE(Detected({r}, BugClass::kBO));
  EXPECT_FALSE(Detected({r}, BugClass::kUAF));
  EXPECT_FALSE(Detected({}, BugClass::kBO));
}

TEST(GmsReport, TextAndJsonSummaries) {
  absl::StatusOr<Matrix> rz = Score(Corpus(), DetectorMode::kRedzone);
  absl::StatusOr<Matrix> ex = Score(Corpus(), DetectorMode::kExact);
  ASSERT_TRUE(rz.ok() && ex.ok());
  const std::string text = MatrixText(*rz, *ex);
  EXPECT_NE(text.find("48/100"), std::string::npos) << text;
  EXPECT_NE(text.find("93/100"), std::string::npos) << text;

  std::istringstream lines(MatrixJsonLines(*rz, *ex));
  std::string line;
  int rows = 0;
  int summaries = 0;
  while (std::getline(lines, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    if (j["type"] == "row") {
      ++rows;
    } else {
      ++summaries;
    }
  }
  EXPECT_EQ(rows, static_cast<int>(std::size(kPinned)));
  EXPECT_GE(summaries, 1);
}

TEST(GmsCorpus, WritesFilesAndRoundTripsInputs) {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / fmt::format("kfuzz_gms_{}", ::getpid());
  fs::remove_all(dir);
  ASSERT_TRUE(WriteCorpus(Corpus(), dir.string()).ok());

  std::ifstream manifest(dir / "manifest.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(manifest, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    const Case& c = Corpus()[n];
    EXPECT_EQ(j["name"], c.d.name());
    for (const auto& [key, prog] :
         {std::pair<std::string, const Program*>{"buggy", &c.buggy},
          {"patched", &c.patched}}) {
      const fs::path kir = dir / j[key]["kernel"].get<std::string>();
      const fs::path bin = dir / j[key]["input"].get<std::string>();
      ASSERT_TRUE(fs::exists(kir)) << kir;
      ASSERT_TRUE(fs::exists(bin)) << bin;
      EXPECT_EQ(j[key]["grid"]["blocks"].get<int64_t>(), prog->grid.blocks);
      EXPECT_EQ(j[key]["grid"]["threads"].get<int64_t>(), prog->grid.threads);

      std::ifstream in(bin, std::ios::binary);
      const fuzz::Bytes blob((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
      fuzz::HarnessConfig config;
      config.grid = prog->grid;
      const sanrt::KernelInputs back =
          fuzz::DecodeInputs(prog->kernel, config, blob, nullptr);
      ASSERT_EQ(back.args.size(), prog->inputs.args.size());
      for (size_t a = 0; a < back.args.size(); ++a) {
        if (prog->kernel.params[a].is_buffer()) {
          EXPECT_EQ(back.args[a].bytes, prog->inputs.args[a].bytes);
        } else {
          EXPECT_EQ(back.args[a].scalar.AsInt(),
                    prog->inputs.args[a].scalar.AsInt());
        }
      }
    }
    ++n;
  }
  EXPECT_EQ(n, 100);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace kfuzz::gms
