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

#include "kfuzz/axiprune/axiprune.h"

#include <random>
#include <set>
#include <tuple>

#include "gen/kernel_gen.h"
#include "gtest/gtest.h"
#include "kfuzz/kir/validate.h"
#include "kfuzz/refsim/refsim.h"
#include "test_util.h"

namespace kfuzz::axiprune {
namespace {

using sanrt::AccessKind;
using sanrt::BugClass;
using testing::LoadKernel;
using testing::MustParse;

int CountOpcode(const kir::Kernel& k, kir::Opcode op) {
  int n = 0;
  for (const auto& bb : k.blocks) {
    for (const auto& in : bb.instrs) n += in.opcode == op;
  }
  return n;
}

TEST(AxiPrune, StagedDemoKernel) {
  const kir::Kernel k = LoadKernel("prune_demo.kir");
  const auto [out, report] = Prune(k);
  EXPECT_EQ(report.barriers_removed, std::vector<int>{5});
  EXPECT_EQ(report.math_removed, std::vector<int>{3});
  ASSERT_EQ(report.math_retained.size(), 1u);
  EXPECT_EQ(report.math_retained.at(8),
            std::vector<RetainReason>{RetainReason::kUsedInBranch});
  EXPECT_EQ(CountOpcode(out, kir::Opcode::kBarrier), 0);
  EXPECT_EQ(CountOpcode(out, kir::Opcode::kMath), 1);
  EXPECT_TRUE(kir::ValidateKernel(out).ok());
  EXPECT_EQ(DumpPruneReport(k, report),
            "prune pruneDemo\n"
            "barriers_removed 1 ids=[5]\n"
            "math_removed 1 ids=[3]\n"
            "math_retained 1\n"
            "retained i8 used_in_branch\n");
}

TEST(AxiPrune, SharedValueAsIndexKeepsBarriers) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host i32)\n"
      "shared s: [blockDim.x] i32\n"
      "  store s[threadIdx.x] threadIdx.x\n"
      "  barrier\n"
      "  t = load s[threadIdx.x]\n"
      "  store c[t] 1\n"
      "  return\n");
  const auto [out, report] = Prune(k);
  EXPECT_TRUE(report.barriers_removed.empty());
  EXPECT_EQ(report.barrier_blocker, "i3 uses a shared value as an index");
  EXPECT_TRUE(kir::KernelEqual(out, k));
}

TEST(AxiPrune, BarrierFreeKernelUnchanged) {
  const kir::Kernel k = LoadKernel("guarded_vec_add.kir");
  const auto [out, report] = Prune(k);
  EXPECT_TRUE(kir::KernelEqual(out, k));
  EXPECT_TRUE(report.barriers_removed.empty());
  EXPECT_TRUE(report.math_removed.empty());
  EXPECT_TRUE(report.math_retained.empty());
}

TEST(AxiPrune, MathUsedAsIndexIsRetained) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host f32, x: f32)\n"
      "  t = sqrt x\n"
      "  store c[t] 1.0\n"
      "  return\n");
  const auto [out, report] = Prune(k);
  EXPECT_TRUE(report.math_removed.empty());
  EXPECT_EQ(report.math_retained.at(0),
            std::vector<RetainReason>{RetainReason::kUsedAsIndex});
  EXPECT_TRUE(kir::KernelEqual(out, k));
}

TEST(AxiPrune, VecAddLosesItsBarrier) {
  const kir::Kernel k = LoadKernel("vec_add.kir");
  const auto [out, report] = Prune(k);
  EXPECT_EQ(report.barriers_removed, std::vector<int>{5});
  EXPECT_TRUE(report.math_removed.empty());
  EXPECT_EQ(CountOpcode(out, kir::Opcode::kBarrier), 0);
}

TEST(AxiPrune, FullyIndexRelevantKernelIsIdentity) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host i32, x: f32)\n"
      "  a = exp x\n"
      "  b = log a\n"
      "  x2 = load c[b]\n"
      "  store c[x2] 0\n"
      "  return\n");
  const auto [out, report] = Prune(k);
  EXPECT_TRUE(kir::KernelEqual(out, k));
  EXPECT_TRUE(report.barriers_removed.empty());
  EXPECT_TRUE(report.math_removed.empty());
  EXPECT_EQ(report.math_retained.size(), 2u);
}

TEST(AxiPrune, ChainedMathIsSubstituted) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host f32, x: f32)\n"
      "  a = exp x\n"
      "  b = sin a\n"
      "  store c[threadIdx.x] (add b 1.0)\n"
      "  return\n");
  const auto [out, report] = Prune(k);
  EXPECT_EQ(report.math_removed, (std::vector<int>{0, 1}));
  ASSERT_EQ(out.blocks[0].instrs.size(), 2u);
  const kir::Instruction& store = out.blocks[0].instrs[0];
  EXPECT_EQ(store.id, 2);
  EXPECT_TRUE(kir::ExprEqual(
      store.b, kir::Expr::Binary(kir::BinaryOp::kAdd, kir::Expr::Param(1),
                                 kir::Expr::Float(1.0))));
  EXPECT_TRUE(kir::ValidateKernel(out).ok());
}

TEST(AxiPrune, MultiplyDefinedOutputBecomesCopy) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host f32, x: f32)\n"
      "entry:\n"
      "  a = cos x\n"
      "  branch (lt threadIdx.x 1) more done\n"
      "more:\n"
      "  a = add a 1.0\n"
      "  jump done\n"
      "done:\n"
      "  store c[threadIdx.x] a\n"
      "  return\n");
  const auto [out, report] = Prune(k);
  EXPECT_EQ(report.math_removed, std::vector<int>{0});
  EXPECT_EQ(out.blocks[0].instrs[0].opcode, kir::Opcode::kArith);
  EXPECT_EQ(out.blocks[0].instrs[0].id, 0);
}

TEST(AxiPrune, VariableOnlyModeIgnoresDerivedValues) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host i32)\n"
      "shared s: [blockDim.x] i32\n"
      "  store s[threadIdx.x] 3\n"
      "  barrier\n"
      "  v = load s[threadIdx.x]\n"
      "  w = add v 1\n"
      "  store c[w] 1\n"
      "  return\n");
  EXPECT_TRUE(Prune(k).second.barriers_removed.empty());
  Options o;
  o.transitive = false;
  EXPECT_EQ(Prune(k, o).second.barriers_removed, std::vector<int>{1});
}

TEST(AxiPrune, DeviceHeapKeepsBarriers) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host i32)\n"
      "  p = malloc i32 4\n"
      "  barrier\n"
      "  store p[1] 2\n"
      "  free p\n"
      "  return\n");
  const auto [out, report] = Prune(k);
  EXPECT_TRUE(report.barriers_removed.empty());
  EXPECT_EQ(report.barrier_blocker, "device heap operations");
}

TEST(AxiPrune, GlobalValuesWrittenByNeighboursKeepBarriers) {
  const kir::Kernel k = MustParse(
      "kernel k(c: *global_host i32, d: *global_host i32)\n"
      "  store c[threadIdx.x] threadIdx.x\n"
      "  barrier\n"
      "  j = load c[rem (add threadIdx.x 1) blockDim.x]\n"
      "  store d[j] 1\n"
      "  return\n");
  EXPECT_TRUE(Prune(k).second.barriers_removed.empty());
}

using AccessKey = std::tuple<int, uint64_t, AccessKind>;

std::multiset<AccessKey> Accesses(const refsim::Result& r) {
  std::multiset<AccessKey> out;
  for (const auto& rec : r.trace) {
    if (rec.instr_id < 0) continue;
    if (rec.kind != AccessKind::kRead && rec.kind != AccessKind::kWrite) {
      continue;
    }
    out.emplace(rec.instr_id, rec.byte_addr, rec.kind);
  }
  return out;
}

std::set<refsim::Bug> SpatialBugs(const refsim::BugSet& bugs) {
  std::set<refsim::Bug> out;
  for (const refsim::Bug& b : bugs) {
    if (b.cls == BugClass::kBO || b.cls == BugClass::kOobRw) out.insert(b);
  }
  return out;
}

// Swaps the function of one math instruction.
kir::Kernel Perturb(const kir::Kernel& k, int id) {
  kir::Kernel out = k;
  for (auto& bb : out.blocks) {
    for (auto& in : bb.instrs) {
      if (in.id == id) {
        in.math = in.math == kir::MathFn::kSin ? kir::MathFn::kExp
                                               : kir::MathFn::kSin;
      }
    }
  }
  return out;
}

void CheckPreservation(const gen::Case& c, std::mt19937_64& rng,
                       int* barriers_removed, int* math_removed) {
  const auto [pruned, report] = Prune(c.kernel);
  ASSERT_TRUE(kir::ValidateKernel(pruned).ok()) << c.text;
  *barriers_removed += !report.barriers_removed.empty();
  *math_removed += static_cast<int>(report.math_removed.size());
  for (int round = 0; round < 3; ++round) {
    const sanrt::KernelInputs in =
        round == 0 ? c.inputs : gen::RandomInputs(rng, c);
    auto a = refsim::RunReference(c.kernel, c.grid, in);
    auto b = refsim::RunReference(pruned, c.grid, in);
    ASSERT_TRUE(a.ok() && b.ok()) << c.text;
    ASSERT_EQ(Accesses(*a), Accesses(*b)) << c.text;
    ASSERT_EQ(SpatialBugs(a->bugs), SpatialBugs(b->bugs)) << c.text;
    ASSERT_LE(b->steps, a->steps);
    // A removed call is irrelevant to addresses: changing what it computes
    // in the original kernel leaves every access where it was.
    for (int id : report.math_removed) {
      auto p = refsim::RunReference(Perturb(c.kernel, id), c.grid, in);
      ASSERT_TRUE(p.ok());
      ASSERT_EQ(Accesses(*p), Accesses(*a)) << "i" << id << "\n" << c.text;
    }
  }
}

TEST(AxiPruneProperty, PreservesAccessesOnPrunableKernels) {
  std::mt19937_64 rng(31337);
  int barriers = 0, math = 0;
  for (int iter = 0; iter < 300; ++iter) {
    CheckPreservation(gen::RandomPrunableCase(rng), rng, &barriers, &math);
    if (HasFatalFailure()) return;
  }
  EXPECT_GT(barriers, 50);
  EXPECT_GT(math, 100);
}

TEST(AxiPruneProperty, PreservesAccessesOnRaceFreeKernels) {
  std::mt19937_64 rng(2718);
  int barriers = 0, math = 0;
  for (int iter = 0; iter < 200; ++iter) {
    CheckPreservation(gen::RandomRaceFreeCase(rng, {}), rng, &barriers, &math);
    if (HasFatalFailure()) return;
  }
  EXPECT_GT(barriers, 10);
  EXPECT_GT(math, 50);
}

}  // namespace
}  // namespace kfuzz::axiprune
