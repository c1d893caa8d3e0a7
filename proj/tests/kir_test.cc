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

#include <algorithm>
#include <string>

#include "gtest/gtest.h"
#include "kfuzz/kir/cfg.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/kir/parser.h"
#include "kfuzz/kir/printer.h"
#include "kfuzz/kir/validate.h"
#include "test_util.h"

namespace kfuzz::kir {
namespace {

using ::kfuzz::testing::LoadKernel;
using ::kfuzz::testing::MustParse;

int CountOpcode(const Kernel& k, Opcode op) {
  int n = 0;
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) n += inst.opcode == op;
  }
  return n;
}

Diagnostic Reject(const std::string& text) {
  Diagnostic diag;
  absl::StatusOr<Kernel> k = ParseKernel(text, &diag);
  EXPECT_FALSE(k.ok()) << "accepted:\n" << text;
  return diag;
}

TEST(KirParse, VecAddHasSevenAccessesAndOneBarrier) {
  Kernel k = LoadKernel("vec_add.kir");
  EXPECT_EQ(k.name, "vecAdd");
  EXPECT_EQ(CountMemoryAccesses(k), 7);
  EXPECT_EQ(CountOpcode(k, Opcode::kBarrier), 1);
  EXPECT_EQ(k.shared.size(), 2u);
  EXPECT_EQ(k.params.size(), 3u);
}

TEST(KirParse, GuardedVecAddHasThreeAccesses) {
  EXPECT_EQ(CountMemoryAccesses(LoadKernel("guarded_vec_add.kir")), 3);
}

TEST(KirParse, EmptyBraceBody) {
  Kernel k = MustParse("kernel k(){ return }");
  EXPECT_EQ(CountInstructions(k), 0);
  EXPECT_EQ(CountMemoryAccesses(k), 0);
  ASSERT_EQ(k.blocks.size(), 1u);
  EXPECT_EQ(k.blocks[0].label, "entry");
}

TEST(KirParse, DoubleFreeIsNotASyntaxError) {
  Kernel k = MustParse(
      "kernel k()\n"
      "  p = malloc i32 4\n"
      "  free p\n"
      "  free p\n"
      "  return\n");
  EXPECT_EQ(CountOpcode(k, Opcode::kFree), 2);
}

TEST(KirParse, InstructionIdsFollowTextOrder) {
  Kernel k = LoadKernel("guarded_vec_add.kir");
  int expected = 0;
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs) EXPECT_EQ(inst.id, expected++);
  }
}

TEST(KirParse, FieldsAndHostAllocators) {
  Kernel k = MustParse(
      "kernel k(p: *global_device f32 {4, 4})\n"
      "shared dyn d: i32 {2, 6}\n"
      "entry:\n"
      "  q = malloc.host i64 8\n"
      "  r = alloca f64 3 {1, 2}\n"
      "  x = load p.1[0]\n"
      "  store d.0[1] 7\n"
      "  store r.1[0] x\n"
      "  free.host q\n"
      "  return\n");
  EXPECT_EQ(k.params[0].fields, (std::vector<int64_t>{4, 4}));
  EXPECT_TRUE(k.shared[0].dynamic);
  const Instruction& m = k.blocks[0].instrs[0];
  EXPECT_EQ(m.allocator, Allocator::kHostApi);
  EXPECT_EQ(m.elem, ScalarType::kI64);
  const Instruction& load = k.blocks[0].instrs[2];
  EXPECT_EQ(load.buffer.field, 1);
  EXPECT_EQ(load.buffer.kind, BufferRef::Kind::kParam);
  EXPECT_EQ(k.blocks[0].instrs[5].allocator, Allocator::kHostApi);
}

TEST(KirSyntax, ReportsPositionAndExpectation) {
  Diagnostic d = Reject(
      "kernel k(c: *global_host i32)\n"
      "entry:\n"
      "  store c[0 1\n"
      "  return\n");
  EXPECT_EQ(d.kind, Diagnostic::Kind::kSyntax);
  EXPECT_EQ(d.line, 3);
  EXPECT_EQ(d.col, 13);
  EXPECT_EQ(d.expected, "']'");
}

TEST(KirSyntax, UnknownTypeAndMissingKernel) {
  Diagnostic d = Reject("kernel k(n: u8)\n  return\n");
  EXPECT_EQ(d.line, 1);
  EXPECT_EQ(d.col, 13);
  EXPECT_NE(d.expected.find("scalar type"), std::string::npos);

  d = Reject("\n\n  kernal k()\n");
  EXPECT_EQ(d.line, 3);
  EXPECT_EQ(d.col, 3);
  EXPECT_EQ(d.expected, "'kernel'");
}

TEST(KirSyntax, KeywordsAreNotIdentifiers) {
  Diagnostic d = Reject("kernel k()\n  load = add 1 2\n  return\n");
  EXPECT_EQ(d.kind, Diagnostic::Kind::kSyntax);
  EXPECT_EQ(d.line, 2);
}

TEST(KirSyntax, RejectionIsStable) {
  const std::string bad = "kernel k()\nentry:\n  x = add 1\n  return\n";
  Diagnostic a = Reject(bad);
  Diagnostic b = Reject(bad);
  EXPECT_EQ(a.ToString(), b.ToString());
}

TEST(KirValidate, BarrierUnderThreadBranchRejected) {
  Diagnostic d = Reject(
      "kernel k()\n"
      "entry:\n"
      "  branch (lt threadIdx.x 2) a b\n"
      "a:\n"
      "  barrier\n"
      "  jump b\n"
      "b:\n"
      "  return\n");
  EXPECT_EQ(d.kind, Diagnostic::Kind::kValidation);
  EXPECT_EQ(d.rule, kRuleBarrierDivergence);
  EXPECT_EQ(d.line, 5);
}

TEST(KirValidate, BarrierUnderBlockUniformBranchAccepted) {
  MustParse(
      "kernel k(n: i32)\n"
      "entry:\n"
      "  branch (lt blockIdx.x n) a b\n"
      "a:\n"
      "  barrier\n"
      "  jump b\n"
      "b:\n"
      "  return\n");
}

TEST(KirValidate, BarrierInUniformLoopAcceptedButNotInVariantLoop) {
  MustParse(
      "kernel k(n: i32)\n"
      "entry:\n"
      "  i = add 0 0\n"
      "  jump head\n"
      "head:\n"
      "  branch (lt i n) body done\n"
      "body:\n"
      "  barrier\n"
      "  i = add i 1\n"
      "  jump head\n"
      "done:\n"
      "  return\n");
  Diagnostic d = Reject(
      "kernel k(n: i32)\n"
      "entry:\n"
      "  i = add threadIdx.x 0\n"
      "  jump head\n"
      "head:\n"
      "  branch (lt i n) body done\n"
      "body:\n"
      "  barrier\n"
      "  i = add i 1\n"
      "  jump head\n"
      "done:\n"
      "  return\n");
  EXPECT_EQ(d.rule, kRuleBarrierDivergence);
}

TEST(KirValidate, BranchOnLocalAssignedUnderThreadBranch) {
  Diagnostic d = Reject(
      "kernel k()\n"
      "entry:\n"
      "  f = add 0 0\n"
      "  branch (eq threadIdx.x 0) set join\n"
      "set:\n"
      "  f = add 1 0\n"
      "  jump join\n"
      "join:\n"
      "  branch f s t\n"
      "s:\n"
      "  barrier\n"
      "  jump t\n"
      "t:\n"
      "  return\n");
  EXPECT_EQ(d.rule, kRuleBarrierDivergence);
}

TEST(KirValidate, MultiDimensionalIntrinsic) {
  Diagnostic d = Reject("kernel k()\n  x = add threadIdx.y 0\n  return\n");
  EXPECT_EQ(d.kind, Diagnostic::Kind::kValidation);
  EXPECT_EQ(d.rule, kRuleMultiDimIntrinsic);
  EXPECT_EQ(d.line, 2);
}

TEST(KirValidate, UndefinedLabel) {
  Diagnostic d = Reject("kernel k()\nentry:\n  jump nowhere\n");
  EXPECT_EQ(d.rule, kRuleUndefinedLabel);
  EXPECT_EQ(d.line, 3);
  EXPECT_EQ(d.col, 8);
}

TEST(KirValidate, UseBeforeDefinitionOnSomePath) {
  Diagnostic d = Reject(
      "kernel k(c: *global_host i32, n: i32)\n"
      "entry:\n"
      "  branch (lt n 3) a b\n"
      "a:\n"
      "  x = add 1 2\n"
      "  jump b\n"
      "b:\n"
      "  store c[0] x\n"
      "  return\n");
  EXPECT_EQ(d.rule, kRuleUndefinedLocal);
  EXPECT_EQ(d.line, 8);
}

TEST(KirValidate, MissingTerminator) {
  Diagnostic d = Reject("kernel k()\nentry:\n  barrier\n");
  EXPECT_EQ(d.rule, kRuleTerminator);
}

TEST(KirValidate, IrreducibleLoopRejected) {
  Diagnostic d = Reject(
      "kernel k(n: i32)\n"
      "entry:\n"
      "  branch (lt n 1) a b\n"
      "a:\n"
      "  jump b\n"
      "b:\n"
      "  branch (lt n 2) a done\n"
      "done:\n"
      "  return\n");
  EXPECT_EQ(d.rule, kRuleIrreducible);
}

TEST(KirValidate, ScopeRules) {
  EXPECT_EQ(Reject("kernel k()\n  scope_end\n  return\n").rule,
            kRuleScopeMismatch);
  EXPECT_EQ(Reject("kernel k()\n  scope_begin\n  return\n").rule,
            kRuleScopeMismatch);
  EXPECT_EQ(
      Reject("kernel k()\n  scope_begin\n  barrier\n  scope_end\n  return\n")
          .rule,
      kRuleBarrierInScope);
  MustParse(
      "kernel k()\n  scope_begin\n  p = alloca i32 4\n  scope_end\n  return\n");
}

TEST(KirValidate, PointerRules) {
  EXPECT_EQ(
      Reject("kernel k()\n  p = malloc i32 4\n  x = add p 1\n  return\n").rule,
      kRulePointerMisuse);
  EXPECT_EQ(
      Reject("kernel k()\n  x = add 1 1\n  store x[0] 1\n  return\n").rule,
      kRulePointerMisuse);
  EXPECT_EQ(
      Reject("kernel k(a: *global_host i32)\n  x = add a 1\n  return\n").rule,
      kRuleBufferInExpression);
  EXPECT_EQ(
      Reject("kernel k(a: *global_host i32 {2})\n  store a.1[0] 1\n  return\n")
          .rule,
      kRuleBadField);
}

TEST(KirValidate, SharedSizeMustBeBlockInvariant) {
  EXPECT_EQ(Reject("kernel k()\nshared s: [threadIdx.x] i32\n  return\n").rule,
            kRuleVariantSharedSize);
  MustParse("kernel k(n: i32)\nshared s: [mul n blockDim.x] i32\n  return\n");
}

TEST(KirValidate, DuplicateNames) {
  EXPECT_EQ(Reject("kernel k(a: i32, a: i32)\n  return\n").rule,
            kRuleDuplicateName);
  EXPECT_EQ(Reject("kernel k()\nentry:\n  return\nentry:\n  return\n").rule,
            kRuleDuplicateLabel);
}

TEST(KirRoundTrip, SampleKernels) {
  for (const char* name :
       {"vec_add.kir", "guarded_vec_add.kir", "prune_demo.kir", "gather.kir"}) {
    Kernel k = LoadKernel(name);
    std::string text = PrintKernel(k);
    Kernel again = MustParse(text);
    EXPECT_TRUE(KernelEqual(k, again)) << name << "\n" << text;
    EXPECT_EQ(PrintKernel(again), text);
  }
}

// Every instruction form, binary operator and math function survives a
// print/parse cycle.
TEST(KirRoundTrip, EveryInstructionKind) {
  std::string body;
  for (int op = 0; op <= static_cast<int>(BinaryOp::kGe); ++op) {
    body += "  v" + std::to_string(op) + " = " +
            std::string(ToString(static_cast<BinaryOp>(op))) +
            " (add n 1) -3\n";
  }
  for (int fn = 0; fn <= static_cast<int>(MathFn::kCos); ++fn) {
    body += "  m" + std::to_string(fn) + " = " +
            std::string(ToString(static_cast<MathFn>(fn))) + " 2.5\n";
  }
  std::string text =
      "kernel every(a: *global_host f64 {3, 5}, n: i64, f: f32)\n"
      "shared s: [mul 2 blockDim.x] i32 {1, 1}\n"
      "shared dyn d: f32\n"
      "entry:\n" +
      body +
      "  x = load a[threadIdx.x]\n"
      "  y = load a.1[add gridDim.x blockIdx.x]\n"
      "  store s[0] 1.25e-7\n"
      "  store d[0] (mul x f)\n"
      "  p = alloca i32 4 {2, 2}\n"
      "  q = malloc f32 n\n"
      "  r = malloc.host i64 2\n"
      "  scope_begin\n"
      "  scope_end\n"
      "  barrier\n"
      "  free q\n"
      "  free.host r\n"
      "  free p.1\n"
      "  branch (lt n 0) next done\n"
      "next:\n"
      "  jump done\n"
      "done:\n"
      "  return\n";
  Kernel k = MustParse(text);
  std::vector<bool> seen(static_cast<int>(Opcode::kReturn) + 1, false);
  for (const BasicBlock& bb : k.blocks) {
    for (const Instruction& inst : bb.instrs)
      seen[static_cast<int>(inst.opcode)] = true;
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  Kernel again = MustParse(PrintKernel(k));
  EXPECT_TRUE(KernelEqual(k, again)) << PrintKernel(k);
}

TEST(KirPrint, FloatsStayFloats) {
  EXPECT_EQ(FormatFloat(1.0), "1.0");
  EXPECT_EQ(FormatFloat(-0.5), "-0.5");
  EXPECT_EQ(FormatFloat(1e300), "1e+300");
}

TEST(KirCfg, DiamondControlDependence) {
  Kernel k = MustParse(
      "kernel k(n: i32)\n"
      "entry:\n"
      "  branch (lt n 1) a b\n"
      "a:\n"
      "  jump j\n"
      "b:\n"
      "  jump j\n"
      "j:\n"
      "  return\n");
  Cfg cfg(k);
  EXPECT_EQ(cfg.ipdom(0), 3);
  EXPECT_EQ(cfg.control_deps(1), std::vector<int>{0});
  EXPECT_EQ(cfg.control_deps(2), std::vector<int>{0});
  EXPECT_TRUE(cfg.control_deps(3).empty());
  EXPECT_TRUE(cfg.Dominates(0, 3));
  EXPECT_FALSE(cfg.Dominates(1, 3));
}

TEST(KirCfg, LoopBodyDependsOnHeader) {
  Kernel k = MustParse(
      "kernel k(n: i32)\n"
      "entry:\n"
      "  i = add 0 0\n"
      "  jump head\n"
      "head:\n"
      "  branch (lt i n) body done\n"
      "body:\n"
      "  i = add i 1\n"
      "  jump head\n"
      "done:\n"
      "  return\n");
  Cfg cfg(k);
  EXPECT_TRUE(cfg.IsReducible());
  EXPECT_EQ(cfg.control_deps(2), std::vector<int>{1});
  // The header re-executes only while the loop continues.
  EXPECT_EQ(cfg.control_deps(1), std::vector<int>{1});
}

TEST(KirCfg, VarianceDistinguishesBlockAndGrid) {
  Kernel k = MustParse(
      "kernel k()\n"
      "entry:\n"
      "  b = add blockIdx.x 1\n"
      "  t = add threadIdx.x b\n"
      "  return\n");
  Cfg cfg(k);
  VarianceInfo in_block = AnalyzeVariance(k, cfg, VarianceScope::kWithinBlock);
  VarianceInfo grid = AnalyzeVariance(k, cfg, VarianceScope::kGrid);
  EXPECT_FALSE(in_block.local_variant[k.FindLocal("b")]);
  EXPECT_TRUE(in_block.local_variant[k.FindLocal("t")]);
  EXPECT_TRUE(grid.local_variant[k.FindLocal("b")]);
}

}  // namespace
}  // namespace kfuzz::kir
