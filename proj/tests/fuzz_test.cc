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

#include <bit>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "kfuzz/fuzz/coverage.h"
#include "kfuzz/fuzz/fuzzer.h"
#include "kfuzz/fuzz/harness.h"
#include "kfuzz/fuzz/mutator.h"
#include "kfuzz/fuzz/suite.h"
#include "test_util.h"

namespace kfuzz::fuzz {
namespace {

using sanrt::Arg;
using sanrt::Value;
using testing::MustParse;

TEST(Coverage, Buckets) {
  const std::vector<std::pair<uint32_t, uint8_t>> want = {
      {0, 0},   {1, 1},    {2, 2},     {3, 4},    {4, 8},
      {7, 8},   {8, 16},   {15, 16},   {16, 32},  {31, 32},
      {32, 64}, {127, 64}, {128, 128}, {255, 128}};
  for (const auto& [hits, bucket] : want)
    EXPECT_EQ(BucketOf(hits), bucket) << hits;
}

TraceMap RandomTrace(std::mt19937_64& rng) {
  TraceMap t;
  const int n = static_cast<int>(rng() % 40);
  for (int i = 0; i < n; ++i) t.Visit(static_cast<int>(rng() % 12));
  for (int i = 0; i < 3; ++i) {
    if (rng() % 2) t.VisitAccess(static_cast<int>(rng() % 10));
  }
  return t;
}

TEST(CoverageProperty, MergeIsCommutativeAssociativeIdempotent) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 50; ++iter) {
    CoverageMap a, b, c;
    a.Merge(RandomTrace(rng));
    b.Merge(RandomTrace(rng));
    c.Merge(RandomTrace(rng));
    CoverageMap ab = a, ba = b;
    ab.Merge(b);
    ba.Merge(a);
    EXPECT_TRUE(ab == ba);
    CoverageMap ab_c = ab, a_bc = a, bc = b;
    ab_c.Merge(c);
    bc.Merge(c);
    a_bc.Merge(bc);
    EXPECT_TRUE(ab_c == a_bc);
    CoverageMap aa = a;
    aa.Merge(a);
    EXPECT_TRUE(aa == a);
  }
}

TEST(Coverage, NewnessFollowsBuckets) {
  CoverageMap m;
  TraceMap t;
  t.Visit(1);
  t.Visit(2);
  EXPECT_TRUE(m.HasNew(t));
  EXPECT_TRUE(m.Merge(t));
  EXPECT_FALSE(m.HasNew(t));
  EXPECT_FALSE(m.Merge(t));
  // Same edges taken twice more land in a new bucket.
  TraceMap twice;
  for (int i = 0; i < 2; ++i) {
    twice.Visit(1);
    twice.Visit(2);
  }
  EXPECT_TRUE(m.Merge(twice));
  TraceMap acc;
  acc.VisitAccess(3);
  EXPECT_TRUE(m.Merge(acc));
  EXPECT_FALSE(m.Merge(acc));
  t.Reset();
  EXPECT_FALSE(m.HasNew(t));
}

int BitDistance(const Bytes& a, const Bytes& b) {
  int d = 0;
  for (size_t i = 0; i < a.size(); ++i)
    d += std::popcount<uint8_t>(a[i] ^ b[i]);
  return d;
}

TEST(Mutator, BitFlipChangesExactlyOneBit) {
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const Mutation m = ApplyMutation(MutationOp::kBitFlip, {0x00}, seed);
    ASSERT_EQ(m.bytes.size(), 1u);
    EXPECT_EQ(BitDistance(m.bytes, {0x00}), 1);
    EXPECT_EQ(m.pos, 0);
  }
}

TEST(Mutator, DeterministicGivenInputAndSeed) {
  const Bytes in = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Bytes other = {9, 9, 9};
  std::set<Bytes> distinct;
  for (uint64_t seed = 0; seed < 300; ++seed) {
    const Mutation a = Mutate(in, seed, &other);
    const Mutation b = Mutate(in, seed, &other);
    EXPECT_EQ(a.bytes, b.bytes);
    EXPECT_EQ(a.op, b.op);
    EXPECT_EQ(a.pos, b.pos);
    distinct.insert(a.bytes);
  }
  EXPECT_GT(distinct.size(), 100u);
}

TEST(Mutator, EveryOperatorIsReachable) {
  const Bytes in(16, 7);
  const Bytes other(8, 1);
  std::set<MutationOp> ops;
  for (uint64_t seed = 0; seed < 500; ++seed)
    ops.insert(Mutate(in, seed, &other).op);
  EXPECT_EQ(ops.size(), static_cast<size_t>(kMutationOpCount - 1));
}

TEST(Mutator, SpliceBoundsAndProvenance) {
  const Bytes a = {1, 2, 3, 4, 5, 6, 7, 8};
  const Bytes b = {11, 12, 13, 14, 15, 16, 17, 18};
  std::set<std::pair<int64_t, int64_t>> cuts;
  for (uint64_t seed = 0; seed < 2000; ++seed) {
    const Mutation m = ApplyMutation(MutationOp::kSplice, a, seed, &b);
    ASSERT_EQ(m.op, MutationOp::kSplice);
    ASSERT_GE(m.bytes.size(), 1u);
    ASSERT_LE(m.bytes.size(), 16u);
    ASSERT_GE(m.pos, 1);
    ASSERT_LE(m.pos, 8);
    ASSERT_GE(m.other_pos, 0);
    ASSERT_LE(m.other_pos, 7);
    Bytes want(a.begin(), a.begin() + m.pos);
    want.insert(want.end(), b.begin() + m.other_pos, b.end());
    ASSERT_EQ(m.bytes, want);
    cuts.emplace(m.pos, m.other_pos);
  }
  // All 8 x 8 cut pairs are produced.
  EXPECT_EQ(cuts.size(), 64u);
}

TEST(Mutator, StructuralOperators) {
  const Bytes in = {1, 2, 3, 4};
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Mutation d = ApplyMutation(MutationOp::kDuplicate, in, seed);
    EXPECT_GT(d.bytes.size(), in.size());
    const Mutation r = ApplyMutation(MutationOp::kRemove, in, seed);
    EXPECT_LT(r.bytes.size(), in.size());
    EXPECT_GE(r.bytes.size(), 1u);
    const Mutation a = ApplyMutation(MutationOp::kArith, in, seed);
    EXPECT_EQ(a.bytes.size(), in.size());
    EXPECT_NE(a.bytes, in);
  }
  EXPECT_EQ(ApplyMutation(MutationOp::kRemove, {5}, 1).op,
            MutationOp::kBitFlip);
  EXPECT_EQ(ApplyMutation(MutationOp::kSplice, {5}, 1).op,
            MutationOp::kBitFlip);
  EXPECT_EQ(ApplyMutation(MutationOp::kByteFlip, {}, 1).bytes.size(), 1u);
}

Harness MustHarness(const std::string& text, const HarnessConfig& c) {
  absl::StatusOr<Harness> h = Harness::Create(MustParse(text), c);
  EXPECT_TRUE(h.ok()) << h.status();
  return *std::move(h);
}

const char kTwoParams[] =
    "kernel k(a: *global_host i32, x: i32, b: *global_host f32, y: i64)\n"
    "  store a[0] x\n"
    "  return\n";

TEST(Harness, EncodeDecodeRoundTrip) {
  HarnessConfig c;
  c.buffer_counts = {4, -1};
  const Harness h = MustHarness(kTwoParams, c);
  const sanrt::KernelInputs in{
      {Arg::Buffer(4, sanrt::PackInts({1, 2, 3, 4}, kir::ScalarType::kI32)),
       Arg::Scalar(Value::Int(-7)),
       Arg::Buffer(2, sanrt::PackFloats({1.5, 2.5}, kir::ScalarType::kF32)),
       Arg::Scalar(Value::Int(1LL << 40))}};
  const Bytes blob = h.Encode(in);
  // 4 + 8 scalar bytes, then two length-prefixed buffers.
  EXPECT_EQ(blob.size(), 4u + 8u + 4u + 16u + 4u + 8u);
  kir::GridConfig g;
  const sanrt::KernelInputs back = h.Decode(blob, &g);
  ASSERT_EQ(back.args.size(), 4u);
  EXPECT_EQ(back.args[0].count, 4);
  EXPECT_EQ(back.args[0].bytes, in.args[0].bytes);
  EXPECT_EQ(back.args[1].scalar.AsInt(), -7);
  EXPECT_EQ(back.args[2].count, 2);
  EXPECT_EQ(back.args[2].bytes, in.args[2].bytes);
  EXPECT_EQ(back.args[3].scalar.AsInt(), 1LL << 40);
}

TEST(Harness, MalformedLengthsAreClamped) {
  HarnessConfig c;
  c.buffer_counts = {-1, -1};
  c.max_buffer_bytes = 8;
  const Harness h = MustHarness(kTwoParams, c);
  // Scalars, then a length of 0xFFFFFFFF followed by 20 bytes.
  Bytes blob(12, 0);
  for (int i = 0; i < 4; ++i) blob.push_back(0xFF);
  for (int i = 0; i < 20; ++i) blob.push_back(static_cast<uint8_t>(i));
  kir::GridConfig g;
  const sanrt::KernelInputs in = h.Decode(blob, &g);
  EXPECT_EQ(in.args[0].bytes.size(), 8u);
  EXPECT_EQ(in.args[0].count, 2);
  // The second buffer's prefix is read from what remains.
  EXPECT_LE(in.args[2].bytes.size(), 8u);
  // A truncated blob decodes to zeros.
  const sanrt::KernelInputs empty = h.Decode({}, &g);
  EXPECT_EQ(empty.args[1].scalar.AsInt(), 0);
  EXPECT_EQ(empty.args[0].count, 0);
}

TEST(Harness, ZeroDimensionsAreAStructuredHostCrash) {
  HarnessConfig c;
  c.grid_from_input = true;
  c.buffer_counts = {1};
  const Harness h = MustHarness(
      "kernel k(out: *global_host i32)\n  store out[0] 1\n  return\n", c);
  for (const Bytes& blob : {Bytes{0, 4}, Bytes{4, 0}, Bytes{}}) {
    const ExecOutcome out = h.Run(blob);
    EXPECT_EQ(out.status, ExecOutcome::Status::kCrash);
    ASSERT_TRUE(out.key.has_value());
    EXPECT_EQ(out.key->ToString(), "host_crash:invalid_launch");
  }
  EXPECT_EQ(h.Run({3, 5}).status, ExecOutcome::Status::kOk);
}

// A crashing input for each suite entry, written by hand.
sanrt::KernelInputs BuggyInput(const SuiteEntry& e, kir::GridConfig* grid) {
  sanrt::KernelInputs in = e.seed;
  *grid = e.config.grid;
  auto set_scalar = [&](size_t i, int64_t v) {
    in.args[i].scalar = Value::Int(v);
  };
  if (e.name == "scalar_index") set_scalar(1, 16);
  if (e.name == "indirect_index") {
    in.args[0].bytes =
        sanrt::PackInts({0, 1, 2, 3, 4, 5, 6, 99}, kir::ScalarType::kI32);
  }
  if (e.name == "alloc_size") set_scalar(1, 2147483647);
  if (e.name == "zero_dim") grid->threads = 0;
  if (e.name == "threshold") set_scalar(1, 1001);
  if (e.name == "nested_branch") {
    set_scalar(1, -1);
    set_scalar(2, 5001);
  }
  if (e.name == "alloca_count") set_scalar(1, 3);
  if (e.name == "shared_offset") set_scalar(1, -1);
  if (e.name == "uaf_flag") set_scalar(1, 4);
  if (e.name == "loop_bound") set_scalar(1, 100000);
  return in;
}

TEST(Suite, SeedsAreCleanAndEachBugHasTheDeclaredKey) {
  const std::vector<SuiteEntry>& suite = SeededSuite();
  ASSERT_EQ(suite.size(), 10u);
  std::set<std::string> names;
  for (const SuiteEntry& e : suite) {
    names.insert(e.name);
    absl::StatusOr<SuiteTarget> t = BuildTarget(e);
    ASSERT_TRUE(t.ok()) << e.name << ": " << t.status();
    const ExecOutcome clean = t->harness.Run(t->seeds.at(0));
    EXPECT_EQ(clean.status, ExecOutcome::Status::kOk)
        << e.name << ": " << clean.detail;
    kir::GridConfig g;
    const sanrt::KernelInputs in = BuggyInput(e, &g);
    const ExecOutcome bad = t->harness.Run(t->harness.Encode(in, &g));
    ASSERT_TRUE(bad.key.has_value()) << e.name;
    EXPECT_EQ(bad.key->ToString(), e.expected.ToString()) << e.name;
  }
  EXPECT_EQ(names.size(), 10u);
}

TEST(Fuzzer, CrashFreeKernelKeepsTheSeedCorpus) {
  HarnessConfig c;
  c.grid = {2, 4, 0};
  c.buffer_counts = {8};
  const Harness h = MustHarness(
      "kernel k(out: *global_host i32, x: i32)\n"
      "  store out[threadIdx.x] 3\n"
      "  return\n",
      c);
  const Bytes seed = h.Encode({{Arg::Buffer(8), Arg::Scalar(Value::Int(1))}});
  CampaignOptions o;
  o.budget_execs = 2000;
  absl::StatusOr<CampaignState> s = FuzzLoop(h, {seed}, o);
  ASSERT_TRUE(s.ok()) << s.status();
  EXPECT_TRUE(s->findings.empty());
  EXPECT_EQ(s->corpus.size(), 1u);
  EXPECT_EQ(s->execs, 2000);
}

TEST(Fuzzer, ScalarIndexIsFoundOnceAndReproduces) {
  const SuiteEntry& e = SeededSuite().at(0);
  absl::StatusOr<SuiteTarget> t = BuildTarget(e);
  ASSERT_TRUE(t.ok());
  CampaignOptions o;
  o.budget_execs = 20000;
  o.seed = 3;
  absl::StatusOr<CampaignState> s = FuzzLoop(t->harness, t->seeds, o);
  ASSERT_TRUE(s.ok());
  ASSERT_EQ(s->findings.size(), 1u);
  const Finding& f = s->findings[0];
  EXPECT_EQ(f.key.ToString(), "kernel_crash:i0:spatial");
  // Many crashing inputs, one finding.
  EXPECT_GT(f.hits, 1);
  EXPECT_EQ(s->crashes, f.hits);
  const ExecOutcome again = t->harness.Run(f.reproducer.bytes);
  ASSERT_TRUE(again.key.has_value());
  EXPECT_EQ(*again.key, f.key);
}

TEST(Fuzzer, SameSeedSameCampaign) {
  const SuiteEntry& e = SeededSuite().at(5);  // nested branches
  absl::StatusOr<SuiteTarget> t = BuildTarget(e);
  ASSERT_TRUE(t.ok());
  for (int workers : {1, 3}) {
    CampaignOptions o;
    o.budget_execs = 5000;
    o.seed = 11;
    o.workers = workers;
    absl::StatusOr<CampaignState> a = FuzzLoop(t->harness, t->seeds, o);
    absl::StatusOr<CampaignState> b = FuzzLoop(t->harness, t->seeds, o);
    ASSERT_TRUE(a.ok() && b.ok());
    ASSERT_EQ(a->corpus.size(), b->corpus.size());
    for (size_t i = 0; i < a->corpus.size(); ++i) {
      EXPECT_EQ(a->corpus[i].bytes, b->corpus[i].bytes);
    }
    ASSERT_EQ(a->findings.size(), b->findings.size());
    EXPECT_TRUE(a->coverage == b->coverage);
    EXPECT_EQ(a->execs, 5000);
  }
}

TEST(FuzzerProperty, CoverageNeverShrinksAndCorpusEntriesAreNovel) {
  for (const SuiteEntry& e : SeededSuite()) {
    absl::StatusOr<SuiteTarget> t = BuildTarget(e);
    ASSERT_TRUE(t.ok());
    CampaignOptions o;
    o.budget_execs = 3000;
    o.seed = 99;
    absl::StatusOr<CampaignState> s = FuzzLoop(t->harness, t->seeds, o);
    ASSERT_TRUE(s.ok()) << e.name;
    for (size_t i = 1; i < s->coverage_history.size(); ++i) {
      EXPECT_GT(s->coverage_history[i], s->coverage_history[i - 1]) << e.name;
    }
    EXPECT_EQ(s->coverage_history.size(),
              s->corpus.size() - t->seeds.size() + 1);
    for (const Finding& f : s->findings) {
      const ExecOutcome again = t->harness.Run(f.reproducer.bytes);
      ASSERT_TRUE(again.key.has_value()) << e.name;
      EXPECT_EQ(*again.key, f.key) << e.name;
    }
    for (const TestCase& c : s->corpus) {
      if (c.parent >= 0) {
        EXPECT_EQ(c.depth, s->corpus[c.parent].depth + 1);
        EXPECT_LE(c.depth, s->max_depth);
      }
    }
  }
}

TEST(Fuzzer, SeedThatHangsIsASetupError) {
  const SuiteEntry& e = SeededSuite().at(9);
  ASSERT_EQ(e.name, "loop_bound");
  absl::StatusOr<SuiteTarget> t = BuildTarget(e);
  ASSERT_TRUE(t.ok());
  kir::GridConfig g;
  const Bytes bad = t->harness.Encode(BuggyInput(e, &g), &g);
  absl::StatusOr<CampaignState> s = FuzzLoop(t->harness, {bad}, {});
  EXPECT_EQ(s.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_TRUE(
      std::string(s.status().message()).starts_with("HarnessSetupError"));
  EXPECT_EQ(FuzzLoop(t->harness, {}, {}).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(Fuzzer, CampaignDirectoryLayout) {
  const SuiteEntry& e = SeededSuite().at(0);
  absl::StatusOr<SuiteTarget> t = BuildTarget(e);
  ASSERT_TRUE(t.ok());
  const std::filesystem::path dir =
      std::filesystem::path(::testing::TempDir()) / "kfuzz_campaign";
  std::filesystem::remove_all(dir);
  CampaignOptions o;
  o.budget_execs = 3000;
  o.out_dir = dir.string();
  absl::StatusOr<CampaignState> s = FuzzLoop(t->harness, t->seeds, o);
  ASSERT_TRUE(s.ok());
  EXPECT_TRUE(std::filesystem::exists(dir / "corpus" / "id_000000,orig"));
  EXPECT_TRUE(std::filesystem::exists(dir / "findings" / "hangs"));
  EXPECT_TRUE(std::filesystem::exists(dir / "findings" / "crashes" /
                                      "finding_000.bin"));
  std::ifstream stats(dir / "stats");
  std::map<std::string, std::string> kv;
  std::string k, v;
  while (stats >> k >> v) kv[k] = v;
  for (const char* key :
       {"execs", "execs_per_sec", "corpus_size", "findings", "max_depth"}) {
    EXPECT_TRUE(kv.contains(key)) << key;
  }
  EXPECT_EQ(kv["execs"], "3000");
  EXPECT_EQ(kv["findings"], "1");
}

}  // namespace
}  // namespace kfuzz::fuzz
