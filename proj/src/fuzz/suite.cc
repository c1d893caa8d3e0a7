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

#include "kfuzz/fuzz/suite.h"

#include "kfuzz/kir/parser.h"

namespace kfuzz::fuzz {
namespace {

using sanrt::Arg;
using sanrt::Value;

Arg Int(int64_t v) { return Arg::Scalar(Value::Int(v)); }

Arg I32s(std::vector<int64_t> v) {
  const int64_t n = static_cast<int64_t>(v.size());
  return Arg::Buffer(n, sanrt::PackInts(v, kir::ScalarType::kI32));
}

DedupKey Kernel(int instr, std::string cls) {
  return {FindingKind::kKernelCrash, instr, std::move(cls)};
}

HarnessConfig Grid(int64_t blocks, int64_t threads,
                   std::vector<int64_t> counts) {
  HarnessConfig c;
  c.grid = {blocks, threads, 0};
  c.buffer_counts = std::move(counts);
  return c;
}

std::vector<SuiteEntry> MakeSuite() {
  std::vector<SuiteEntry> s;

  s.push_back({"scalar_index",
               "kernel scalarIndex(c: *global_host i32, x: i32)\n"
               "  store c[x] 1\n"
               "  return\n",
               Grid(2, 4, {16}),
               {{I32s(std::vector<int64_t>(16, 0)), Int(0)}},
               Kernel(0, "spatial")});

  s.push_back(
      {"indirect_index",
       "kernel indirectIndex(idx: *global_host i32, "
       "out: *global_host i32)\n"
       "  j = load idx[threadIdx.x]\n"
       "  store out[j] 1\n"
       "  return\n",
       Grid(1, 8, {8, 8}),
       {{I32s({0, 1, 2, 3, 4, 5, 6, 7}), I32s(std::vector<int64_t>(8, 0))}},
       Kernel(1, "spatial")});

  {
    SuiteEntry e{"alloc_size",
                 "kernel allocSize(out: *global_host i32, n: i32)\n"
                 "  m = max n 1\n"
                 "  p = malloc i32 (mul m 64)\n"
                 "  store p[threadIdx.x] 1\n"
                 "  x = load p[threadIdx.x]\n"
                 "  store out[threadIdx.x] x\n"
                 "  free p\n"
                 "  return\n",
                 Grid(1, 8, {8}),
                 {{I32s(std::vector<int64_t>(8, 0)), Int(4)}},
                 {FindingKind::kHostCrash, -1, "out_of_memory"}};
    s.push_back(std::move(e));
  }

  {
    SuiteEntry e{"zero_dim",
                 "kernel zeroDim(out: *global_host i32)\n"
                 "  store out[0] 1\n"
                 "  return\n",
                 Grid(2, 4, {1}),
                 {{I32s({0})}},
                 {FindingKind::kHostCrash, -1, "invalid_launch"}};
    e.config.grid_from_input = true;
    s.push_back(std::move(e));
  }

  s.push_back({"threshold",
               "kernel threshold(c: *global_host i32, x: i32)\n"
               "entry:\n"
               "  store c[threadIdx.x] x\n"
               "  branch (gt x 1000) bad done\n"
               "bad:\n"
               "  store c[add threadIdx.x 16] 0\n"
               "  jump done\n"
               "done:\n"
               "  return\n",
               Grid(2, 8, {16}),
               {{I32s(std::vector<int64_t>(16, 0)), Int(1)}},
               Kernel(2, "spatial")});

  s.push_back({"nested_branch",
               "kernel nested(c: *global_host i32, a: i32, b: i32)\n"
               "entry:\n"
               "  store c[threadIdx.x] a\n"
               "  branch (lt a 0) second done\n"
               "second:\n"
               "  branch (gt b 5000) bad done\n"
               "bad:\n"
               "  x = load c[sub threadIdx.x 1]\n"
               "  store c[threadIdx.x] x\n"
               "  jump done\n"
               "done:\n"
               "  return\n",
               Grid(1, 8, {8}),
               {{I32s(std::vector<int64_t>(8, 0)), Int(1), Int(1)}},
               Kernel(3, "spatial")});

  s.push_back({"alloca_count",
               "kernel allocaCount(out: *global_host i32, k: i32)\n"
               "  cnt = add (min (max k 0) 32) 1\n"
               "  s = alloca i32 cnt\n"
               "  store s[4] 7\n"
               "  x = load s[4]\n"
               "  store out[threadIdx.x] x\n"
               "  return\n",
               Grid(2, 4, {4}),
               {{I32s(std::vector<int64_t>(4, 0)), Int(16)}},
               Kernel(2, "spatial")});

  s.push_back({"shared_offset",
               "kernel sharedOffset(out: *global_host i32, off: i32)\n"
               "shared sh: [blockDim.x] i32\n"
               "  store sh[threadIdx.x] threadIdx.x\n"
               "  barrier\n"
               "  x = load sh[add threadIdx.x off]\n"
               "  store out[add (mul blockIdx.x blockDim.x) threadIdx.x] x\n"
               "  return\n",
               Grid(4, 8, {32}),
               {{I32s(std::vector<int64_t>(32, 0)), Int(0)}},
               Kernel(2, "spatial")});

  s.push_back({"uaf_flag",
               "kernel uafFlag(out: *global_host i32, f: i32)\n"
               "entry:\n"
               "  p = malloc i32 4\n"
               "  branch (gt f 3) early late\n"
               "early:\n"
               "  free p\n"
               "  store p[0] 1\n"
               "  jump done\n"
               "late:\n"
               "  store p[0] 1\n"
               "  free p\n"
               "  jump done\n"
               "done:\n"
               "  store out[threadIdx.x] f\n"
               "  return\n",
               Grid(2, 4, {4}),
               {{I32s(std::vector<int64_t>(4, 0)), Int(0)}},
               Kernel(3, "UAF")});

  {
    SuiteEntry e{"loop_bound",
                 "kernel loopBound(out: *global_host i32, n: i32)\n"
                 "entry:\n"
                 "  i = add 0 0\n"
                 "  acc = add 0 0\n"
                 "  jump head\n"
                 "head:\n"
                 "  branch (lt i n) body exit\n"
                 "body:\n"
                 "  acc = add acc i\n"
                 "  i = add i 1\n"
                 "  jump head\n"
                 "exit:\n"
                 "  store out[threadIdx.x] acc\n"
                 "  return\n",
                 Grid(2, 4, {4}),
                 {{I32s(std::vector<int64_t>(4, 0)), Int(8)}},
                 {FindingKind::kHang, -1, "timeout"}};
    e.config.step_budget = 5000;
    s.push_back(std::move(e));
  }
  return s;
}

}  // namespace

const std::vector<SuiteEntry>& SeededSuite() {
  static const std::vector<SuiteEntry>* suite =
      new std::vector<SuiteEntry>(MakeSuite());
  return *suite;
}

absl::StatusOr<SuiteTarget> BuildTarget(const SuiteEntry& e) {
  absl::StatusOr<kir::Kernel> k = kir::ParseKernel(e.text);
  if (!k.ok()) return k.status();
  absl::StatusOr<Harness> h = Harness::Create(*k, e.config);
  if (!h.ok()) return h.status();
  SuiteTarget t{*std::move(h), {}};
  t.seeds.push_back(t.harness.Encode(e.seed));
  return t;
}

}  // namespace kfuzz::fuzz
