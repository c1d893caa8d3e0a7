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

#include "kfuzz/fuzz/fuzzer.h"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <thread>

namespace kfuzz::fuzz {
namespace {

constexpr double kMaxEnergy = 100.0;

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Child {
  int parent = 0;
  int other = -1;
  Mutation m;
  ExecOutcome outcome;
  TraceMap trace;
};

absl::Status WriteFile(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) return absl::InternalError("cannot write " + path.string());
  return absl::OkStatus();
}

absl::Status WriteText(const std::filesystem::path& path,
                       const std::string& text) {
  return WriteFile(path, Bytes(text.begin(), text.end()));
}

std::string ProvenanceName(const TestCase& t) {
  if (t.parent < 0) return fmt::format("id_{:06d},orig", t.id);
  std::string name = fmt::format("id_{:06d},src_{:06d},op_{},pos_{}", t.id,
                                 t.parent, ToString(t.op), t.pos);
  if (t.other_parent >= 0) {
    name += fmt::format(",with_{:06d}@{}", t.other_parent, t.other_pos);
  }
  return name;
}

}  // namespace

double TestCase::energy() const {
  if (execs == 0) return kMaxEnergy;
  return std::max(1.0, kMaxEnergy * static_cast<double>(new_cov) /
                           static_cast<double>(execs));
}

double CampaignState::execs_per_sec() const {
  return elapsed_seconds > 0 ? static_cast<double>(execs) / elapsed_seconds : 0;
}

int64_t CampaignState::kernel_crashes() const {
  return std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
    return f.key.kind == FindingKind::kKernelCrash;
  });
}

int64_t CampaignState::host_crashes() const {
  return std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
    return f.key.kind == FindingKind::kHostCrash;
  });
}

int64_t CampaignState::hang_findings() const {
  return std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
    return f.key.kind == FindingKind::kHang;
  });
}

std::string CampaignState::StatsText() const {
  std::string out;
  out += fmt::format("execs {}\n", execs);
  out += fmt::format("execs_per_sec {:.1f}\n", execs_per_sec());
  out += fmt::format("corpus_size {}\n", corpus.size());
  out += fmt::format("findings {}\n", findings.size());
  out += fmt::format("kernel_crashes {}\n", kernel_crashes());
  out += fmt::format("host_crashes {}\n", host_crashes());
  out += fmt::format("hangs {}\n", hang_findings());
  out += fmt::format("coverage_edges {}\n", coverage.edges());
  out += fmt::format("max_depth {}\n", max_depth);
  out += fmt::format("elapsed_seconds {:.3f}\n", elapsed_seconds);
  return out;
}

absl::StatusOr<CampaignState> FuzzLoop(const Harness& harness,
                                       const std::vector<Bytes>& seeds,
                                       const CampaignOptions& o) {
  if (seeds.empty()) return absl::InvalidArgumentError("no seed inputs");
  const auto start = Clock::now();
  std::mt19937_64 rng(o.seed);
  CampaignState s;
  std::map<DedupKey, size_t> seen;

  auto record = [&](const TestCase& t, const ExecOutcome& out) {
    if (out.status == ExecOutcome::Status::kHang) {
      ++s.hangs;
    } else {
      ++s.crashes;
    }
    auto [it, fresh] = seen.emplace(*out.key, s.findings.size());
    if (fresh) {
      s.findings.push_back(Finding{*out.key, t, out.detail, s.execs, 0});
    }
    ++s.findings[it->second].hits;
  };

  TraceMap trace;
  for (const Bytes& seed : seeds) {
    trace.Reset();
    const ExecOutcome out = harness.Run(seed, &trace);
    ++s.execs;
    TestCase t;
    t.id = static_cast<int>(s.corpus.size());
    t.bytes = seed;
    if (out.status == ExecOutcome::Status::kHang ||
        (out.key && out.key->kind == FindingKind::kHostCrash)) {
      return absl::FailedPreconditionError(fmt::format(
          "HarnessSetupError: seed {} fails to execute: {}", t.id, out.detail));
    }
    if (out.status == ExecOutcome::Status::kCrash) record(t, out);
    s.coverage.Merge(trace);
    s.corpus.push_back(std::move(t));
  }
  s.coverage_history.push_back(s.coverage.bits());

  const int workers = std::max(1, o.workers);
  std::vector<Child> children(workers);
  while (s.execs < o.budget_execs &&
         (o.budget_seconds <= 0 || Seconds(start) < o.budget_seconds)) {
    const int n =
        static_cast<int>(std::min<int64_t>(workers, o.budget_execs - s.execs));
    std::vector<double> weights;
    weights.reserve(s.corpus.size());
    for (const TestCase& t : s.corpus) weights.push_back(t.energy());
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    for (int i = 0; i < n; ++i) {
      Child& c = children[i];
      c.parent = pick(rng);
      c.other = static_cast<int>(
          std::uniform_int_distribution<size_t>(0, s.corpus.size() - 1)(rng));
      c.m = Mutate(s.corpus[c.parent].bytes, rng(), &s.corpus[c.other].bytes);
      if (c.m.op != MutationOp::kSplice) c.other = -1;
      c.trace.Reset();
    }
    if (n == 1) {
      children[0].outcome =
          harness.Run(children[0].m.bytes, &children[0].trace);
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < n; ++i) {
        pool.emplace_back([&harness, &c = children[i]] {
          c.outcome = harness.Run(c.m.bytes, &c.trace);
        });
      }
      for (std::thread& t : pool) t.join();
    }
    // Merge in generation order so results do not depend on timing.
    for (int i = 0; i < n; ++i) {
      Child& c = children[i];
      ++s.execs;
      TestCase& parent = s.corpus[c.parent];
      ++parent.execs;
      TestCase t;
      t.id = static_cast<int>(s.corpus.size());
      t.bytes = c.m.bytes;
      t.parent = c.parent;
      t.op = c.m.op;
      t.pos = c.m.pos;
      t.other_parent = c.other;
      t.other_pos = c.m.other_pos;
      t.depth = parent.depth + 1;
      if (c.outcome.status != ExecOutcome::Status::kOk) {
        record(t, c.outcome);
        continue;
      }
      if (!s.coverage.Merge(c.trace)) continue;
      ++s.corpus[c.parent].new_cov;
      s.max_depth = std::max(s.max_depth, t.depth);
      s.corpus.push_back(std::move(t));
      s.coverage_history.push_back(s.coverage.bits());
    }
  }
  s.elapsed_seconds = Seconds(start);
  if (!o.out_dir.empty()) {
    if (absl::Status st = WriteCampaign(s, o.out_dir); !st.ok()) return st;
  }
  return s;
}

absl::Status WriteCampaign(const CampaignState& s, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path root(dir);
  for (const char* sub : {"corpus", "findings/crashes", "findings/hangs"}) {
    fs::create_directories(root / sub, ec);
    if (ec)
      return absl::InternalError("cannot create " + (root / sub).string());
  }
  for (const TestCase& t : s.corpus) {
    if (absl::Status st =
            WriteFile(root / "corpus" / ProvenanceName(t), t.bytes);
        !st.ok()) {
      return st;
    }
  }
  for (size_t i = 0; i < s.findings.size(); ++i) {
    const Finding& f = s.findings[i];
    const fs::path sub =
        root / "findings" /
        (f.key.kind == FindingKind::kHang ? "hangs" : "crashes");
    const std::string stem = fmt::format("finding_{:03d}", i);
    if (absl::Status st = WriteFile(sub / (stem + ".bin"), f.reproducer.bytes);
        !st.ok()) {
      return st;
    }
    const std::string info = fmt::format(
        "key {}\nkind {}\nfirst_exec {}\nhits {}\ndepth {}\ndetail {}\n",
        f.key.ToString(), ToString(f.key.kind), f.exec_index, f.hits,
        f.reproducer.depth, f.detail);
    if (absl::Status st = WriteText(sub / (stem + ".txt"), info); !st.ok()) {
      return st;
    }
  }
  return WriteText(root / "stats", s.StatsText());
}

}  // namespace kfuzz::fuzz
