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

#include "kfuzz/prex/prex.h"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace kfuzz::prex {

std::vector<int> AccessIds(const pact::LoweredProgram& p) {
  std::set<int> ids;
  for (const pact::PhaseLoop& phase : p.phases) {
    for (const kir::BasicBlock& bb : phase.blocks) {
      for (const kir::Instruction& in : bb.instrs) {
        if (in.IsMemoryAccess()) ids.insert(in.id);
      }
    }
  }
  return {ids.begin(), ids.end()};
}

absl::StatusOr<PrexResult> Execute(const pact::LoweredProgram& p,
                                   const kir::GridConfig& g,
                                   const sanrt::KernelInputs& in,
                                   const PrexOptions& o) {
  pact::Executor ex(p, g, o.run);
  if (absl::Status s = ex.Start(in); !s.ok()) return s;
  std::vector<bool> pieces(p.piece_count, false);
  int64_t pieces_seen = 0;
  if (o.require_piece_coverage || o.piece_hook) {
    ex.set_piece_hook([&](int piece) {
      if (!pieces[piece]) {
        pieces[piece] = true;
        ++pieces_seen;
      }
      if (o.piece_hook) o.piece_hook(piece);
    });
  }

  PrexResult r;
  r.plan = p.plan;
  const std::vector<int> ids = AccessIds(p);
  PrexCursor cur;
  cur.tail = g.blocks - 1;
  cur.covered.assign(ids.size(), false);

  auto run_block = [&](int64_t b,
                       const std::vector<int64_t>& threads) -> absl::Status {
    if (absl::Status s = ex.RunBlock(b, threads); !s.ok()) return s;
    r.block_order.push_back(b);
    ++r.blocks_executed;
    r.thread_instances +=
        threads.empty() ? g.threads : static_cast<int64_t>(threads.size());
    for (size_t i = 0; i < ids.size(); ++i) {
      cur.covered[i] = cur.covered[i] || ex.covered(ids[i]);
    }
    cur.has_bug = ex.report_count() > 0;
    return absl::OkStatus();
  };
  auto saturated = [&] {
    bool all = std::all_of(cur.covered.begin(), cur.covered.end(),
                           [](bool c) { return c; });
    if (o.require_piece_coverage) all = all && pieces_seen == p.piece_count;
    return all;
  };

  switch (p.plan) {
    case affine::PlanKind::kAll:
      for (int64_t b = 0; b < g.blocks; ++b) {
        if (absl::Status s = run_block(b, {}); !s.ok()) return s;
        if (ex.aborted()) break;
      }
      break;
    case affine::PlanKind::kBoundaryThreads: {
      std::vector<int64_t> corners = {0, g.threads - 1};
      if (g.threads == 1) corners.pop_back();
      for (int64_t b : {int64_t{0}, g.blocks - 1}) {
        if (absl::Status s = run_block(b, corners); !s.ok()) return s;
        if (g.blocks == 1 || ex.aborted()) break;
      }
      break;
    }
    case affine::PlanKind::kBoundaryBlocksAllThreads:
      while (cur.head <= cur.tail) {
        // Coverage is vacuous before anything ran when there are no
        // accesses; run the first round regardless.
        if (cur.has_bug || (r.iterations > 0 && saturated())) break;
        if (absl::Status s = run_block(cur.head, {}); !s.ok()) return s;
        if (cur.head != cur.tail && !ex.aborted()) {
          if (absl::Status s = run_block(cur.tail, {}); !s.ok()) return s;
        }
        ++cur.head;
        --cur.tail;
        ++r.iterations;
        if (cur.has_bug || saturated()) break;
      }
      break;
  }

  for (size_t i = 0; i < ids.size(); ++i) {
    if (cur.covered[i]) r.covered_ids.push_back(ids[i]);
  }
  r.covered_fraction = ids.empty() ? 1.0
                                   : static_cast<double>(r.covered_ids.size()) /
                                         static_cast<double>(ids.size());
  if (o.skip_snapshot) {
    r.run.steps = ex.steps();
    r.run.aborted = ex.aborted();
    r.run.reports = ex.reports();
  } else {
    r.run = ex.Finish();
  }
  return r;
}

std::string StatsLine(const PrexResult& r) {
  return fmt::format(
      "prex plan={} blocks_executed={} thread_instances={} iterations={} "
      "covered_fraction={:.3f} bugs={} steps={}",
      affine::ToString(r.plan), r.blocks_executed, r.thread_instances,
      r.iterations, r.covered_fraction, r.run.reports.size(), r.run.steps);
}

}  // namespace kfuzz::prex
