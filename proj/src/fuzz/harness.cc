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

#include "kfuzz/fuzz/harness.h"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>

#include "kfuzz/affine/affine.h"
#include "kfuzz/axiprune/axiprune.h"
#include "kfuzz/prex/prex.h"

namespace kfuzz::fuzz {
namespace {

// Reads bytes at a cursor, zero-extending past the end.
class Reader {
 public:
  explicit Reader(const Bytes& b) : b_(b) {}

  Bytes Take(int64_t n) {
    Bytes out(n, 0);
    const int64_t avail =
        std::clamp<int64_t>(static_cast<int64_t>(b_.size()) - pos_, 0, n);
    std::copy_n(b_.begin() + pos_, avail, out.begin());
    pos_ += n;
    return out;
  }

  uint64_t TakeLe(int width) {
    const Bytes raw = Take(width);
    uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= uint64_t{raw[i]} << (8 * i);
    return v;
  }

  int64_t remaining() const {
    return std::max<int64_t>(0, static_cast<int64_t>(b_.size()) - pos_);
  }

 private:
  const Bytes& b_;
  int64_t pos_ = 0;
};

void PutLe(Bytes& out, uint64_t v, int width) {
  for (int i = 0; i < width; ++i)
    out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

std::string_view ToString(FindingKind k) {
  switch (k) {
    case FindingKind::kKernelCrash:
      return "kernel_crash";
    case FindingKind::kHostCrash:
      return "host_crash";
    case FindingKind::kHang:
      return "hang";
  }
  return "?";
}

std::string_view DedupClass(sanrt::BugClass c) {
  if (c == sanrt::BugClass::kBO || c == sanrt::BugClass::kOobRw) {
    return "spatial";
  }
  return sanrt::ToString(c);
}

std::string DedupKey::ToString() const {
  if (kind == FindingKind::kKernelCrash) {
    return fmt::format("{}:i{}:{}", fuzz::ToString(kind), instr_id, cls);
  }
  return fmt::format("{}:{}", fuzz::ToString(kind), cls);
}

std::string FrameOf(const absl::Status& s) {
  switch (s.code()) {
    case absl::StatusCode::kInvalidArgument:
      return std::string(s.message()).starts_with("invalid_launch")
                 ? "invalid_launch"
                 : "bad_argument";
    case absl::StatusCode::kResourceExhausted:
      return "out_of_memory";
    case absl::StatusCode::kDeadlineExceeded:
      return "timeout";
    default:
      return "internal";
  }
}

absl::StatusOr<Harness> Harness::Create(const kir::Kernel& k,
                                        const HarnessConfig& config) {
  Harness h;
  h.config_ = config;
  h.kernel_ = config.axiprune ? axiprune::Prune(k).first : k;
  const affine::AffineSummary summary = affine::Analyze(h.kernel_);
  const affine::PlanKind plan =
      config.prex ? pact::PlanKindFor(summary) : affine::PlanKind::kAll;
  absl::StatusOr<pact::LoweredProgram> p =
      pact::Lower(h.kernel_, summary, plan);
  if (!p.ok()) return p.status();
  h.program_ = *std::move(p);
  return h;
}

sanrt::KernelInputs DecodeInputs(const kir::Kernel& k,
                                 const HarnessConfig& config, const Bytes& blob,
                                 kir::GridConfig* grid) {
  Reader r(blob);
  kir::GridConfig g = config.grid;
  if (config.grid_from_input) {
    g.blocks = static_cast<int64_t>(r.TakeLe(1));
    g.threads = static_cast<int64_t>(r.TakeLe(1));
  }
  if (grid) *grid = g;

  sanrt::KernelInputs in;
  in.args.resize(k.params.size());
  for (size_t i = 0; i < k.params.size(); ++i) {
    const kir::Param& p = k.params[i];
    if (p.is_buffer()) continue;
    const Bytes raw = r.Take(kir::ScalarSize(p.elem));
    in.args[i] = sanrt::Arg::Scalar(sanrt::UnpackElements(raw, p.elem).at(0));
  }
  for (size_t i = 0, buffer = 0; i < k.params.size(); ++i) {
    const kir::Param& p = k.params[i];
    if (!p.is_buffer()) continue;
    int64_t len = static_cast<int64_t>(r.TakeLe(4));
    len = std::min({len, r.remaining(), config.max_buffer_bytes});
    Bytes content = r.Take(len);
    const int64_t elem = kir::ScalarSize(p.elem);
    int64_t count = buffer < config.buffer_counts.size()
                        ? config.buffer_counts[buffer]
                        : -1;
    if (count < 0) count = len / elem;
    in.args[i] = sanrt::Arg::Buffer(count, std::move(content));
    ++buffer;
  }
  return in;
}

Bytes EncodeInputs(const kir::Kernel& k, const HarnessConfig& config,
                   const sanrt::KernelInputs& in, const kir::GridConfig* grid) {
  Bytes out;
  if (config.grid_from_input) {
    const kir::GridConfig g = grid ? *grid : config.grid;
    PutLe(out, static_cast<uint64_t>(g.blocks), 1);
    PutLe(out, static_cast<uint64_t>(g.threads), 1);
  }
  for (size_t i = 0; i < k.params.size(); ++i) {
    const kir::Param& p = k.params[i];
    if (p.is_buffer()) continue;
    const sanrt::Value v =
        i < in.args.size() ? in.args[i].scalar : sanrt::Value::Int(0);
    const Bytes raw = kir::IsFloat(p.elem)
                          ? sanrt::PackFloats({v.AsFloat()}, p.elem)
                          : sanrt::PackInts({v.AsInt()}, p.elem);
    out.insert(out.end(), raw.begin(), raw.end());
  }
  for (size_t i = 0; i < k.params.size(); ++i) {
    if (!k.params[i].is_buffer()) continue;
    const Bytes& content = i < in.args.size() ? in.args[i].bytes : Bytes{};
    PutLe(out, content.size(), 4);
    out.insert(out.end(), content.begin(), content.end());
  }
  return out;
}

sanrt::KernelInputs Harness::Decode(const Bytes& blob,
                                    kir::GridConfig* grid) const {
  return DecodeInputs(kernel_, config_, blob, grid);
}

Bytes Harness::Encode(const sanrt::KernelInputs& in,
                      const kir::GridConfig* grid) const {
  return EncodeInputs(kernel_, config_, in, grid);
}

ExecOutcome Harness::Run(const Bytes& blob, TraceMap* trace) const {
  kir::GridConfig g;
  const sanrt::KernelInputs in = Decode(blob, &g);
  prex::PrexOptions o;
  o.run.detector = config_.detector;
  o.run.abort_on_report = true;
  o.run.step_budget = config_.step_budget;
  o.run.memory = config_.memory;
  o.skip_snapshot = true;
  if (trace) o.piece_hook = [trace](int piece) { trace->Visit(piece); };

  const auto start = std::chrono::steady_clock::now();
  absl::StatusOr<prex::PrexResult> r = prex::Execute(program_, g, in, o);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  ExecOutcome out;
  if (!r.ok()) {
    const std::string frame = FrameOf(r.status());
    out.status = frame == "timeout" ? ExecOutcome::Status::kHang
                                    : ExecOutcome::Status::kCrash;
    out.key = DedupKey{out.status == ExecOutcome::Status::kHang
                           ? FindingKind::kHang
                           : FindingKind::kHostCrash,
                       -1, frame};
    out.detail = std::string(r.status().message());
    return out;
  }
  out.steps = r->run.steps;
  out.blocks_executed = r->blocks_executed;
  if (trace) {
    for (int id : r->covered_ids) trace->VisitAccess(id);
  }
  if (!r->run.reports.empty()) {
    const sanrt::BugReport& b = r->run.reports.front();
    out.status = ExecOutcome::Status::kCrash;
    out.key = DedupKey{FindingKind::kKernelCrash, b.access.instr_id,
                       std::string(DedupClass(b.cls))};
    out.detail = b.ToJson();
    return out;
  }
  if (elapsed.count() > config_.timeout_ms) {
    out.status = ExecOutcome::Status::kHang;
    out.key = DedupKey{FindingKind::kHang, -1, "timeout"};
    out.detail = fmt::format("execution took {} ms", elapsed.count());
  }
  return out;
}

}  // namespace kfuzz::fuzz
