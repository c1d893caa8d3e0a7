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

#include "kfuzz/gms/gmsbench.h"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>

#include "json.hpp"
#include "kfuzz/affine/affine.h"
#include "kfuzz/fuzz/harness.h"
#include "kfuzz/kir/parser.h"
#include "kfuzz/pact/pact.h"
#include "kfuzz/refsim/refsim.h"

namespace kfuzz::gms {
namespace {

using sanrt::Arg;
using sanrt::BugClass;
using sanrt::Value;

constexpr BugClass kBO = BugClass::kBO;
constexpr BugClass kRW = BugClass::kOobRw;

// Neighbour sizes for non-adjacent cases, in elements.
constexpr int64_t kHeapNeighbour = 4096;
constexpr int64_t kStackNeighbour = 1024;
// Allocation churn that pushes a freed chunk out of the default quarantine.
constexpr int64_t kChurnElems = 16384;

std::vector<Row> MakeRows() {
  const Axis s = Axis::kSpatial;
  const Axis t = Axis::kTemporal;
  return {
      {s, "global", "host", kBO, 4},
      {s, "global", "host", kRW, 4},
      {s, "global", "device", kBO, 4},
      {s, "global", "device", kRW, 4},
      {s, "local", "intra_frame_static", kBO, 3},
      {s, "local", "intra_frame_static", kRW, 3},
      {s, "local", "intra_frame_dynamic", kBO, 3},
      {s, "local", "intra_frame_dynamic", kRW, 3},
      {s, "local", "inter_frame_static", kBO, 2},
      {s, "local", "inter_frame_static", kRW, 2},
      {s, "local", "inter_frame_dynamic", kBO, 2},
      {s, "local", "inter_frame_dynamic", kRW, 2},
      {s, "local", "beyond_local_static", kBO, 2},
      {s, "local", "beyond_local_static", kRW, 2},
      {s, "local", "beyond_local_dynamic", kBO, 2},
      {s, "local", "beyond_local_dynamic", kRW, 2},
      {s, "shared", "static", kBO, 7},
      {s, "shared", "static", kRW, 7},
      {s, "shared", "dynamic", kBO, 7},
      {s, "shared", "dynamic", kRW, 7},
      {s, "intra_allocation", "global", kBO, 2},
      {s, "intra_allocation", "global", kRW, 2},
      {s, "intra_allocation", "local", kBO, 2},
      {s, "intra_allocation", "local", kRW, 2},
      {s, "intra_allocation", "shared", kBO, 2},
      {s, "intra_allocation", "shared", kRW, 2},
      {t, "global", "host", BugClass::kUAF, 2},
      {t, "global", "host", BugClass::kIF, 3},
      {t, "global", "host", BugClass::kDF, 1},
      {t, "global", "device", BugClass::kUAF, 2},
      {t, "global", "device", BugClass::kIF, 3},
      {t, "global", "device", BugClass::kDF, 1},
      {t, "local", "static", BugClass::kUAS, 2},
      {t, "local", "dynamic", BugClass::kUAS, 2},
  };
}

Arg Buf(int64_t count) {
  return Arg::Buffer(count, sanrt::PackInts(std::vector<int64_t>(count, 0),
                                            kir::ScalarType::kI32));
}

Arg Int(int64_t v) { return Arg::Scalar(Value::Int(v)); }

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  int64_t operator()(int64_t lo, int64_t hi) {
    return std::uniform_int_distribution<int64_t>(lo, hi)(gen_);
  }

 private:
  std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Spatial cases.

enum class Shape { kStore, kLoad, kLoop, kGuard, kAddTid, kSubTid, kAddBlock };

std::string_view ShapeName(Shape s) {
  switch (s) {
    case Shape::kStore:
      return "store_index";
    case Shape::kLoad:
      return "load_index";
    case Shape::kLoop:
      return "loop_bound";
    case Shape::kGuard:
      return "thread_guard";
    case Shape::kAddTid:
      return "index_plus_tid";
    case Shape::kSubTid:
      return "index_minus_tid";
    case Shape::kAddBlock:
      return "index_plus_block";
  }
  return "?";
}

struct Param {
  std::string decl;
  Arg arg;
};

// The object a spatial case overflows and how it gets there.
struct Target {
  std::vector<Param> params;  // after out, k, m
  std::string shared;
  std::string prelude;
  std::string epilogue;
  std::string buf;  // operand, possibly a field
  int64_t len = 0;  // elements reachable through `buf`
  // Non-adjacent cases whose landing spot depends on layout: the wild index
  // is calibrated to land inside this neighbour.
  std::string anchor;
  // Non-adjacent cases inside one object: the buggy index, relative to the
  // shape's own offsets.
  std::optional<int64_t> wild;
  // Elements past `len` that stay addressable to the shadow.
  int64_t slack = 0;
  int64_t dynamic_elems = 0;  // size of the dynamic shared region
  bool per_block = false;     // shared memory: index by threadIdx
  bool single_thread = false;
};

struct Indices {
  int64_t k = 0;
  int64_t m = 0;
};

std::string ShapeBody(Shape s, const Target& t, bool patched) {
  switch (s) {
    case Shape::kStore:
      return fmt::format("  store {}[k] 1\n", t.buf);
    case Shape::kLoad:
      return fmt::format("  x = load {}[k]\n  store out[0] x\n", t.buf);
    case Shape::kLoop:
      return fmt::format(
          "  i = add 0 0\n"
          "  jump head\n"
          "head:\n"
          "  branch (lt i m) body done\n"
          "body:\n"
          "  store {}[i] i\n"
          "  i = add i 1\n"
          "  jump head\n"
          "done:\n",
          t.buf);
    case Shape::kGuard:
      return fmt::format(
          "  id = {}\n"
          "  branch ({} id m) body done\n"
          "body:\n"
          "  store {}[id] id\n"
          "  jump done\n"
          "done:\n",
          t.per_block ? "add threadIdx.x 0"
                      : "add (mul blockIdx.x blockDim.x) threadIdx.x",
          patched ? "lt" : "le", t.buf);
    case Shape::kAddTid:
      return fmt::format("  idx = add k threadIdx.x\n  store {}[idx] 2\n",
                         t.buf);
    case Shape::kSubTid:
      return fmt::format(
          "  idx = sub k threadIdx.x\n  x = load {}[idx]\n  store out[1] x\n",
          t.buf);
    case Shape::kAddBlock:
      return fmt::format("  idx = add k blockIdx.x\n  store {}[idx] 3\n",
                         t.buf);
  }
  return "";
}

std::string KernelText(const std::string& name, const std::string& params,
                       const std::string& shared, const std::string& body) {
  return fmt::format("kernel {}({})\n{}entry:\n{}  return\n", name, params,
                     shared, body);
}

std::string BufferName(const kir::Kernel& k, const kir::BufferRef& ref) {
  switch (ref.kind) {
    case kir::BufferRef::Kind::kParam:
      return k.params[ref.index].name;
    case kir::BufferRef::Kind::kShared:
      return k.shared[ref.index].name;
    case kir::BufferRef::Kind::kLocal:
      return k.locals[ref.index];
    case kir::BufferRef::Kind::kPromoted:
      break;
  }
  return "";
}

// Id of the first load or store through buffer `name`.
int FirstAccess(const kir::Kernel& k, std::string_view name) {
  for (const kir::BasicBlock& b : k.blocks) {
    for (const kir::Instruction& in : b.instrs) {
      if (in.IsMemoryAccess() && BufferName(k, in.buffer) == name) {
        return in.id;
      }
    }
  }
  return -1;
}

std::string BaseName(const std::string& operand) {
  return operand.substr(0, operand.find('.'));
}

absl::StatusOr<Program> MakeProgram(std::string text, kir::GridConfig grid,
                                    std::vector<Arg> args) {
  absl::StatusOr<kir::Kernel> k = kir::ParseKernel(text);
  if (!k.ok()) {
    return absl::InternalError(
        fmt::format("generated kernel does not parse: {}\n{}",
                    std::string(k.status().message()), text));
  }
  Program p;
  p.text = std::move(text);
  p.kernel = *std::move(k);
  p.grid = grid;
  p.inputs.args = std::move(args);
  return p;
}

// Byte address of the first access by thread (0, 0) at instruction `id`.
std::optional<uint64_t> FirstAddress(const refsim::Result& r, int id) {
  for (const sanrt::AccessRecord& a : r.trace) {
    if (a.instr_id == id && a.thread == sanrt::ThreadId{0, 0} &&
        (a.kind == sanrt::AccessKind::kRead ||
         a.kind == sanrt::AccessKind::kWrite)) {
      return a.byte_addr;
    }
  }
  return std::nullopt;
}

class Builder {
 public:
  explicit Builder(uint64_t seed) : rng_(seed) {}

  absl::StatusOr<Case> Build(int id, int row_index, int variant);

 private:
  absl::StatusOr<Case> Spatial(CaseDescriptor d, Target t, Shape s);
  absl::StatusOr<Case> Temporal(CaseDescriptor d, int variant);

  Target GlobalTarget(const Row& row, int variant);
  Target LocalTarget(const Row& row, int variant);
  Target SharedTarget(const Row& row, int variant);
  Target IntraTarget(const Row& row);

  Rng rng_;
};

// Shapes per row, indexed by variant.
Shape ShapeFor(const Row& row, int v) {
  static constexpr Shape kGlobalBo[] = {Shape::kStore, Shape::kLoad,
                                        Shape::kLoop, Shape::kGuard};
  static constexpr Shape kGlobalRw[] = {Shape::kStore, Shape::kLoad,
                                        Shape::kAddTid, Shape::kSubTid};
  static constexpr Shape kLocalBo[] = {Shape::kStore, Shape::kLoop,
                                       Shape::kLoad};
  static constexpr Shape kLocalRw[] = {Shape::kStore, Shape::kLoad,
                                       Shape::kStore};
  static constexpr Shape kSharedBo[] = {
      Shape::kStore,  Shape::kLoad,   Shape::kLoop,    Shape::kGuard,
      Shape::kAddTid, Shape::kSubTid, Shape::kAddBlock};
  static constexpr Shape kSharedRw[] = {
      Shape::kStore,    Shape::kLoad,  Shape::kAddTid, Shape::kSubTid,
      Shape::kAddBlock, Shape::kStore, Shape::kLoad};
  static constexpr Shape kDynBo[] = {
      Shape::kStore,  Shape::kLoad,  Shape::kLoop, Shape::kGuard,
      Shape::kAddTid, Shape::kStore, Shape::kLoop};
  static constexpr Shape kIntra[] = {Shape::kStore, Shape::kLoad};
  const bool bo = row.cls == kBO;
  if (row.group == "global") return bo ? kGlobalBo[v] : kGlobalRw[v];
  if (row.group == "local") return bo ? kLocalBo[v] : kLocalRw[v];
  if (row.group == "shared") {
    if (row.kind == "dynamic" && bo) return kDynBo[v];
    return bo ? kSharedBo[v] : kSharedRw[v];
  }
  return kIntra[v];
}

Target Builder::GlobalTarget(const Row& row, int v) {
  Target t;
  t.len = rng_(8, 32);
  const bool rw = row.cls == kRW;
  if (row.kind == "host") {
    t.buf = "a";
    t.params.push_back({"a: *global_host i32", Buf(t.len)});
    if (rw) {
      // Alternate which side of the object the neighbour sits on.
      Param big{"big: *global_host i32", Buf(kHeapNeighbour)};
      if (v % 2) {
        t.params.insert(t.params.begin(), std::move(big));
      } else {
        t.params.push_back(std::move(big));
      }
      t.anchor = "big";
    }
    return t;
  }
  t.buf = "p";
  std::string alloc = fmt::format("  p = malloc i32 {}\n", t.len);
  if (v % 2) {
    t.params.push_back({"n: i64", Int(t.len)});
    alloc = "  p = malloc i32 n\n";
  }
  t.epilogue = "  free p\n";
  if (rw) {
    const std::string big =
        fmt::format("  big = malloc i32 {}\n", kHeapNeighbour);
    t.prelude = v % 2 ? big + alloc : alloc + big;
    t.epilogue += "  free big\n";
    t.anchor = "big";
  } else {
    t.prelude = alloc;
  }
  return t;
}

Target Builder::LocalTarget(const Row& row, int v) {
  Target t;
  t.single_thread = true;
  t.len = rng_(8, 32);
  t.buf = "s";
  const bool dynamic = row.kind.ends_with("dynamic");
  std::string alloc = fmt::format("  s = alloca i32 {}\n", t.len);
  if (dynamic) {
    t.params.push_back({"n: i64", Int(t.len)});
    alloc = "  s = alloca i32 n\n";
  }
  const bool rw = row.cls == kRW;
  if (row.kind.starts_with("intra_frame")) {
    if (rw) {
      const std::string big =
          fmt::format("  big = alloca i32 {}\n", kStackNeighbour);
      t.prelude = v == 2 ? big + alloc : alloc + big;
      t.anchor = "big";
    } else {
      t.prelude = alloc;
    }
  } else if (row.kind.starts_with("inter_frame")) {
    // The callee frame's storage sits past the caller's array.
    t.prelude = alloc + fmt::format("  scope_begin\n  big = alloca i32 {}\n",
                                    kStackNeighbour);
    t.epilogue = "  scope_end\n";
    if (rw) t.anchor = "big";
  } else {
    t.prelude = alloc;
    if (rw) {
      t.params.push_back({"g: *global_host i32", Buf(kHeapNeighbour)});
      t.anchor = "g";
    }
  }
  return t;
}

Target Builder::SharedTarget(const Row& row, int v) {
  Target t;
  t.per_block = true;
  const bool rw = row.cls == kRW;
  if (row.kind == "static") {
    t.len = rng_(8, 32);
    t.buf = "sh";
    const std::string own = fmt::format("shared sh: [{}] i32\n", t.len);
    if (rw) {
      const std::string big =
          fmt::format("shared big: [{}] i32\n", kStackNeighbour);
      t.shared = v >= 5 ? big + own : own + big;
      t.anchor = "big";
    } else {
      t.shared = own;
    }
    return t;
  }
  if (!rw) {
    // The last two overflow only into the granule padding of the region.
    if (v >= 5) {
      t.len = 4 * rng_(2, 7) + rng_(1, 3);
      t.slack = 4 - t.len % 4;
    } else {
      t.len = 4 * rng_(2, 8);
    }
    t.buf = "dd";
    t.dynamic_elems = t.len;
    t.shared = "shared dyn dd: i32\n";
    return t;
  }
  // Two logical arrays carved out of one dynamic region.
  const int64_t f0 = rng_(12, 20);
  const int64_t f1 = rng_(24, 48);
  t.shared = fmt::format("shared dyn dd: i32 {{{}, {}}}\n", f0, f1);
  t.dynamic_elems = f0 + f1;
  if (v >= 5) {
    t.buf = "dd.1";
    t.len = f1;
    t.wild = -rng_(8, f0 - 3);
  } else {
    t.buf = "dd.0";
    t.len = f0;
    t.wild = f0 + rng_(7, f1 - 4);
  }
  return t;
}

Target Builder::IntraTarget(const Row& row) {
  Target t;
  const int64_t f0 = rng_(8, 16);
  const int64_t f1 = rng_(8, 16);
  const bool rw = row.cls == kRW;
  t.buf = rw ? "st.0" : "st.1";
  t.len = rw ? f0 : f1;
  if (rw) t.wild = f0 + rng_(4, f1 - 1);
  const std::string fields = fmt::format("{{{}, {}}}", f0, f1);
  if (row.kind == "global") {
    t.params.push_back(
        {fmt::format("st: *global_host i32 {}", fields), Buf(f0 + f1)});
  } else if (row.kind == "local") {
    t.single_thread = true;
    t.prelude = fmt::format("  st = alloca i32 {} {}\n", f0 + f1, fields);
  } else {
    t.per_block = true;
    t.shared = fmt::format("shared st: [{}] i32 {}\n", f0 + f1, fields);
  }
  return t;
}

// Which detectors see the bug, from their semantics: the redzone detector
// only sees non-addressable shadow, the exact detector checks the bounds and
// lifetime of the object an access derives from.
Expectation Derive(const CaseDescriptor& d, bool padding_only,
                   bool inside_dynamic_region, bool interior_free) {
  Expectation e;
  switch (d.cls) {
    case BugClass::kBO:
      e.redzone = !padding_only;
      e.exact = true;
      break;
    case BugClass::kOobRw:
      e.redzone = false;  // lands in addressable bytes of a live object
      e.exact = !inside_dynamic_region;
      break;
    case BugClass::kUAF:
    case BugClass::kUAS:
      e.redzone = d.timing == Timing::kImmediate;
      e.exact = true;
      break;
    case BugClass::kIF:
      e.redzone = interior_free;
      e.exact = true;
      break;
    case BugClass::kDF:
      e.redzone = true;
      e.exact = true;
      break;
    case BugClass::kUninit:
      break;
  }
  return e;
}

absl::StatusOr<Case> Builder::Spatial(CaseDescriptor d, Target t, Shape s) {
  d.shape = std::string(ShapeName(s));
  const bool rw = d.cls == kRW;
  d.adjacency = rw ? Adjacency::kNonAdjacent : Adjacency::kAdjacent;

  kir::GridConfig grid;
  switch (s) {
    case Shape::kStore:
    case Shape::kLoad:
    case Shape::kLoop:
      if (!t.single_thread) {
        grid.blocks = rng_(1, 2);
        grid.threads = rng_(1, 4);
      }
      break;
    case Shape::kGuard:
      if (t.per_block) {
        grid.threads = t.len + 1;
      } else {
        grid.threads = 8;
        grid.blocks = t.len / 8 + 1;
      }
      break;
    case Shape::kAddTid:
    case Shape::kSubTid:
      grid.threads = rng_(2, 4);
      break;
    case Shape::kAddBlock:
      grid.blocks = 2;
      break;
  }
  grid.dyn_shared_bytes = 4 * t.dynamic_elems;
  const int64_t T = grid.threads;
  const int64_t B = grid.blocks;
  const int64_t L = t.len;

  // In-bounds twin indices and adjacent buggy indices. An adjacent overflow
  // stays within three elements of the end so every hit is within the
  // redzone width.
  Indices good, bad;
  const int64_t reach = t.slack > 0 ? t.slack - 1 : 3;
  switch (s) {
    case Shape::kStore:
    case Shape::kLoad:
      good.k = rng_(0, L - 1);
      bad.k = L + rng_(0, reach);
      break;
    case Shape::kLoop:
      good.m = L;
      bad.m = L + 1 + rng_(0, reach);
      break;
    case Shape::kGuard:
      good.m = bad.m = L;
      break;
    case Shape::kAddTid:
      good.k = rng_(0, L - T);
      bad.k = L - (T - 1) + rng_(0, 4 - T);
      break;
    case Shape::kSubTid:
      good.k = rng_(T - 1, L - 1);
      bad.k = L + rng_(0, 3);
      break;
    case Shape::kAddBlock:
      good.k = rng_(0, L - B);
      bad.k = L - (B - 1) + rng_(0, 4 - B);
      break;
  }
  if (t.wild) {
    bad.k = *t.wild;
    if (s == Shape::kSubTid && bad.k > 0) bad.k += T - 1;
  }

  std::string params = "out: *global_host i32, k: i64, m: i64";
  for (const Param& p : t.params) params += ", " + p.decl;
  auto args = [&](const Indices& ix) {
    std::vector<Arg> a = {Buf(4), Int(ix.k), Int(ix.m)};
    for (const Param& p : t.params) a.push_back(p.arg);
    return a;
  };
  std::string anchor_store;
  if (!t.anchor.empty()) {
    anchor_store = fmt::format("  store {}[0] 7\n", t.anchor);
  }
  auto text = [&](bool patched) {
    return KernelText(
        fmt::format("gms{:03d}", d.id), params, t.shared,
        t.prelude + anchor_store + ShapeBody(s, t, patched) + t.epilogue);
  };

  Case c;
  absl::StatusOr<Program> twin = MakeProgram(text(true), grid, args(good));
  if (!twin.ok()) return twin.status();
  c.patched = *std::move(twin);

  if (!t.anchor.empty()) {
    // Find where the twin's layout puts both objects, then aim the wild
    // index a random distance into the neighbour.
    absl::StatusOr<refsim::Result> probe = refsim::RunReference(
        c.patched.kernel, c.patched.grid, c.patched.inputs);
    if (!probe.ok()) return probe.status();
    const std::optional<uint64_t> src =
        FirstAddress(*probe, FirstAccess(c.patched.kernel, BaseName(t.buf)));
    const std::optional<uint64_t> dst =
        FirstAddress(*probe, FirstAccess(c.patched.kernel, t.anchor));
    if (!src || !dst) {
      return absl::InternalError(
          fmt::format("case {}: probe did not reach the target", d.id));
    }
    const int64_t into = 4 * rng_(16, 512);
    bad.k = good.k + (static_cast<int64_t>(*dst - *src) + into) / 4;
  }

  absl::StatusOr<Program> buggy = MakeProgram(text(false), grid, args(bad));
  if (!buggy.ok()) return buggy.status();
  c.buggy = *std::move(buggy);

  const bool dynamic_region = t.buf.starts_with("dd");
  d.expected = Derive(d, t.slack > 0, dynamic_region && rw, false);
  c.d = std::move(d);
  return c;
}

absl::StatusOr<Case> Builder::Temporal(CaseDescriptor d, int v) {
  const std::string name = fmt::format("gms{:03d}", d.id);
  const int64_t n = rng_(4, 32);
  const bool host = d.alloc == "host";
  const std::string malloc_op = host ? "malloc.host" : "malloc";
  const std::string free_op = host ? "free.host" : "free";
  std::string params = "out: *global_host i32, n: i64";
  std::vector<Arg> args = {Buf(4), Int(n)};
  std::string buggy, patched;
  bool interior = false;

  if (d.cls == BugClass::kUAF) {
    d.timing = v == 0 ? Timing::kImmediate : Timing::kDelayed;
    d.shape = v == 0 ? "free_then_load" : "free_churn_reallocate_load";
    std::string setup, release;
    if (host) {
      params += ", a: *global_host i32";
      args.push_back(Buf(n));
      setup = "  store a[0] 5\n";
    } else {
      setup = "  a = malloc i32 n\n  store a[0] 5\n";
    }
    release = fmt::format("  {} a\n", free_op);
    const std::string use = "  x = load a[0]\n  store out[0] x\n";
    std::string after;
    if (v == 1) {
      // Frees enough other memory to push `a` out of quarantine, then takes
      // its chunk back with a same-sized allocation.
      after = fmt::format(
          "  c = add 0 0\n"
          "  jump head\n"
          "head:\n"
          "  branch (lt c {}) body tail\n"
          "body:\n"
          "  q = {} i32 {}\n"
          "  {} q\n"
          "  c = add c 1\n"
          "  jump head\n"
          "tail:\n"
          "  r = {} i32 n\n"
          "  store r[0] 9\n",
          rng_(5, 7), malloc_op, kChurnElems, free_op, malloc_op);
    }
    const std::string tail = v == 1 ? fmt::format("  {} r\n", free_op) : "";
    buggy = setup + release + after + use + tail;
    patched = setup + use + release + after + tail;
  } else if (d.cls == BugClass::kIF) {
    interior = v == 2;
    const std::string good_free = host ? "free.host" : "free";
    const std::string bad_free = host ? "free" : "free.host";
    if (v == 2) {
      d.shape = "free_interior_pointer";
      const int64_t f0 = rng_(4, 16);
      const int64_t f1 = rng_(4, 16);
      if (host) {
        params += fmt::format(", a: *global_host i32 {{{}, {}}}", f0, f1);
        args.push_back(Buf(f0 + f1));
        buggy = "  store a.1[0] 1\n";
      } else {
        buggy =
            fmt::format("  a = malloc i32 {} {{{}, {}}}\n  store a.1[0] 1\n",
                        f0 + f1, f0, f1);
      }
      patched = buggy + fmt::format("  {} a\n", good_free);
      buggy += fmt::format("  {} a.1\n", good_free);
    } else {
      std::string setup;
      if (host && v == 0) {
        d.shape = "host_buffer_device_free";
        params += ", a: *global_host i32";
        args.push_back(Buf(n));
        setup = "  store a[0] 1\n";
      } else {
        d.shape = host ? "host_malloc_device_free" : "device_malloc_host_free";
        setup = fmt::format("  a = {} i32 n\n  store a[0] 1\n", malloc_op);
      }
      if (!host && v == 1) {
        d.shape = "device_malloc_host_free_on_branch";
        auto release = [&](const std::string& op) {
          return fmt::format(
              "  branch (gt n 0) release done\n"
              "release:\n"
              "  {} a\n"
              "  jump done\n"
              "done:\n",
              op);
        };
        buggy = setup + release(bad_free);
        patched = setup + release(good_free);
      } else {
        buggy = setup + fmt::format("  {} a\n", bad_free);
        patched = setup + fmt::format("  {} a\n", good_free);
      }
    }
  } else if (d.cls == BugClass::kDF) {
    d.shape = "double_free";
    std::string setup;
    if (host) {
      params += ", a: *global_host i32";
      args.push_back(Buf(n));
      setup = "  store a[0] 1\n";
    } else {
      setup = "  a = malloc i32 n\n  store a[0] 1\n";
    }
    patched = setup + fmt::format("  {} a\n", free_op);
    buggy = patched + fmt::format("  {} a\n", free_op);
  } else {
    d.timing = v == 0 ? Timing::kImmediate : Timing::kDelayed;
    d.shape = v == 0 ? "scope_exit_then_load" : "scope_exit_reuse_load";
    const std::string count = d.alloc == "dynamic" ? "n" : fmt::format("{}", n);
    const std::string open = fmt::format(
        "  scope_begin\n  s = alloca i32 {}\n  store s[0] 1\n", count);
    const std::string use = "  x = load s[0]\n  store out[0] x\n";
    if (v == 0) {
      buggy = open + "  scope_end\n" + use;
      patched = open + use + "  scope_end\n";
    } else {
      // A second frame of the same size reuses the stack slot.
      const std::string reuse = fmt::format(
          "  scope_begin\n  t = alloca i32 {}\n  store t[0] 2\n", count);
      buggy = open + "  scope_end\n" + reuse + use + "  scope_end\n";
      patched = open + use + "  scope_end\n" + reuse + "  scope_end\n";
    }
  }

  Case c;
  kir::GridConfig grid;
  absl::StatusOr<Program> b =
      MakeProgram(KernelText(name, params, "", buggy), grid, args);
  if (!b.ok()) return b.status();
  absl::StatusOr<Program> p =
      MakeProgram(KernelText(name, params, "", patched), grid, args);
  if (!p.ok()) return p.status();
  c.buggy = *std::move(b);
  c.patched = *std::move(p);
  d.expected = Derive(d, false, false, interior);
  c.d = std::move(d);
  return c;
}

absl::StatusOr<Case> Builder::Build(int id, int row_index, int v) {
  const Row& row = Rows()[row_index];
  CaseDescriptor d;
  d.id = id;
  d.row = row_index;
  d.axis = row.axis;
  d.cls = row.cls;
  if (row.group == "intra_allocation") {
    d.space = row.kind;
    d.alloc = "intra_allocation";
  } else {
    d.space = row.group;
    d.alloc = row.kind;
  }
  if (row.axis == Axis::kTemporal) return Temporal(std::move(d), v);
  Target t;
  if (row.group == "global") {
    t = GlobalTarget(row, v);
  } else if (row.group == "local") {
    t = LocalTarget(row, v);
  } else if (row.group == "shared") {
    t = SharedTarget(row, v);
  } else {
    t = IntraTarget(row);
  }
  return Spatial(std::move(d), std::move(t), ShapeFor(row, v));
}

// Checks a case against the reference interpreter.
absl::Status Validate(const Case& c) {
  absl::StatusOr<refsim::Result> b =
      refsim::RunReference(c.buggy.kernel, c.buggy.grid, c.buggy.inputs);
  if (!b.ok()) return b.status();
  const bool found =
      std::any_of(b->bugs.begin(), b->bugs.end(), [&](const refsim::Bug& bug) {
        return sanrt::ClassSatisfies(bug.cls, c.d.cls);
      });
  if (!found) {
    return absl::InternalError(
        fmt::format("case {}: reference finds no {} bug\n{}", c.d.name(),
                    sanrt::ToString(c.d.cls), c.buggy.text));
  }
  absl::StatusOr<refsim::Result> p =
      refsim::RunReference(c.patched.kernel, c.patched.grid, c.patched.inputs);
  if (!p.ok()) return p.status();
  if (!p->bugs.empty()) {
    return absl::InternalError(
        fmt::format("case {}: patched twin has {} bugs\n{}", c.d.name(),
                    p->bugs.size(), c.patched.text));
  }
  return absl::OkStatus();
}

std::string GroupLabel(const Row& r) {
  return fmt::format("{} {}", ToString(r.axis), r.group);
}

std::string Fraction(int a, int b) { return fmt::format("{}/{}", a, b); }

absl::Status WriteFile(const std::filesystem::path& path,
                       const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) return absl::InternalError("cannot write " + path.string());
  return absl::OkStatus();
}

absl::Status WriteText(const std::filesystem::path& path,
                       const std::string& text) {
  return WriteFile(path, std::vector<uint8_t>(text.begin(), text.end()));
}

nlohmann::json GridJson(const kir::GridConfig& g) {
  return {{"blocks", g.blocks},
          {"threads", g.threads},
          {"dyn_shared_bytes", g.dyn_shared_bytes}};
}

}  // namespace

std::string_view ToString(Axis a) {
  return a == Axis::kSpatial ? "spatial" : "temporal";
}

std::string_view ToString(Adjacency a) {
  switch (a) {
    case Adjacency::kNone:
      return "none";
    case Adjacency::kAdjacent:
      return "adjacent";
    case Adjacency::kNonAdjacent:
      return "non_adjacent";
  }
  return "?";
}

std::string_view ToString(Timing t) {
  switch (t) {
    case Timing::kNone:
      return "none";
    case Timing::kImmediate:
      return "immediate";
    case Timing::kDelayed:
      return "delayed";
  }
  return "?";
}

std::string Row::label() const {
  return fmt::format("{} {} {} {}", ToString(axis), group, kind,
                     sanrt::ToString(cls));
}

const std::vector<Row>& Rows() {
  static const std::vector<Row>* rows = new std::vector<Row>(MakeRows());
  return *rows;
}

std::string CaseDescriptor::name() const {
  return fmt::format("{:03d}_{}_{}_{}_{}", id, ToString(axis), space, alloc,
                     sanrt::ToString(cls));
}

absl::StatusOr<std::vector<Case>> Generate(uint64_t seed) {
  Builder b(seed);
  std::vector<Case> out;
  const std::vector<Row>& rows = Rows();
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    for (int v = 0; v < rows[r].count; ++v) {
      absl::StatusOr<Case> c = b.Build(static_cast<int>(out.size()), r, v);
      if (!c.ok()) return c.status();
      if (absl::Status s = Validate(*c); !s.ok()) return s;
      out.push_back(*std::move(c));
    }
  }
  return out;
}

absl::StatusOr<std::vector<sanrt::BugReport>> RunAudit(
    const Program& p, sanrt::DetectorMode mode, const sanrt::Config& memory) {
  absl::StatusOr<pact::LoweredProgram> lp =
      pact::Lower(p.kernel, affine::Analyze(p.kernel), affine::PlanKind::kAll);
  if (!lp.ok()) return lp.status();
  pact::RunOptions o;
  o.detector = mode;
  o.memory = memory;
  absl::StatusOr<pact::RunResult> r =
      pact::RunLowered(*lp, p.grid, p.inputs, {}, o);
  if (!r.ok()) return r.status();
  return std::move(r->reports);
}

bool Detected(const std::vector<sanrt::BugReport>& reports,
              sanrt::BugClass declared) {
  return std::any_of(reports.begin(), reports.end(),
                     [&](const sanrt::BugReport& r) {
                       return sanrt::ClassSatisfies(r.cls, declared);
                     });
}

int Matrix::total() const {
  int n = 0;
  for (const RowScore& r : rows) n += r.detected;
  return n;
}

int Matrix::expected_total() const {
  int n = 0;
  for (const RowScore& r : rows) n += r.expected;
  return n;
}

int Matrix::cases() const {
  int n = 0;
  for (const RowScore& r : rows) n += r.total;
  return n;
}

bool Matrix::MatchesExpected() const {
  return std::all_of(rows.begin(), rows.end(), [](const RowScore& r) {
    return r.detected == r.expected;
  });
}

absl::StatusOr<Matrix> Score(const std::vector<Case>& cases,
                             sanrt::DetectorMode mode) {
  Matrix m;
  m.mode = mode;
  for (int r = 0; r < static_cast<int>(Rows().size()); ++r) {
    m.rows.push_back(RowScore{r, 0, 0, 0});
  }
  for (const Case& c : cases) {
    absl::StatusOr<std::vector<sanrt::BugReport>> reports =
        RunAudit(c.buggy, mode);
    if (!reports.ok()) return reports.status();
    const bool hit = Detected(*reports, c.d.cls);
    m.detected.push_back(hit);
    RowScore& row = m.rows[c.d.row];
    ++row.total;
    row.detected += hit;
    const bool exp = mode == sanrt::DetectorMode::kRedzone
                         ? c.d.expected.redzone
                         : c.d.expected.exact;
    row.expected += exp;

    absl::StatusOr<std::vector<sanrt::BugReport>> twin =
        RunAudit(c.patched, mode);
    if (!twin.ok()) return twin.status();
    m.twin_reports += static_cast<int64_t>(twin->size());
  }
  return m;
}

std::string MatrixText(const Matrix& redzone, const Matrix& exact) {
  const std::vector<Row>& rows = Rows();
  std::string out =
      fmt::format("{:<44}{:>6}{:>10}{:>10}{:>10}{:>10}\n", "row", "tests",
                  "redzone", "expected", "exact", "expected");
  auto line = [&](const std::string& label, int tests, int rz, int rz_exp,
                  int ex, int ex_exp) {
    out += fmt::format("{:<44}{:>6}{:>10}{:>10}{:>10}{:>10}\n", label, tests,
                       Fraction(rz, tests), Fraction(rz_exp, tests),
                       Fraction(ex, tests), Fraction(ex_exp, tests));
  };
  std::array<int, 5> group{};
  for (size_t i = 0; i < rows.size(); ++i) {
    const RowScore& a = redzone.rows[i];
    const RowScore& b = exact.rows[i];
    line(rows[i].label(), a.total, a.detected, a.expected, b.detected,
         b.expected);
    group[0] += a.total;
    group[1] += a.detected;
    group[2] += a.expected;
    group[3] += b.detected;
    group[4] += b.expected;
    if (i + 1 == rows.size() ||
        GroupLabel(rows[i + 1]) != GroupLabel(rows[i])) {
      line(GroupLabel(rows[i]) + " total", group[0], group[1], group[2],
           group[3], group[4]);
      group = {};
    }
  }
  line("total", redzone.cases(), redzone.total(), redzone.expected_total(),
       exact.total(), exact.expected_total());
  out += fmt::format("twin_reports redzone={} exact={}\n", redzone.twin_reports,
                     exact.twin_reports);
  return out;
}

std::string MatrixJsonLines(const Matrix& redzone, const Matrix& exact) {
  std::string out;
  const std::vector<Row>& rows = Rows();
  for (size_t i = 0; i < rows.size(); ++i) {
    nlohmann::json j = {{"type", "row"},
                        {"row", rows[i].label()},
                        {"tests", redzone.rows[i].total},
                        {"redzone", redzone.rows[i].detected},
                        {"redzone_expected", redzone.rows[i].expected},
                        {"exact", exact.rows[i].detected},
                        {"exact_expected", exact.rows[i].expected}};
    out += j.dump() + "\n";
  }
  for (const Matrix* m : {&redzone, &exact}) {
    nlohmann::json j = {{"type", "total"},
                        {"detector", sanrt::ToString(m->mode)},
                        {"tests", m->cases()},
                        {"detected", m->total()},
                        {"expected", m->expected_total()},
                        {"matches_expected", m->MatchesExpected()},
                        {"twin_reports", m->twin_reports}};
    out += j.dump() + "\n";
  }
  return out;
}

absl::Status WriteCorpus(const std::vector<Case>& cases,
                         const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path root(dir);
  fs::create_directories(root, ec);
  if (ec) return absl::InternalError("cannot create " + dir);
  std::string manifest;
  for (const Case& c : cases) {
    const std::string name = c.d.name();
    nlohmann::json files;
    for (const auto& [suffix, prog] :
         {std::pair<std::string, const Program*>{"", &c.buggy},
          {".patched", &c.patched}}) {
      fuzz::HarnessConfig config;
      config.grid = prog->grid;
      const std::string kir = name + suffix + ".kir";
      const std::string bin = name + suffix + ".bin";
      if (absl::Status s = WriteText(root / kir, prog->text); !s.ok()) return s;
      if (absl::Status s =
              WriteFile(root / bin,
                        fuzz::EncodeInputs(prog->kernel, config, prog->inputs));
          !s.ok()) {
        return s;
      }
      files[suffix.empty() ? "buggy" : "patched"] = {
          {"kernel", kir}, {"input", bin}, {"grid", GridJson(prog->grid)}};
    }
    nlohmann::json j = {
        {"id", c.d.id},
        {"name", name},
        {"row", Rows()[c.d.row].label()},
        {"axis", ToString(c.d.axis)},
        {"space", c.d.space},
        {"alloc", c.d.alloc},
        {"class", sanrt::ToString(c.d.cls)},
        {"adjacency", ToString(c.d.adjacency)},
        {"timing", ToString(c.d.timing)},
        {"shape", c.d.shape},
        {"expected",
         {{"redzone", c.d.expected.redzone}, {"exact", c.d.expected.exact}}},
        {"buggy", files["buggy"]},
        {"patched", files["patched"]}};
    manifest += j.dump() + "\n";
  }
  return WriteText(root / "manifest.jsonl", manifest);
}

}  // namespace kfuzz::gms
