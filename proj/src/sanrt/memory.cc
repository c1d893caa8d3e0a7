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

#include "kfuzz/sanrt/memory.h"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

namespace kfuzz::sanrt {
namespace {

constexpr int64_t kAlign = 16;
constexpr int64_t kSmallLimit = 1 << 20;
constexpr int64_t kPage = 4096;

int64_t RoundUp(int64_t v, int64_t a) { return (v + a - 1) / a * a; }

absl::Status OutOfMemory(std::string_view what, __int128 bytes) {
  return absl::ResourceExhaustedError(
      fmt::format("out of memory: {} request of {} bytes", what,
                  static_cast<long double>(bytes)));
}

std::string_view RegionName(Region r) {
  switch (r) {
    case Region::kHeap:
      return "heap";
    case Region::kShared:
      return "shared";
    case Region::kStack:
      return "stack";
    case Region::kCompiler:
      return "compiler";
  }
  return "?";
}

// Bytes described by shadow as addressable.
int64_t ShadowSize(const Allocation& a) {
  return a.dynamic_shared ? RoundUp(a.size, kAlign) : a.size;
}

}  // namespace

void Memory::Entry::Write(int64_t off, const uint8_t* src, int64_t n) {
  if (meta.size <= kSmallLimit) {
    std::memcpy(small.data() + off, src, n);
    return;
  }
  while (n > 0) {
    const int64_t page = off / kPage;
    const int64_t in = off % kPage;
    const int64_t len = std::min(n, kPage - in);
    auto& p = pages[page];
    if (p == nullptr) {
      p = std::make_unique<uint8_t[]>(kPage);
      std::memset(p.get(), 0, kPage);
    }
    std::memcpy(p.get() + in, src, len);
    off += len;
    src += len;
    n -= len;
  }
}

void Memory::Entry::Read(int64_t off, uint8_t* dst, int64_t n) const {
  if (meta.size <= kSmallLimit) {
    std::memcpy(dst, small.data() + off, n);
    return;
  }
  while (n > 0) {
    const int64_t page = off / kPage;
    const int64_t in = off % kPage;
    const int64_t len = std::min(n, kPage - in);
    auto it = pages.find(page);
    if (it == pages.end()) {
      std::memset(dst, 0, len);
    } else {
      std::memcpy(dst, it->second.get() + in, len);
    }
    off += len;
    dst += len;
    n -= len;
  }
}

Memory::Memory(Config config, DetectorMode detector, bool abort_on_report)
    : config_(config),
      detector_(detector),
      abort_on_report_(abort_on_report),
      shift_(std::countr_zero(static_cast<uint64_t>(config.granularity))) {}

absl::StatusOr<int64_t> Memory::Allocate(const AllocRequest& req,
                                         const Site& site) {
  const int64_t elem_size = kir::ScalarSize(req.elem);
  const int64_t unit = req.dynamic_shared ? 1 : elem_size;
  const __int128 bytes = static_cast<__int128>(req.count) * unit;

  int64_t capacity = 0;
  switch (req.region) {
    case Region::kHeap:
      capacity = config_.heap_bytes;
      break;
    case Region::kShared:
      capacity = config_.shared_bytes;
      break;
    case Region::kStack:
      capacity = config_.stack_bytes_per_thread;
      break;
    case Region::kCompiler:
      capacity = config_.compiler_bytes;
      break;
  }
  if (req.count < 0 || bytes > capacity) {
    return OutOfMemory(RegionName(req.region), bytes);
  }

  Allocation a;
  a.id = static_cast<int64_t>(allocs_.size());
  a.size = static_cast<int64_t>(bytes);
  a.space = req.space;
  a.allocator = req.allocator;
  a.region = req.region;
  a.elem = req.elem;
  a.compiler_induced = req.compiler_induced;
  a.dynamic_shared = req.dynamic_shared;
  if (!req.fields.empty()) {
    a.field_offsets.push_back(0);
    for (int64_t f : req.fields) {
      a.field_offsets.push_back(a.field_offsets.back() + f * elem_size);
    }
  }

  const int64_t flank = RoundUp(config_.redzone, kAlign);
  a.chunk_size = flank + RoundUp(ShadowSize(a), kAlign) + flank;

  auto bump = [&](uint64_t& top, uint64_t limit) -> bool {
    if (top + a.chunk_size > limit) return false;
    a.chunk_begin = top;
    top += a.chunk_size;
    return true;
  };
  switch (req.region) {
    case Region::kHeap: {
      auto it = free_chunks_.find(a.chunk_size);
      if (it != free_chunks_.end() && !it->second.empty()) {
        a.chunk_begin = it->second.front();
        it->second.pop_front();
      } else if (!bump(heap_top_, kHeapBase + config_.heap_bytes)) {
        return OutOfMemory("heap", bytes);
      }
      break;
    }
    case Region::kShared:
      if (!bump(shared_top_, kSharedBase + config_.shared_bytes)) {
        return OutOfMemory("shared", bytes);
      }
      block_allocs_.push_back(a.id);
      break;
    case Region::kStack: {
      if (req.thread_slot < 0 || req.thread_slot >= config_.max_threads) {
        return absl::InvalidArgumentError(
            fmt::format("thread slot {} has no stack", req.thread_slot));
      }
      const uint64_t seg =
          kStackBase + static_cast<uint64_t>(req.thread_slot *
                                             config_.stack_bytes_per_thread);
      StackSlot& slot = stacks_[req.thread_slot];
      uint64_t top = seg + slot.top;
      if (!bump(top, seg + config_.stack_bytes_per_thread)) {
        return OutOfMemory("stack", bytes);
      }
      slot.top = static_cast<int64_t>(top - seg);
      slot.allocs.push_back(a.id);
      break;
    }
    case Region::kCompiler:
      if (!bump(compiler_top_, kCompilerBase + config_.compiler_bytes)) {
        return OutOfMemory("compiler", bytes);
      }
      block_allocs_.push_back(a.id);
      break;
  }
  a.base = a.chunk_begin + flank;

  chunks_.erase(chunks_.lower_bound(a.chunk_begin),
                chunks_.lower_bound(a.chunk_begin + a.chunk_size));
  chunks_[a.chunk_begin] = a.id;
  Poison(a.chunk_begin, a.chunk_size, kShadowRedzone);
  Unpoison(a.base, ShadowSize(a));

  Entry e;
  e.meta = std::move(a);
  if (e.meta.size <= kSmallLimit) e.small.assign(e.meta.size, 0);
  allocs_.push_back(std::move(e));
  const Allocation& placed = allocs_.back().meta;
  Record(site, AccessKind::kAlloc, placed.id, req.count, placed.base);
  return placed.id;
}

void Memory::Free(int64_t alloc_id, int field, kir::Allocator allocator,
                  const Site& site) {
  const Allocation& a = allocs_[alloc_id].meta;
  int64_t offset = 0;
  if (field >= 0 && field + 1 < static_cast<int>(a.field_offsets.size())) {
    offset = a.field_offsets[field];
  }
  const uint64_t addr = a.base + offset;
  Record(site, AccessKind::kFree, alloc_id, 0, addr);

  // The heap chunk whose user base is exactly `addr`, if any.
  int64_t target = NearestAllocation(addr);
  if (target >= 0) {
    const Allocation& t = allocs_[target].meta;
    if (t.region != Region::kHeap || t.base != addr) target = -1;
  }

  if (detector_ == DetectorMode::kRedzone) {
    if (target < 0) {
      Report(BugClass::kIF, site, AccessKind::kFree, alloc_id, 0, addr,
             DistanceTo(a, addr, 1));
    } else if (allocs_[target].meta.state != AllocState::kLive) {
      Report(BugClass::kDF, site, AccessKind::kFree, target, 0, addr, 0);
    }
  } else if (detector_ == DetectorMode::kExact) {
    if (a.state == AllocState::kFreed) {
      Report(BugClass::kDF, site, AccessKind::kFree, alloc_id, 0, addr, 0);
    } else if (a.state != AllocState::kLive || a.region != Region::kHeap ||
               offset != 0 || a.allocator != allocator) {
      Report(BugClass::kIF, site, AccessKind::kFree, alloc_id, 0, addr, offset);
    }
  }

  if (target >= 0 && allocs_[target].meta.state == AllocState::kLive) {
    Allocation& t = allocs_[target].meta;
    t.state = AllocState::kFreed;
    t.free_seq = free_seq_++;
    Poison(t.base, RoundUp(t.size, config_.granularity), kShadowFreed);
    Quarantine(target);
  }
}

void Memory::Quarantine(int64_t id) {
  quarantine_.push_back(id);
  quarantine_total_ += allocs_[id].meta.size;
  // A chunk leaves quarantine once Q bytes have been freed after it.
  while (!quarantine_.empty()) {
    const Allocation& front = allocs_[quarantine_.front()].meta;
    if (quarantine_total_ - front.size < config_.quarantine_bytes) break;
    quarantine_total_ -= front.size;
    free_chunks_[front.chunk_size].push_back(front.chunk_begin);
    quarantine_.pop_front();
  }
}

__int128 Memory::Offset(const Allocation& a, int field, int64_t index,
                        int64_t elem_size) {
  __int128 start = 0;
  if (field >= 0 && field + 1 < static_cast<int>(a.field_offsets.size())) {
    start = a.field_offsets[field];
  }
  return start + static_cast<__int128>(index) * elem_size;
}

Value Memory::Load(int64_t alloc_id, int field, int64_t index,
                   kir::ScalarType type, const Site& site) {
  Entry& e = allocs_[alloc_id];
  const int64_t n = kir::ScalarSize(type);
  const __int128 off = Offset(e.meta, field, index, n);
  const uint64_t addr = e.meta.base + static_cast<uint64_t>(off);
  Record(site, AccessKind::kRead, alloc_id, index, addr);
  CheckAccess(e.meta, field, index, n, AccessKind::kRead, site);
  if (e.meta.state != AllocState::kLive || off < 0 || off + n > e.meta.size) {
    return kir::IsFloat(type) ? Value::Float(0.0) : Value::Int(0);
  }
  uint8_t buf[8];
  e.Read(static_cast<int64_t>(off), buf, n);
  switch (type) {
    case kir::ScalarType::kI32: {
      int32_t v;
      std::memcpy(&v, buf, 4);
      return Value::Int(v);
    }
    case kir::ScalarType::kI64: {
      int64_t v;
      std::memcpy(&v, buf, 8);
      return Value::Int(v);
    }
    case kir::ScalarType::kF32: {
      float v;
      std::memcpy(&v, buf, 4);
      return Value::Float(v);
    }
    case kir::ScalarType::kF64: {
      double v;
      std::memcpy(&v, buf, 8);
      return Value::Float(v);
    }
  }
  return Value::Int(0);
}

void Memory::Store(int64_t alloc_id, int field, int64_t index,
                   kir::ScalarType type, const Value& v, const Site& site) {
  Entry& e = allocs_[alloc_id];
  const int64_t n = kir::ScalarSize(type);
  const __int128 off = Offset(e.meta, field, index, n);
  const uint64_t addr = e.meta.base + static_cast<uint64_t>(off);
  Record(site, AccessKind::kWrite, alloc_id, index, addr);
  CheckAccess(e.meta, field, index, n, AccessKind::kWrite, site);
  if (e.meta.state != AllocState::kLive || off < 0 || off + n > e.meta.size) {
    return;
  }
  const Value c = ConvertTo(v, type);
  uint8_t buf[8];
  switch (type) {
    case kir::ScalarType::kI32: {
      const int32_t x = static_cast<int32_t>(c.i);
      std::memcpy(buf, &x, 4);
      break;
    }
    case kir::ScalarType::kI64:
      std::memcpy(buf, &c.i, 8);
      break;
    case kir::ScalarType::kF32: {
      const float x = static_cast<float>(c.f);
      std::memcpy(buf, &x, 4);
      break;
    }
    case kir::ScalarType::kF64:
      std::memcpy(buf, &c.f, 8);
      break;
  }
  e.Write(static_cast<int64_t>(off), buf, n);
}

void Memory::CheckSlot(int64_t alloc_id, int64_t index, AccessKind kind,
                       const Site& site) {
  const Allocation& a = allocs_[alloc_id].meta;
  const uint64_t addr = a.base + static_cast<uint64_t>(index * 8);
  Record(site, kind, alloc_id, index, addr);
  CheckAccess(a, -1, index, 8, kind, site);
}

void Memory::CheckAccess(const Allocation& a, int field, int64_t index,
                         int64_t elem_size, AccessKind kind, const Site& site) {
  if (detector_ == DetectorMode::kNone) return;
  const __int128 off = Offset(a, field, index, elem_size);
  const uint64_t addr = a.base + static_cast<uint64_t>(off);

  if (detector_ == DetectorMode::kRedzone) {
    uint8_t bad = 0;
    if (CheckShadow(addr, elem_size, &bad)) return;
    const int64_t owner = NearestAllocation(addr);
    BugClass cls = BugClass::kOobRw;
    if (bad == kShadowRedzone && owner >= 0 &&
        addr >= allocs_[owner].meta.base) {
      cls = BugClass::kBO;
    }
    if (bad == kShadowFreed) cls = BugClass::kUAF;
    if (bad == kShadowOutOfScope) cls = BugClass::kUAS;
    const int64_t distance =
        owner >= 0 ? DistanceTo(allocs_[owner].meta, addr, elem_size) : 0;
    Report(cls, site, kind, owner, index, addr, distance);
    return;
  }

  if (a.state == AllocState::kFreed) {
    Report(BugClass::kUAF, site, kind, a.id, index, addr, 0);
    return;
  }
  if (a.state == AllocState::kOutOfScope) {
    Report(BugClass::kUAS, site, kind, a.id, index, addr, 0);
    return;
  }
  __int128 lo = 0;
  __int128 hi = a.size;
  if (!a.dynamic_shared && field >= 0 &&
      field + 1 < static_cast<int>(a.field_offsets.size())) {
    lo = a.field_offsets[field];
    hi = a.field_offsets[field + 1];
  }
  if (off >= lo && off + elem_size <= hi) return;
  // Only a contiguous overflow past the upper bound is a buffer overflow.
  const bool upper = off >= lo;
  __int128 gap = 0;
  if (off >= hi) {
    gap = off - hi;
  } else if (off + elem_size <= lo) {
    gap = lo - (off + elem_size);
  }
  const int64_t distance = static_cast<int64_t>(
      std::min<__int128>(gap, std::numeric_limits<int64_t>::max()));
  Report(upper && gap < config_.redzone ? BugClass::kBO : BugClass::kOobRw,
         site, kind, a.id, index, addr, distance);
}

bool Memory::CheckShadow(uint64_t addr, int64_t n, uint8_t* bad) const {
  const uint64_t g = static_cast<uint64_t>(config_.granularity);
  const uint64_t last_byte = addr + static_cast<uint64_t>(n) - 1;
  for (uint64_t gr = addr >> shift_; gr <= (last_byte >> shift_); ++gr) {
    const uint8_t s = ShadowAt(gr << shift_);
    if (s == kShadowAddressable) continue;
    if (s < g) {
      const uint64_t granule_begin = gr << shift_;
      const uint64_t hi = std::min(last_byte, granule_begin + g - 1);
      if (hi - granule_begin < s) continue;
      *bad = kShadowRedzone;
      return false;
    }
    *bad = s;
    return false;
  }
  return true;
}

uint8_t Memory::ShadowAt(uint64_t addr) const {
  const uint64_t granule = addr >> shift_;
  const uint64_t page = granule / kPage;
  if (page != cached_page_) {
    auto it = shadow_.find(page);
    if (it == shadow_.end()) return kShadowUnallocated;
    cached_page_ = page;
    cached_ptr_ = it->second.get();
  }
  return cached_ptr_[granule % kPage];
}

uint8_t* Memory::ShadowPage(uint64_t granule, bool create) {
  const uint64_t page = granule / kPage;
  if (page == cached_page_) return cached_ptr_;
  auto it = shadow_.find(page);
  if (it == shadow_.end()) {
    if (!create) return nullptr;
    auto p = std::make_unique<uint8_t[]>(kPage);
    std::memset(p.get(), kShadowUnallocated, kPage);
    it = shadow_.emplace(page, std::move(p)).first;
  }
  cached_page_ = page;
  cached_ptr_ = it->second.get();
  return cached_ptr_;
}

void Memory::Poison(uint64_t begin, int64_t n, uint8_t value) {
  if (n <= 0) return;
  uint64_t gr = begin >> shift_;
  const uint64_t end = (begin + static_cast<uint64_t>(n) - 1) >> shift_;
  while (gr <= end) {
    uint8_t* page = ShadowPage(gr, true);
    const uint64_t in = gr % kPage;
    const uint64_t len = std::min<uint64_t>(end - gr + 1, kPage - in);
    std::memset(page + in, value, len);
    gr += len;
  }
}

void Memory::Unpoison(uint64_t base, int64_t n) {
  const int64_t g = config_.granularity;
  const int64_t full = n / g * g;
  Poison(base, full, kShadowAddressable);
  if (n % g != 0) {
    const uint64_t gr = (base + full) >> shift_;
    ShadowPage(gr, true)[gr % kPage] = static_cast<uint8_t>(n % g);
  }
}

int64_t Memory::NearestAllocation(uint64_t addr) const {
  auto it = chunks_.upper_bound(addr);
  if (it == chunks_.begin()) return -1;
  --it;
  const Allocation& a = allocs_[it->second].meta;
  if (addr >= a.chunk_begin + a.chunk_size) return -1;
  return a.id;
}

int64_t Memory::DistanceTo(const Allocation& a, uint64_t addr,
                           int64_t n) const {
  const __int128 off =
      static_cast<__int128>(addr) - static_cast<__int128>(a.base);
  if (off >= a.size) return static_cast<int64_t>(off - a.size);
  if (off + n <= 0) return static_cast<int64_t>(-(off + n));
  return 0;
}

void Memory::Record(const Site& site, AccessKind kind, int64_t alloc,
                    int64_t index, uint64_t addr) {
  if (!trace_on_) return;
  trace_.push_back(AccessRecord{site.thread, site.instr_id, kind, alloc, index,
                                addr, site.compiler_induced});
}

void Memory::Report(BugClass cls, const Site& site, AccessKind kind,
                    int64_t alloc, int64_t index, uint64_t addr,
                    int64_t distance) {
  if (aborted_) return;
  if (static_cast<int64_t>(reports_.size()) >= config_.max_reports) {
    ++dropped_reports_;
  } else {
    BugReport r;
    r.cls = cls;
    r.access =
        AccessRecord{site.thread, site.instr_id,        kind, alloc, index,
                     addr,        site.compiler_induced};
    r.alloc_id = alloc;
    r.distance = distance;
    r.detector = detector_;
    reports_.push_back(r);
  }
  if (abort_on_report_) aborted_ = true;
}

void Memory::PushScope(int64_t thread_slot) {
  StackSlot& s = stacks_[thread_slot];
  s.scopes.emplace_back(s.top, s.allocs.size());
}

void Memory::PopScope(int64_t thread_slot) {
  StackSlot& s = stacks_[thread_slot];
  if (s.scopes.empty()) return;
  const auto [top, count] = s.scopes.back();
  s.scopes.pop_back();
  for (size_t i = count; i < s.allocs.size(); ++i) {
    Allocation& a = allocs_[s.allocs[i]].meta;
    a.state = AllocState::kOutOfScope;
    Poison(a.base, RoundUp(a.size, config_.granularity), kShadowOutOfScope);
  }
  s.allocs.resize(count);
  s.top = top;
}

void Memory::Release(int64_t id) {
  Entry& e = allocs_[id];
  if (e.meta.state == AllocState::kLive) e.meta.state = AllocState::kOutOfScope;
  Poison(e.meta.chunk_begin, e.meta.chunk_size, kShadowUnallocated);
  auto it = chunks_.find(e.meta.chunk_begin);
  if (it != chunks_.end() && it->second == id) chunks_.erase(it);
  e.small.clear();
  e.small.shrink_to_fit();
  e.pages.clear();
}

void Memory::EndBlock() {
  for (auto& [slot, s] : stacks_) {
    for (int64_t id : s.allocs) Release(id);
  }
  stacks_.clear();
  for (int64_t id : block_allocs_) Release(id);
  block_allocs_.clear();
  shared_top_ = kSharedBase;
  compiler_top_ = kCompilerBase;
}

void Memory::WriteBytes(int64_t alloc_id, int64_t offset, const uint8_t* data,
                        int64_t n) {
  Entry& e = allocs_[alloc_id];
  n = std::min(n, e.meta.size - offset);
  if (n > 0) e.Write(offset, data, n);
}

std::vector<uint8_t> Memory::ReadBytes(int64_t alloc_id) const {
  const Entry& e = allocs_[alloc_id];
  std::vector<uint8_t> out(e.meta.size);
  if (!out.empty()) e.Read(0, out.data(), e.meta.size);
  return out;
}

std::map<uint64_t, std::pair<bool, std::vector<uint8_t>>> Memory::HeapSnapshot()
    const {
  std::map<uint64_t, std::pair<bool, std::vector<uint8_t>>> out;
  for (const Entry& e : allocs_) {
    if (e.meta.region != Region::kHeap) continue;
    const bool live = e.meta.state == AllocState::kLive;
    out[e.meta.base] = {live,
                        live ? ReadBytes(e.meta.id) : std::vector<uint8_t>{}};
  }
  return out;
}

}  // namespace kfuzz::sanrt
