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

// The simulated memory of one kernel execution.
//
// Addresses live in a private 64-bit arena split into four regions:
//
//   heap      host API and device malloc allocations, FIFO quarantine
//   shared    per-block shared arrays, released when the block ends
//   stack     one segment per thread slot, scoped by scope_begin/scope_end
//   compiler  arrays introduced by lowering, released when the block ends
//
// Every allocation is flanked by redzones and described by shadow bytes at
// granularity G. Two detectors read this state: the redzone detector looks
// only at the shadow of the touched bytes, the exact detector checks the
// bounds and lifetime of the allocation the access was derived from.
//
// Memory effects are independent of the detector: a load or store only
// touches memory when it falls inside its own live allocation. Other loads
// yield zero and other stores are dropped.

#ifndef KFUZZ_SANRT_MEMORY_H_
#define KFUZZ_SANRT_MEMORY_H_

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/sanrt/report.h"
#include "kfuzz/sanrt/value.h"

namespace kfuzz::sanrt {

struct Config {
  int64_t redzone = 16;                  // R
  int64_t granularity = 8;               // G, a power of two no larger than 16
  int64_t quarantine_bytes = 256 << 10;  // Q
  int64_t heap_bytes = 64 << 20;
  int64_t shared_bytes = 16 << 20;
  int64_t stack_bytes_per_thread = 64 << 10;
  int64_t max_threads = 4096;
  int64_t compiler_bytes = 64 << 20;
  // Audit mode keeps at most this many reports; later ones are counted.
  int64_t max_reports = 4096;
};

inline constexpr uint64_t kHeapBase = 0x10000000;
inline constexpr uint64_t kSharedBase = 0x40000000;
inline constexpr uint64_t kStackBase = 0x50000000;
inline constexpr uint64_t kCompilerBase = 0x70000000;

enum class Region : uint8_t { kHeap, kShared, kStack, kCompiler };
enum class AllocState : uint8_t { kLive, kFreed, kOutOfScope };

// Shadow byte values. 1..G-1 mean "only the first k bytes are addressable".
inline constexpr uint8_t kShadowAddressable = 0x00;
inline constexpr uint8_t kShadowRedzone = 0xFA;
inline constexpr uint8_t kShadowFreed = 0xFD;
inline constexpr uint8_t kShadowOutOfScope = 0xF8;
inline constexpr uint8_t kShadowUnallocated = 0xFE;

struct Allocation {
  int64_t id = -1;
  uint64_t base = 0;
  int64_t size = 0;  // bytes
  uint64_t chunk_begin = 0;
  int64_t chunk_size = 0;
  kir::MemorySpace space = kir::MemorySpace::kGlobalHost;
  kir::Allocator allocator = kir::Allocator::kHostApi;
  Region region = Region::kHeap;
  AllocState state = AllocState::kLive;
  int64_t free_seq = -1;
  kir::ScalarType elem = kir::ScalarType::kI32;
  // Byte offsets of the declared sub-objects: field k spans
  // [field_offsets[k], field_offsets[k + 1]). Empty when none are declared.
  std::vector<int64_t> field_offsets;
  bool compiler_induced = false;
  bool dynamic_shared = false;
};

struct AllocRequest {
  int64_t count = 0;  // elements
  kir::ScalarType elem = kir::ScalarType::kI32;
  kir::MemorySpace space = kir::MemorySpace::kGlobalHost;
  kir::Allocator allocator = kir::Allocator::kHostApi;
  Region region = Region::kHeap;
  std::vector<int64_t> fields;  // element counts
  int64_t thread_slot = 0;      // stack region only
  bool compiler_induced = false;
  bool dynamic_shared = false;  // `count` is then a byte count
};

// Where an operation comes from, for traces and reports.
struct Site {
  ThreadId thread;
  int instr_id = -1;
  bool compiler_induced = false;
};

class Memory {
 public:
  explicit Memory(Config config = {},
                  DetectorMode detector = DetectorMode::kExact,
                  bool abort_on_report = false);
  Memory(const Memory&) = delete;
  Memory& operator=(const Memory&) = delete;

  const Config& config() const { return config_; }
  DetectorMode detector() const { return detector_; }

  // Returns the allocation id. Fails with ResourceExhausted when the region
  // cannot hold the request (including negative or overflowing sizes).
  absl::StatusOr<int64_t> Allocate(const AllocRequest& req, const Site& site);

  void Free(int64_t alloc_id, int field, kir::Allocator allocator,
            const Site& site);

  Value Load(int64_t alloc_id, int field, int64_t index, kir::ScalarType type,
             const Site& site);
  void Store(int64_t alloc_id, int field, int64_t index, kir::ScalarType type,
             const Value& v, const Site& site);

  // Checks an access to a slot of a compiler-induced array without touching
  // memory; the caller owns the contents.
  void CheckSlot(int64_t alloc_id, int64_t index, AccessKind kind,
                 const Site& site);

  void PushScope(int64_t thread_slot);
  void PopScope(int64_t thread_slot);

  // Releases every shared, stack and compiler allocation.
  void EndBlock();

  // Host-side helpers, not checked and not traced.
  void WriteBytes(int64_t alloc_id, int64_t offset, const uint8_t* data,
                  int64_t n);
  std::vector<uint8_t> ReadBytes(int64_t alloc_id) const;

  // Final state of global memory: base address -> (live, contents).
  std::map<uint64_t, std::pair<bool, std::vector<uint8_t>>> HeapSnapshot()
      const;

  const Allocation& allocation(int64_t id) const { return allocs_[id].meta; }
  int64_t allocation_count() const {
    return static_cast<int64_t>(allocs_.size());
  }

  // Shadow byte for the granule holding `addr`.
  uint8_t ShadowAt(uint64_t addr) const;

  const std::vector<BugReport>& reports() const { return reports_; }
  int64_t dropped_reports() const { return dropped_reports_; }
  bool aborted() const { return aborted_; }

  void set_trace(bool on) { trace_on_ = on; }
  const std::vector<AccessRecord>& trace() const { return trace_; }

  int64_t quarantine_bytes() const { return quarantine_total_; }

 private:
  struct Entry {
    Allocation meta;
    std::vector<uint8_t> small;
    std::unordered_map<int64_t, std::unique_ptr<uint8_t[]>> pages;

    void Write(int64_t off, const uint8_t* src, int64_t n);
    void Read(int64_t off, uint8_t* dst, int64_t n) const;
  };

  struct StackSlot {
    int64_t top = 0;
    std::vector<int64_t> allocs;
    std::vector<std::pair<int64_t, size_t>> scopes;  // (top, allocs.size())
  };

  // Byte offset of `index` within the allocation, relative to its base.
  static __int128 Offset(const Allocation& a, int field, int64_t index,
                         int64_t elem_size);

  void Record(const Site& site, AccessKind kind, int64_t alloc, int64_t index,
              uint64_t addr);
  void Report(BugClass cls, const Site& site, AccessKind kind, int64_t alloc,
              int64_t index, uint64_t addr, int64_t distance);

  // Detector checks; both may report.
  void CheckAccess(const Allocation& a, int field, int64_t index,
                   int64_t elem_size, AccessKind kind, const Site& site);
  bool CheckShadow(uint64_t addr, int64_t n, uint8_t* bad) const;
  int64_t NearestAllocation(uint64_t addr) const;
  int64_t DistanceTo(const Allocation& a, uint64_t addr, int64_t n) const;

  void Poison(uint64_t begin, int64_t n, uint8_t value);
  void Unpoison(uint64_t base, int64_t n);
  uint8_t* ShadowPage(uint64_t granule, bool create);

  void Quarantine(int64_t id);
  void Release(int64_t id);

  Config config_;
  DetectorMode detector_;
  bool abort_on_report_;
  int shift_ = 3;  // log2(G)

  std::vector<Entry> allocs_;
  std::map<uint64_t, int64_t> chunks_;  // chunk_begin -> id

  uint64_t heap_top_ = kHeapBase;
  std::map<int64_t, std::deque<uint64_t>> free_chunks_;  // by chunk size
  std::deque<int64_t> quarantine_;
  int64_t quarantine_total_ = 0;
  int64_t free_seq_ = 0;

  uint64_t shared_top_ = kSharedBase;
  uint64_t compiler_top_ = kCompilerBase;
  std::vector<int64_t> block_allocs_;  // shared and compiler
  std::unordered_map<int64_t, StackSlot> stacks_;

  std::unordered_map<uint64_t, std::unique_ptr<uint8_t[]>> shadow_;
  mutable uint64_t cached_page_ = ~0ull;
  mutable uint8_t* cached_ptr_ = nullptr;

  std::vector<BugReport> reports_;
  int64_t dropped_reports_ = 0;
  bool aborted_ = false;

  bool trace_on_ = false;
  std::vector<AccessRecord> trace_;
};

}  // namespace kfuzz::sanrt

#endif  // KFUZZ_SANRT_MEMORY_H_
