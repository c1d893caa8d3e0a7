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

// Emulated host side of a kernel launch: argument binding, grid checks and
// per-block shared memory.

#ifndef KFUZZ_SANRT_LAUNCH_H_
#define KFUZZ_SANRT_LAUNCH_H_

#include <cstdint>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "kfuzz/kir/ir.h"
#include "kfuzz/sanrt/memory.h"
#include "kfuzz/sanrt/value.h"

namespace kfuzz::sanrt {

// One kernel argument. Scalar params read `scalar`; buffer params are
// allocated with `count` elements and initialized from `bytes` (truncated or
// zero-padded).
struct Arg {
  Value scalar;
  int64_t count = 0;
  std::vector<uint8_t> bytes;

  static Arg Scalar(Value v) { return Arg{v, 0, {}}; }
  static Arg Buffer(int64_t count, std::vector<uint8_t> bytes = {}) {
    return Arg{Value::Int(0), count, std::move(bytes)};
  }
};

struct KernelInputs {
  std::vector<Arg> args;  // one per param, in declaration order
};

// Packs integers or floats as little-endian elements of type `t`.
std::vector<uint8_t> PackInts(const std::vector<int64_t>& v, kir::ScalarType t);
std::vector<uint8_t> PackFloats(const std::vector<double>& v,
                                kir::ScalarType t);
std::vector<Value> UnpackElements(const std::vector<uint8_t>& bytes,
                                  kir::ScalarType t);

// Rejects empty or oversized grids with InvalidArgument ("invalid_launch").
absl::Status ValidateGrid(const kir::GridConfig& g, const Config& config);

// Allocates buffer params on the heap (host API) in declaration order.
// Returns one value per param: a pointer for buffers, the converted scalar
// otherwise.
absl::StatusOr<std::vector<Value>> BindParams(const kir::Kernel& k,
                                              const KernelInputs& in,
                                              Memory& mem);

// Evaluates an expression over literals, scalar params, blockDim and
// gridDim. Anything else evaluates to 0.
Value EvalInvariant(const kir::Expr& e, const std::vector<Value>& params,
                    const kir::GridConfig& g);

// Allocates the shared declarations for one block, in declaration order.
absl::StatusOr<std::vector<int64_t>> AllocateShared(
    const kir::Kernel& k, const std::vector<Value>& params,
    const kir::GridConfig& g, int64_t block, Memory& mem);

}  // namespace kfuzz::sanrt

#endif  // KFUZZ_SANRT_LAUNCH_H_
