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

// Byte-level input mutators. Every mutator is a pure function of its input
// bytes and seed.

#ifndef KFUZZ_FUZZ_MUTATOR_H_
#define KFUZZ_FUZZ_MUTATOR_H_

#include <cstdint>
#include <string_view>
#include <vector>

namespace kfuzz::fuzz {

using Bytes = std::vector<uint8_t>;

enum class MutationOp : uint8_t {
  kSeed,
  kBitFlip,
  kByteFlip,
  kArith,
  kInteresting,
  kDuplicate,
  kRemove,
  kSplice,
};

inline constexpr int kMutationOpCount = 8;

std::string_view ToString(MutationOp op);

struct Mutation {
  Bytes bytes;
  MutationOp op = MutationOp::kSeed;
  int64_t pos = -1;        // byte offset the operator acted on
  int64_t other_pos = -1;  // splice only: start of the suffix taken
};

// Applies `op`. Splice needs `other`; without it (or on an empty input) the
// result is a bit flip. Empty inputs grow to one byte.
Mutation ApplyMutation(MutationOp op, const Bytes& in, uint64_t seed,
                       const Bytes* other = nullptr);

// Picks an operator from the seed, then applies it.
Mutation Mutate(const Bytes& in, uint64_t seed, const Bytes* other = nullptr);

}  // namespace kfuzz::fuzz

#endif  // KFUZZ_FUZZ_MUTATOR_H_
