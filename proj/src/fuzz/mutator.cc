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

#include "kfuzz/fuzz/mutator.h"

#include <algorithm>
#include <array>
#include <random>

namespace kfuzz::fuzz {
namespace {

constexpr std::array<int64_t, 9> kInteresting8 = {-128, -1, 0,   1,  16,
                                                  32,   64, 100, 127};
constexpr std::array<int64_t, 10> kInteresting16 = {
    -32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767};
constexpr std::array<int64_t, 8> kInteresting32 = {
    -2147483648LL, -100663046, -32769,    32768,
    65535,         65536,      100663045, 2147483647};
constexpr int kMaxArith = 35;
constexpr int64_t kMaxBlock = 32;
constexpr int64_t kMaxInput = 1 << 12;

// Cheap to seed; one is created per mutation.
using Engine = std::linear_congruential_engine<uint64_t, 6364136223846793005ULL,
                                               1442695040888963407ULL, 0>;

int64_t Uniform(Engine& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

// Adds `delta` to the little-endian integer of `width` bytes at `pos`.
void AddLe(Bytes& b, int64_t pos, int width, int64_t delta) {
  uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= uint64_t{b[pos + i]} << (8 * i);
  v += static_cast<uint64_t>(delta);
  for (int i = 0; i < width; ++i)
    b[pos + i] = static_cast<uint8_t>(v >> (8 * i));
}

void StoreLe(Bytes& b, int64_t pos, int width, int64_t value) {
  for (int i = 0; i < width; ++i) {
    b[pos + i] = static_cast<uint8_t>(static_cast<uint64_t>(value) >> (8 * i));
  }
}

int PickWidth(Engine& rng, int64_t size) {
  std::vector<int> widths = {1};
  if (size >= 2) widths.push_back(2);
  if (size >= 4) widths.push_back(4);
  return widths[Uniform(rng, 0, static_cast<int64_t>(widths.size()) - 1)];
}

}  // namespace

std::string_view ToString(MutationOp op) {
  switch (op) {
    case MutationOp::kSeed:
      return "seed";
    case MutationOp::kBitFlip:
      return "bitflip";
    case MutationOp::kByteFlip:
      return "byteflip";
    case MutationOp::kArith:
      return "arith";
    case MutationOp::kInteresting:
      return "interesting";
    case MutationOp::kDuplicate:
      return "duplicate";
    case MutationOp::kRemove:
      return "remove";
    case MutationOp::kSplice:
      return "splice";
  }
  return "?";
}

Mutation ApplyMutation(MutationOp op, const Bytes& in, uint64_t seed,
                       const Bytes* other) {
  Engine rng(seed);
  Mutation m;
  m.bytes = in;
  if (m.bytes.empty()) m.bytes.push_back(0);
  Bytes& b = m.bytes;
  const int64_t n = static_cast<int64_t>(b.size());
  if (op == MutationOp::kSplice && (other == nullptr || other->empty())) {
    op = MutationOp::kBitFlip;
  }
  if (op == MutationOp::kDuplicate && n >= kMaxInput) op = MutationOp::kRemove;
  if (op == MutationOp::kRemove && n < 2) op = MutationOp::kBitFlip;
  if (op == MutationOp::kSeed) op = MutationOp::kBitFlip;
  m.op = op;

  switch (op) {
    case MutationOp::kSeed:
    case MutationOp::kBitFlip: {
      const int64_t bit = Uniform(rng, 0, n * 8 - 1);
      m.pos = bit / 8;
      b[m.pos] ^= static_cast<uint8_t>(1u << (bit % 8));
      break;
    }
    case MutationOp::kByteFlip:
      m.pos = Uniform(rng, 0, n - 1);
      b[m.pos] ^= 0xFF;
      break;
    case MutationOp::kArith: {
      const int width = PickWidth(rng, n);
      m.pos = Uniform(rng, 0, n - width);
      int64_t delta = Uniform(rng, 1, kMaxArith);
      if (Uniform(rng, 0, 1)) delta = -delta;
      AddLe(b, m.pos, width, delta);
      break;
    }
    case MutationOp::kInteresting: {
      const int width = PickWidth(rng, n);
      m.pos = Uniform(rng, 0, n - width);
      int64_t v = 0;
      if (width == 1) {
        v = kInteresting8[Uniform(rng, 0, kInteresting8.size() - 1)];
      } else if (width == 2) {
        const int64_t i =
            Uniform(rng, 0, kInteresting8.size() + kInteresting16.size() - 1);
        v = i < static_cast<int64_t>(kInteresting8.size())
                ? kInteresting8[i]
                : kInteresting16[i - kInteresting8.size()];
      } else {
        const int64_t i = Uniform(rng, 0,
                                  kInteresting8.size() + kInteresting16.size() +
                                      kInteresting32.size() - 1);
        if (i < static_cast<int64_t>(kInteresting8.size())) {
          v = kInteresting8[i];
        } else if (i < static_cast<int64_t>(kInteresting8.size() +
                                            kInteresting16.size())) {
          v = kInteresting16[i - kInteresting8.size()];
        } else {
          v = kInteresting32[i - kInteresting8.size() - kInteresting16.size()];
        }
      }
      StoreLe(b, m.pos, width, v);
      break;
    }
    case MutationOp::kDuplicate: {
      const int64_t len = Uniform(rng, 1, std::min(n, kMaxBlock));
      m.pos = Uniform(rng, 0, n - len);
      const Bytes block(b.begin() + m.pos, b.begin() + m.pos + len);
      b.insert(b.begin() + m.pos, block.begin(), block.end());
      break;
    }
    case MutationOp::kRemove: {
      const int64_t len = Uniform(rng, 1, std::min(n - 1, kMaxBlock));
      m.pos = Uniform(rng, 0, n - len);
      b.erase(b.begin() + m.pos, b.begin() + m.pos + len);
      break;
    }
    case MutationOp::kSplice: {
      // Prefix of this input, suffix of the other.
      const int64_t cut = Uniform(rng, 1, n);
      const int64_t from =
          Uniform(rng, 0, static_cast<int64_t>(other->size()) - 1);
      b.resize(cut);
      b.insert(b.end(), other->begin() + from,
               other->begin() +
                   std::min<int64_t>(other->size(), from + kMaxInput - cut));
      m.pos = cut;
      m.other_pos = from;
      break;
    }
  }
  return m;
}

Mutation Mutate(const Bytes& in, uint64_t seed, const Bytes* other) {
  Engine rng(seed);
  // Cheap local operators dominate; structural ones are rarer.
  static constexpr std::array<std::pair<MutationOp, int>, 7> kWeights = {{
      {MutationOp::kBitFlip, 4},
      {MutationOp::kByteFlip, 2},
      {MutationOp::kArith, 4},
      {MutationOp::kInteresting, 4},
      {MutationOp::kDuplicate, 1},
      {MutationOp::kRemove, 1},
      {MutationOp::kSplice, 1},
  }};
  int total = 0;
  for (const auto& [op, w] : kWeights) total += w;
  int pick = static_cast<int>(Uniform(rng, 0, total - 1));
  MutationOp op = MutationOp::kBitFlip;
  for (const auto& [candidate, w] : kWeights) {
    if (pick < w) {
      op = candidate;
      break;
    }
    pick -= w;
  }
  return ApplyMutation(op, in, rng(), other);
}

}  // namespace kfuzz::fuzz
