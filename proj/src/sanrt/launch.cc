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

#include "kfuzz/sanrt/launch.h"

#include <fmt/format.h>

#include <cstring>

namespace kfuzz::sanrt {

using kir::ScalarType;

std::vector<uint8_t> PackInts(const std::vector<int64_t>& v, ScalarType t) {
  std::vector<uint8_t> out;
  out.reserve(v.size() * kir::ScalarSize(t));
  for (int64_t x : v) {
    const Value c = ConvertTo(Value::Int(x), t);
    uint8_t buf[8];
    switch (t) {
      case ScalarType::kI32: {
        const int32_t y = static_cast<int32_t>(c.i);
        std::memcpy(buf, &y, 4);
        break;
      }
      case ScalarType::kI64:
        std::memcpy(buf, &c.i, 8);
        break;
      case ScalarType::kF32: {
        const float y = static_cast<float>(c.f);
        std::memcpy(buf, &y, 4);
        break;
      }
      case ScalarType::kF64:
        std::memcpy(buf, &c.f, 8);
        break;
    }
    out.insert(out.end(), buf, buf + kir::ScalarSize(t));
  }
  return out;
}

std::vector<uint8_t> PackFloats(const std::vector<double>& v, ScalarType t) {
  if (!kir::IsFloat(t)) {
    std::vector<int64_t> ints;
    for (double d : v) ints.push_back(SaturatingToInt(d));
    return PackInts(ints, t);
  }
  std::vector<uint8_t> out;
  for (double d : v) {
    if (t == ScalarType::kF32) {
      const float y = static_cast<float>(ConvertTo(Value::Float(d), t).f);
      const auto* p = reinterpret_cast<const uint8_t*>(&y);
      out.insert(out.end(), p, p + 4);
    } else {
      const auto* p = reinterpret_cast<const uint8_t*>(&d);
      out.insert(out.end(), p, p + 8);
    }
  }
  return out;
}

std::vector<Value> UnpackElements(const std::vector<uint8_t>& bytes,
                                  ScalarType t) {
  const size_t n = kir::ScalarSize(t);
  std::vector<Value> out;
  for (size_t off = 0; off + n <= bytes.size(); off += n) {
    switch (t) {
      case ScalarType::kI32: {
        int32_t v;
        std::memcpy(&v, &bytes[off], 4);
        out.push_back(Value::Int(v));
        break;
      }
      case ScalarType::kI64: {
        int64_t v;
        std::memcpy(&v, &bytes[off], 8);
        out.push_back(Value::Int(v));
        break;
      }
      case ScalarType::kF32: {
        float v;
        std::memcpy(&v, &bytes[off], 4);
        out.push_back(Value::Float(v));
        break;
      }
      case ScalarType::kF64: {
        double v;
        std::memcpy(&v, &bytes[off], 8);
        out.push_back(Value::Float(v));
        break;
      }
    }
  }
  return out;
}

absl::Status ValidateGrid(const kir::GridConfig& g, const Config& config) {
  if (g.blocks < 1 || g.threads < 1) {
    return absl::InvalidArgumentError(fmt::format(
        "invalid_launch: grid of {} blocks x {} threads has a zero or "
        "negative dimension",
        g.blocks, g.threads));
  }
  if (g.threads > config.max_threads) {
    return absl::InvalidArgumentError(
        fmt::format("invalid_launch: {} threads per block exceeds the limit "
                    "of {}",
                    g.threads, config.max_threads));
  }
  if (g.dyn_shared_bytes < 0 || g.dyn_shared_bytes > config.shared_bytes) {
    return absl::InvalidArgumentError(
        fmt::format("invalid_launch: dynamic shared size {} is out of range",
                    g.dyn_shared_bytes));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<Value>> BindParams(const kir::Kernel& k,
                                              const KernelInputs& in,
                                              Memory& mem) {
  if (in.args.size() != k.params.size()) {
    return absl::InvalidArgumentError(
        fmt::format("kernel {} takes {} arguments, got {}", k.name,
                    k.params.size(), in.args.size()));
  }
  std::vector<Value> out;
  out.reserve(k.params.size());
  for (size_t i = 0; i < k.params.size(); ++i) {
    const kir::Param& p = k.params[i];
    const Arg& a = in.args[i];
    if (!p.is_buffer()) {
      out.push_back(ConvertTo(a.scalar, p.elem));
      continue;
    }
    AllocRequest req;
    req.count = a.count;
    req.elem = p.elem;
    req.space = p.space;
    req.allocator = kir::Allocator::kHostApi;
    req.region = Region::kHeap;
    req.fields = p.fields;
    auto id = mem.Allocate(req, Site{{0, -1}, -1, false});
    if (!id.ok()) return id.status();
    if (!a.bytes.empty()) {
      mem.WriteBytes(*id, 0, a.bytes.data(),
                     static_cast<int64_t>(a.bytes.size()));
    }
    out.push_back(Value::Ptr(*id));
  }
  return out;
}

Value EvalInvariant(const kir::Expr& e, const std::vector<Value>& params,
                    const kir::GridConfig& g) {
  using Kind = kir::Expr::Kind;
  switch (e.kind) {
    case Kind::kIntLit:
      return Value::Int(e.int_value);
    case Kind::kFloatLit:
      return Value::Float(e.float_value);
    case Kind::kParam:
      return params[e.slot];
    case Kind::kIntrinsic:
      if (e.intrinsic == kir::Intrinsic::kBlockDim)
        return Value::Int(g.threads);
      if (e.intrinsic == kir::Intrinsic::kGridDim) return Value::Int(g.blocks);
      return Value::Int(0);
    case Kind::kBinary:
      return EvalBinary(e.op, EvalInvariant(*e.lhs, params, g),
                        EvalInvariant(*e.rhs, params, g));
    default:
      return Value::Int(0);
  }
}

absl::StatusOr<std::vector<int64_t>> AllocateShared(
    const kir::Kernel& k, const std::vector<Value>& params,
    const kir::GridConfig& g, int64_t block, Memory& mem) {
  std::vector<int64_t> out;
  for (const kir::SharedDecl& d : k.shared) {
    AllocRequest req;
    req.elem = d.elem;
    req.allocator = kir::Allocator::kStack;
    req.region = Region::kShared;
    req.fields = d.fields;
    if (d.dynamic) {
      req.count = g.dyn_shared_bytes;
      req.space = kir::MemorySpace::kSharedDynamic;
      req.dynamic_shared = true;
    } else {
      req.count = EvalInvariant(*d.count, params, g).AsInt();
      req.space = kir::MemorySpace::kSharedStatic;
    }
    auto id = mem.Allocate(req, Site{{block, -1}, -1, false});
    if (!id.ok()) return id.status();
    out.push_back(*id);
  }
  return out;
}

}  // namespace kfuzz::sanrt
