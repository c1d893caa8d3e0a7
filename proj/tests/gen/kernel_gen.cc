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

#include "gen/kernel_gen.h"

#include <fmt/format.h>

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "kfuzz/kir/parser.h"

namespace kfuzz::gen {
namespace {

using kir::ScalarType;
using sanrt::Arg;
using sanrt::Value;

int64_t Uniform(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

bool Coin(std::mt19937_64& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

template <typename T>
const T& Pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[Uniform(rng, 0, static_cast<int64_t>(v.size()) - 1)];
}

kir::Kernel ParseOrDie(const std::string& text) {
  kir::Diagnostic diag;
  auto k = kir::ParseKernel(text, &diag);
  if (!k.ok()) {
    std::fprintf(stderr, "generator produced an invalid kernel: %s\n%s\n",
                 diag.ToString().c_str(), text.c_str());
    std::abort();
  }
  return *std::move(k);
}

std::vector<int64_t> RandomInts(std::mt19937_64& rng, int64_t n, int64_t lo,
                                int64_t hi) {
  std::vector<int64_t> v(n);
  for (auto& x : v) x = Uniform(rng, lo, hi);
  return v;
}

std::vector<double> RandomFloats(std::mt19937_64& rng, int64_t n) {
  std::vector<double> v(n);
  std::uniform_real_distribution<double> d(-8.0, 8.0);
  for (auto& x : v) x = d(rng);
  return v;
}

// Accumulates kernel body lines and hands out fresh names.
class Body {
 public:
  explicit Body(std::mt19937_64& rng) : rng_(rng) {}

  template <typename... Args>
  void Emit(fmt::format_string<Args...> f, Args&&... args) {
    text_ += "  ";
    text_ += fmt::format(f, std::forward<Args>(args)...);
    text_ += '\n';
  }
  void Label(const std::string& l) { text_ += l + ":\n"; }

  std::string Local(std::string_view prefix) {
    return fmt::format("{}{}", prefix, next_local_++);
  }
  std::string NewLabel(std::string_view prefix) {
    return fmt::format("{}{}", prefix, next_label_++);
  }
  const std::string& text() const { return text_; }

 private:
  std::mt19937_64& rng_;
  std::string text_;
  int next_local_ = 0;
  int next_label_ = 0;
};

// An invariant coefficient over the scalar params p, q and the grid shape.
std::string Coefficient(std::mt19937_64& rng) {
  switch (Uniform(rng, 0, 7)) {
    case 0:
      return "p";
    case 1:
      return "(sub 0 q)";
    case 2:
      return "blockDim.x";
    case 3:
      return "(mul 2 p)";
    case 4:
      return "(add q 1)";
    default:
      return fmt::format("{}", Uniform(rng, -3, 3));
  }
}

std::string Translation(std::mt19937_64& rng) {
  switch (Uniform(rng, 0, 5)) {
    case 0:
      return "p";
    case 1:
      return "(sub gridDim.x q)";
    case 2:
      return "(mul p blockDim.x)";
    default:
      return fmt::format("{}", Uniform(rng, -40, 40));
  }
}

}  // namespace

Case RandomAffineCase(std::mt19937_64& rng, const AffineOptions& o) {
  Case c;
  c.grid.blocks = Uniform(rng, 1, o.max_blocks);
  c.grid.threads = Uniform(rng, 1, o.max_threads);
  const int64_t total = c.grid.blocks * c.grid.threads;

  Body body(rng);
  const std::string done = "done";
  if (o.guarded) {
    body.Label("entry");
    body.Emit("branch (lt threadIdx.x (sub blockDim.x {})) body {}",
              Uniform(rng, 0, 2), done);
    body.Label("body");
  }
  const int accesses = static_cast<int>(Uniform(rng, 1, o.max_accesses));
  for (int a = 0; a < accesses; ++a) {
    std::string index;
    switch (Uniform(rng, 0, 3)) {
      case 0:
        index =
            fmt::format("add (add (mul threadIdx.x {}) (mul {} blockIdx.x)) {}",
                        Coefficient(rng), Coefficient(rng), Translation(rng));
        break;
      case 1: {
        const std::string u = body.Local("u");
        const std::string v = body.Local("v");
        const std::string w = body.Local("w");
        body.Emit("{} = mul {} threadIdx.x", u, Coefficient(rng));
        body.Emit("{} = mul blockIdx.x {}", v, Coefficient(rng));
        if (Coin(rng)) {
          body.Emit("{} = add {} {}", w, u, v);
        } else {
          body.Emit("{} = sub {} (sub 0 {})", w, u, v);
        }
        index = fmt::format("add {} {}", w, Translation(rng));
        break;
      }
      case 2:
        index =
            fmt::format("add (add (mul blockIdx.x blockDim.x) threadIdx.x) {}",
                        Uniform(rng, -2, 2));
        break;
      default:
        index = fmt::format("sub {} (mul threadIdx.x {})", Translation(rng),
                            Coefficient(rng));
        break;
    }
    const bool first_buffer = Coin(rng);
    const std::string buf = first_buffer ? "b0" : "b1";
    if (Coin(rng)) {
      body.Emit("{} = load {}[{}]", body.Local("x"), buf, index);
    } else {
      body.Emit("store {}[{}] threadIdx.x", buf, index);
    }
  }
  if (o.guarded) {
    body.Emit("jump {}", done);
    body.Label(done);
  }
  body.Emit("return");

  c.text = fmt::format(
      "kernel affine_case(b0: *global_host i32, b1: *global_host f32, p: i32, "
      "q: i32)\n{}",
      body.text());
  c.kernel = ParseOrDie(c.text);
  c.inputs.args = {
      Arg::Buffer(Uniform(rng, 0, 2 * total + 8)),
      Arg::Buffer(Uniform(rng, 0, 2 * total + 8)),
      Arg::Scalar(Value::Int(Uniform(rng, -3, 6))),
      Arg::Scalar(Value::Int(Uniform(rng, -3, 6))),
  };
  return c;
}

namespace {

// Phase-structured race-free kernel builder.
class RaceFreeBuilder {
 public:
  RaceFreeBuilder(std::mt19937_64& rng, Body& body, bool with_dyn)
      : rng_(rng), b_(body), with_dyn_(with_dyn) {}

  void Phase(int phase) {
    // Each shared array is either written at the own slot or read anywhere
    // during one phase, never both.
    sh_write_ = phase == 0 || Coin(rng_);
    dyn_write_ = phase == 0 || Coin(rng_);
    const int64_t n = Uniform(rng_, 2, 6);
    for (int64_t i = 0; i < n; ++i) Statement(/*depth=*/0);
  }

  void Finish() {
    std::string sum = IntOperand();
    for (int i = 0; i < 2 && !ints_.empty(); ++i) {
      const std::string t = b_.Local("fin");
      b_.Emit("{} = add {} {}", t, sum, Pick(rng_, ints_));
      sum = t;
    }
    b_.Emit("store out[gid] {}", sum);
    if (!floats_.empty()) b_.Emit("store g1[gid] {}", Pick(rng_, floats_));
    for (const std::string& m : heap_) {
      if (Coin(rng_, 0.8)) b_.Emit("free {}", m);
    }
    b_.Emit("return");
  }

  void Seed() {
    b_.Emit("gid = add (mul blockIdx.x blockDim.x) threadIdx.x");
    ints_.push_back("gid");
  }

 private:
  std::string IntOperand() {
    switch (Uniform(rng_, 0, 5)) {
      case 0:
        return "threadIdx.x";
      case 1:
        return "blockIdx.x";
      case 2:
        return "s";
      case 3:
        return fmt::format("{}", Uniform(rng_, -5, 9));
      default:
        return ints_.empty() ? "gid" : Pick(rng_, ints_);
    }
  }

  std::string FloatOperand() {
    if (!floats_.empty() && Coin(rng_, 0.7)) return Pick(rng_, floats_);
    return Coin(rng_) ? fmt::format("{}.5", Uniform(rng_, -3, 3))
                      : IntOperand();
  }

  std::string IntArith() {
    static const std::vector<std::string> ops = {"add", "sub", "mul", "xor",
                                                 "and", "min", "max"};
    switch (Uniform(rng_, 0, 3)) {
      case 0:
        return fmt::format("rem {} {}", IntOperand(), Uniform(rng_, 1, 7));
      case 1:
        return fmt::format("shl {} {}", IntOperand(), Uniform(rng_, 0, 3));
      default:
        return fmt::format("{} {} {}", Pick(rng_, ops), IntOperand(),
                           IntOperand());
    }
  }

  void Statement(int depth) {
    const int64_t kind = Uniform(rng_, 0, depth > 0 ? 5 : 11);
    switch (kind) {
      case 0:
      case 1: {
        const std::string v = b_.Local("v");
        b_.Emit("{} = {}", v, IntArith());
        if (depth == 0) ints_.push_back(v);
        break;
      }
      case 2: {
        static const std::vector<std::string> fns = {"sqrt", "exp", "sin",
                                                     "cos", "log"};
        const std::string f = b_.Local("f");
        b_.Emit("{} = {} {}", f, Pick(rng_, fns), FloatOperand());
        if (depth == 0) floats_.push_back(f);
        break;
      }
      case 3:
        b_.Emit("store out[gid] {}", IntOperand());
        break;
      case 4: {
        const std::string v = b_.Local("l");
        if (Coin(rng_)) {
          b_.Emit("{} = load g0[rem (add gid {}) (mul blockDim.x gridDim.x)]",
                  v, Uniform(rng_, 0, 5));
          if (depth == 0) ints_.push_back(v);
        } else {
          b_.Emit("{} = load g1[gid]", v);
          if (depth == 0) floats_.push_back(v);
        }
        break;
      }
      case 5:
        SharedAccess(depth);
        break;
      case 6:
        Diamond(depth);
        break;
      case 7:
        Loop(depth);
        break;
      case 8:
        Scope();
        break;
      case 9:
        Malloc();
        break;
      case 10:
        if (!heap_.empty()) {
          const std::string v = b_.Local("h");
          b_.Emit("{} = load {}[1]", v, Pick(rng_, heap_));
          ints_.push_back(v);
        }
        break;
      default:
        b_.Emit("store g1[gid] {}", FloatOperand());
        break;
    }
  }

  void SharedAccess(int depth) {
    const bool use_dyn = with_dyn_ && Coin(rng_);
    const std::string arr = use_dyn ? "dd" : "sh";
    const bool write = use_dyn ? dyn_write_ : sh_write_;
    if (write) {
      b_.Emit("store {}[threadIdx.x] {}", arr, IntOperand());
    } else {
      const std::string v = b_.Local("n");
      b_.Emit("{} = load {}[rem (add threadIdx.x {}) blockDim.x]", v, arr,
              Uniform(rng_, 0, 5));
      if (depth == 0) ints_.push_back(v);
    }
  }

  void Diamond(int depth) {
    const std::string t = b_.Local("t");
    const std::string then_l = b_.NewLabel("then");
    const std::string else_l = b_.NewLabel("else");
    const std::string join = b_.NewLabel("join");
    b_.Emit("{} = add {} 0", t, IntOperand());
    b_.Emit("branch (lt {} {}) {} {}", IntOperand(), IntOperand(), then_l,
            else_l);
    b_.Label(then_l);
    b_.Emit("{} = add {} {}", t, t, Uniform(rng_, 1, 9));
    Statement(depth + 1);
    b_.Emit("jump {}", join);
    b_.Label(else_l);
    b_.Emit("{} = mul {} {}", t, t, Uniform(rng_, -2, 3));
    b_.Emit("jump {}", join);
    b_.Label(join);
    if (depth == 0) ints_.push_back(t);
  }

  void Loop(int depth) {
    const std::string i = b_.Local("i");
    const std::string acc = b_.Local("acc");
    const std::string head = b_.NewLabel("loop");
    const std::string exit = b_.NewLabel("exit");
    std::string trip;
    switch (Uniform(rng_, 0, 2)) {
      case 0:
        trip = fmt::format("{}", Uniform(rng_, 1, 4));
        break;
      case 1:
        trip = "(min (max s 1) 4)";
        break;
      default:
        trip = "(add (rem threadIdx.x 3) 1)";
        break;
    }
    b_.Emit("{} = add 0 0", i);
    b_.Emit("{} = add {} 0", acc, IntOperand());
    b_.Emit("jump {}", head);
    b_.Label(head);
    b_.Emit("{} = add {} (mul {} {})", acc, acc, i, Uniform(rng_, 1, 5));
    if (Coin(rng_)) Statement(depth + 1);
    b_.Emit("{} = add {} 1", i, i);
    b_.Emit("branch (lt {} {}) {} {}", i, trip, head, exit);
    b_.Label(exit);
    if (depth == 0) ints_.push_back(acc);
  }

  void Scope() {
    const std::string p = b_.Local("st");
    const std::string v = b_.Local("sv");
    b_.Emit("scope_begin");
    b_.Emit("{} = alloca i32 4", p);
    b_.Emit("store {}[and threadIdx.x 3] {}", p, IntOperand());
    b_.Emit("{} = load {}[and threadIdx.x 3]", v, p);
    b_.Emit("store out[gid] {}", v);
    b_.Emit("scope_end");
  }

  void Malloc() {
    const std::string m = b_.Local("m");
    b_.Emit("{} = malloc i32 3", m);
    b_.Emit("store {}[1] {}", m, IntOperand());
    heap_.push_back(m);
  }

  std::mt19937_64& rng_;
  Body& b_;
  bool with_dyn_;
  bool sh_write_ = true;
  bool dyn_write_ = true;
  std::vector<std::string> ints_;
  std::vector<std::string> floats_;
  std::vector<std::string> heap_;
};

}  // namespace

Case RandomRaceFreeCase(std::mt19937_64& rng, const RaceFreeOptions& o) {
  Case c;
  c.grid.blocks = Uniform(rng, 1, o.max_blocks);
  c.grid.threads = Uniform(rng, 1, o.max_threads);
  const bool with_dyn = Coin(rng, 0.3);
  if (with_dyn) c.grid.dyn_shared_bytes = 4 * c.grid.threads;
  const int64_t total = c.grid.blocks * c.grid.threads;

  Body body(rng);
  RaceFreeBuilder builder(rng, body, with_dyn);
  body.Label("entry");
  builder.Seed();
  const int barriers = static_cast<int>(Uniform(rng, 0, o.max_barriers));
  for (int p = 0; p <= barriers; ++p) {
    if (p > 0) body.Emit("barrier");
    builder.Phase(p);
  }
  builder.Finish();

  c.text = fmt::format(
      "kernel race_free(g0: *global_host i32, g1: *global_host f32, "
      "out: *global_host i32, s: i32)\n"
      "shared sh: [blockDim.x] i32\n{}{}",
      with_dyn ? "shared dyn dd: i32\n" : "", body.text());
  c.kernel = ParseOrDie(c.text);
  c.inputs.args = {
      Arg::Buffer(total, sanrt::PackInts(RandomInts(rng, total, -50, 50),
                                         ScalarType::kI32)),
      Arg::Buffer(
          total, sanrt::PackFloats(RandomFloats(rng, total), ScalarType::kF32)),
      Arg::Buffer(total),
      Arg::Scalar(Value::Int(Uniform(rng, -2, 6))),
  };
  return c;
}

Case RandomPrunableCase(std::mt19937_64& rng) {
  Case c;
  c.grid.blocks = Uniform(rng, 1, 4);
  c.grid.threads = Uniform(rng, 1, 8);
  const int64_t total = c.grid.blocks * c.grid.threads;

  Body b(rng);
  std::vector<std::string> floats = {"x"};
  std::vector<std::string> ints = {"gid"};
  b.Label("entry");
  b.Emit("gid = add (mul blockIdx.x blockDim.x) threadIdx.x");
  b.Emit("x = load in[add gid {}]", Uniform(rng, 0, 1));
  static const std::vector<std::string> fns = {"sqrt", "exp", "sin", "cos",
                                               "log"};
  auto math = [&]() {
    const std::string f = b.Local("m");
    b.Emit("{} = {} {}", f, Pick(rng, fns), Pick(rng, floats));
    floats.push_back(f);
  };
  const int64_t pre = Uniform(rng, 1, 4);
  for (int64_t i = 0; i < pre; ++i) {
    switch (Uniform(rng, 0, 4)) {
      case 0:
      case 1:
        math();
        break;
      case 2: {
        const std::string a = b.Local("a");
        b.Emit("{} = add {} {}.5", a, Pick(rng, floats), Uniform(rng, 0, 3));
        floats.push_back(a);
        break;
      }
      case 3: {
        // Float values flowing into integer index arithmetic.
        const std::string j = b.Local("j");
        b.Emit("{} = rem (add gid {}) {}", j, Pick(rng, floats), total);
        ints.push_back(j);
        break;
      }
      default: {
        const std::string w = b.Local("w");
        b.Emit("{} = load idx[{}]", w, Pick(rng, ints));
        ints.push_back(w);
        break;
      }
    }
  }
  b.Emit("store sa[threadIdx.x] {}", Pick(rng, floats));
  if (Coin(rng, 0.3)) {
    // Route a value through global memory.
    b.Emit("store out[gid] {}", Pick(rng, floats));
    b.Emit("r = load out[gid]");
    floats.push_back("r");
  }
  b.Emit("barrier");
  b.Emit("v = load sa[rem (add threadIdx.x 1) blockDim.x]");
  floats.push_back("v");
  const int64_t post = Uniform(rng, 1, 3);
  for (int64_t i = 0; i < post; ++i) {
    if (Coin(rng)) {
      math();
    } else {
      const std::string k = b.Local("k");
      b.Emit("{} = rem (add {} {}) {}", k, Pick(rng, ints),
             Coin(rng, 0.3) ? Pick(rng, floats) : "1", total + 1);
      ints.push_back(k);
    }
  }
  if (Coin(rng)) {
    b.Emit("branch (gt {} 1.0) hit skip", Pick(rng, floats));
    b.Label("hit");
    b.Emit("store out[{}] {}", Pick(rng, ints), Pick(rng, floats));
    b.Emit("jump skip");
    b.Label("skip");
  }
  b.Emit("store out[add {} {}] {}", Pick(rng, ints), Uniform(rng, -1, 1),
         Pick(rng, floats));
  b.Emit("return");

  c.text = fmt::format(
      "kernel prunable(in: *global_host f32, idx: *global_host i32, "
      "out: *global_host f32, n: i32)\n"
      "shared sa: [blockDim.x] f32\n{}",
      b.text());
  c.kernel = ParseOrDie(c.text);
  c.inputs.args = {Arg::Buffer(total), Arg::Buffer(total), Arg::Buffer(total),
                   Arg::Scalar(Value::Int(total))};
  c.inputs = RandomInputs(rng, c);
  return c;
}

sanrt::KernelInputs RandomInputs(std::mt19937_64& rng, const Case& c) {
  sanrt::KernelInputs in = c.inputs;
  for (size_t i = 0; i < c.kernel.params.size(); ++i) {
    const kir::Param& p = c.kernel.params[i];
    Arg& a = in.args[i];
    if (!p.is_buffer()) {
      a.scalar = Value::Int(a.scalar.AsInt() + Uniform(rng, -1, 1));
      continue;
    }
    if (kir::IsFloat(p.elem)) {
      a.bytes = sanrt::PackFloats(RandomFloats(rng, a.count), p.elem);
    } else {
      a.bytes =
          sanrt::PackInts(RandomInts(rng, a.count, -4, a.count + 4), p.elem);
    }
  }
  return in;
}

}  // namespace kfuzz::gen
