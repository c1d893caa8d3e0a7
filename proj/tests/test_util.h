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

#ifndef KFUZZ_TESTS_TEST_UTIL_H_
#define KFUZZ_TESTS_TEST_UTIL_H_

#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "kfuzz/kir/parser.h"

namespace kfuzz::testing {

inline std::string ReadTestdata(const std::string& relative) {
  std::ifstream in(std::string(KFUZZ_TESTDATA_DIR) + "/" + relative);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline kir::Kernel MustParse(const std::string& text) {
  kir::Diagnostic diag;
  absl::StatusOr<kir::Kernel> k = kir::ParseKernel(text, &diag);
  if (!k.ok()) {
    ADD_FAILURE() << diag.ToString() << "\n" << text;
    return kir::Kernel{};
  }
  return *std::move(k);
}

inline kir::Kernel LoadKernel(const std::string& name) {
  return MustParse(ReadTestdata("kernels/" + name));
}

}  // namespace kfuzz::testing

#endif  // KFUZZ_TESTS_TEST_UTIL_H_
