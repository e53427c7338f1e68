// Copyright 2026 The sweepret Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <string>

#include "sweepret/error.hpp"
#include "sweepret/kernels.hpp"

namespace sweepret::kernels {

#if SWEEPRET_HAVE_AVX2
const KernelTable& avx2_table_impl();
#endif

const KernelTable* avx2_table() {
#if SWEEPRET_HAVE_AVX2
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* by_name(std::string_view name) {
  if (name == "scalar") return &scalar_table();
  if (name == "avx2") return avx2_table();
  return nullptr;
}

const KernelTable*& current() {
  static const KernelTable* table = [] {
    if (const char* env = std::getenv("SWEEPRET_KERNELS")) {
      if (const KernelTable* t = by_name(env)) return t;
    }
    const KernelTable* simd = avx2_table();
    return simd ? simd : &scalar_table();
  }();
  return table;
}

}  // namespace

const KernelTable& active() { return *current(); }

void select(std::string_view name) {
  const KernelTable* t = by_name(name);
  if (t == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "kernels",
                "kernel variant '" + std::string(name) + "' is not available");
  }
  current() = t;
}

}  // namespace sweepret::kernels
