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

#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference and,
// on x86-64, an AVX2/FMA variant; the variant is chosen once at startup from
// CPUID and can be forced with SWEEPRET_KERNELS=scalar|avx2.
//
// Within one variant the reduction order of every output element is fixed and
// independent of the problem size it is embedded in (a row of a GEMM gives the
// same bits whether it is computed alone or inside a larger batch).

#include <cstddef>
#include <string_view>

namespace sweepret::kernels {

enum class Trans { kNo, kYes };

/// C = alpha * op(A) * op(B) + beta * C, all row-major. op(A) is m x k and
/// op(B) is k x n. beta == 0 overwrites C without reading it.
template <typename T>
using GemmFn = void (*)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha,
                        const T* a, std::size_t lda, const T* b, std::size_t ldb, T beta, T* c,
                        std::size_t ldc);

struct KernelTable {
  std::string_view name;
  GemmFn<float> gemm;
  float (*dot)(const float* a, const float* b, std::size_t n);
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);
};

const KernelTable& scalar_table();
/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();
/// The table selected for this process.
const KernelTable& active();
/// Override the selection (tests). Unknown names or unavailable variants throw.
void select(std::string_view name);

// Scalar references, usable for any floating type.
template <typename T>
void gemm_ref(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
              std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc);
template <typename T>
T dot_ref(const T* a, const T* b, std::size_t n);
template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y);

// Typed front ends: float goes through the active table, double through the
// reference.
inline void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
                 const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
                 float* c, std::size_t ldc) {
  active().gemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
inline void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
                 double* c, std::size_t ldc) {
  gemm_ref<double>(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
inline float dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
inline double dot(const double* a, const double* b, std::size_t n) { return dot_ref(a, b, n); }
inline void axpy(std::size_t n, float alpha, const float* x, float* y) {
  active().axpy(n, alpha, x, y);
}
inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
  axpy_ref(n, alpha, x, y);
}

}  // namespace sweepret::kernels
