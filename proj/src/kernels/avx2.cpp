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

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sweepret/kernels.hpp"

namespace sweepret::kernels {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;

// Packs op(A) (m x k) into row panels of kMr: panel[p * kMr + r] = op(A)(i0 + r, p).
void pack_a(Trans ta, std::size_t m, std::size_t k, const float* a, std::size_t lda, float* out) {
  for (std::size_t i0 = 0; i0 < m; i0 += kMr) {
    const std::size_t rows = std::min(kMr, m - i0);
    for (std::size_t p = 0; p < k; ++p) {
      float* dst = out + p * kMr;
      std::size_t r = 0;
      if (ta == Trans::kNo) {
        for (; r < rows; ++r) dst[r] = a[(i0 + r) * lda + p];
      } else {
        const float* src = a + p * lda + i0;
        for (; r < rows; ++r) dst[r] = src[r];
      }
      for (; r < kMr; ++r) dst[r] = 0.0f;
    }
    out += k * kMr;
  }
}

// Packs op(B) (k x n) into column panels of kNr: panel[p * kNr + c] = op(B)(p, j0 + c).
void pack_b(Trans tb, std::size_t n, std::size_t k, const float* b, std::size_t ldb, float* out) {
  for (std::size_t j0 = 0; j0 < n; j0 += kNr) {
    const std::size_t cols = std::min(kNr, n - j0);
    for (std::size_t p = 0; p < k; ++p) {
      float* dst = out + p * kNr;
      std::size_t c = 0;
      if (tb == Trans::kNo) {
        const float* src = b + p * ldb + j0;
        for (; c < cols; ++c) dst[c] = src[c];
      } else {
        for (; c < cols; ++c) dst[c] = b[(j0 + c) * ldb + p];
      }
      for (; c < kNr; ++c) dst[c] = 0.0f;
    }
    out += k * kNr;
  }
}

void micro_kernel(std::size_t k, const float* ap, const float* bp, float* tile) {
  __m256 c00 = _mm256_setzero_ps(), c01 = _mm256_setzero_ps();
  __m256 c10 = _mm256_setzero_ps(), c11 = _mm256_setzero_ps();
  __m256 c20 = _mm256_setzero_ps(), c21 = _mm256_setzero_ps();
  __m256 c30 = _mm256_setzero_ps(), c31 = _mm256_setzero_ps();
  __m256 c40 = _mm256_setzero_ps(), c41 = _mm256_setzero_ps();
  __m256 c50 = _mm256_setzero_ps(), c51 = _mm256_setzero_ps();
  for (std::size_t p = 0; p < k; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    __m256 a = _mm256_broadcast_ss(ap + 0);
    c00 = _mm256_fmadd_ps(a, b0, c00);
    c01 = _mm256_fmadd_ps(a, b1, c01);
    a = _mm256_broadcast_ss(ap + 1);
    c10 = _mm256_fmadd_ps(a, b0, c10);
    c11 = _mm256_fmadd_ps(a, b1, c11);
    a = _mm256_broadcast_ss(ap + 2);
    c20 = _mm256_fmadd_ps(a, b0, c20);
    c21 = _mm256_fmadd_ps(a, b1, c21);
    a = _mm256_broadcast_ss(ap + 3);
    c30 = _mm256_fmadd_ps(a, b0, c30);
    c31 = _mm256_fmadd_ps(a, b1, c31);
    a = _mm256_broadcast_ss(ap + 4);
    c40 = _mm256_fmadd_ps(a, b0, c40);
    c41 = _mm256_fmadd_ps(a, b1, c41);
    a = _mm256_broadcast_ss(ap + 5);
    c50 = _mm256_fmadd_ps(a, b0, c50);
    c51 = _mm256_fmadd_ps(a, b1, c51);
    ap += kMr;
    bp += kNr;
  }
  _mm256_storeu_ps(tile + 0 * kNr, c00);
  _mm256_storeu_ps(tile + 0 * kNr + 8, c01);
  _mm256_storeu_ps(tile + 1 * kNr, c10);
  _mm256_storeu_ps(tile + 1 * kNr + 8, c11);
  _mm256_storeu_ps(tile + 2 * kNr, c20);
  _mm256_storeu_ps(tile + 2 * kNr + 8, c21);
  _mm256_storeu_ps(tile + 3 * kNr, c30);
  _mm256_storeu_ps(tile + 3 * kNr + 8, c31);
  _mm256_storeu_ps(tile + 4 * kNr, c40);
  _mm256_storeu_ps(tile + 4 * kNr + 8, c41);
  _mm256_storeu_ps(tile + 5 * kNr, c50);
  _mm256_storeu_ps(tile + 5 * kNr + 8, c51);
}

void gemm_avx2(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
               const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta,
               float* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  thread_local std::vector<float> apack, bpack;
  const std::size_t m_panels = (m + kMr - 1) / kMr;
  const std::size_t n_panels = (n + kNr - 1) / kNr;
  apack.resize(m_panels * kMr * k);
  bpack.resize(n_panels * kNr * k);
  pack_a(ta, m, k, a, lda, apack.data());
  pack_b(tb, n, k, b, ldb, bpack.data());

  alignas(32) float tile[kMr * kNr];
  for (std::size_t jp = 0; jp < n_panels; ++jp) {
    const std::size_t j0 = jp * kNr;
    const std::size_t cols = std::min(kNr, n - j0);
    const float* bp = bpack.data() + jp * kNr * k;
    for (std::size_t ip = 0; ip < m_panels; ++ip) {
      const std::size_t i0 = ip * kMr;
      const std::size_t rows = std::min(kMr, m - i0);
      micro_kernel(k, apack.data() + ip * kMr * k, bp, tile);
      for (std::size_t r = 0; r < rows; ++r) {
        float* crow = c + (i0 + r) * ldc + j0;
        const float* trow = tile + r * kNr;
        if (beta == 0.0f) {
          for (std::size_t q = 0; q < cols; ++q) crow[q] = alpha * trow[q];
        } else {
          for (std::size_t q = 0; q < cols; ++q) crow[q] = std::fma(beta, crow[q], alpha * trow[q]);
        }
      }
    }
  }
}

float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float s = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

void axpy_avx2(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{"avx2", &gemm_avx2, &dot_avx2, &axpy_avx2};
  return table;
}

}  // namespace sweepret::kernels
