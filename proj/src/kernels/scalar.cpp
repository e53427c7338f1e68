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

#include <algorithm>
#include <vector>

#include "sweepret/kernels.hpp"

namespace sweepret::kernels {

template <typename T>
void gemm_ref(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, T alpha, const T* a,
              std::size_t lda, const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  std::vector<T> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), T(0));
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
      if (tb == Trans::kNo) {
        const T* brow = b + p * ldb;
        for (std::size_t j = 0; j < n; ++j) acc[j] += aip * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) acc[j] += aip * b[j * ldb + p];
      }
    }
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = alpha * acc[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) crow[j] = alpha * acc[j] + beta * crow[j];
    }
  }
}

template <typename T>
T dot_ref(const T* a, const T* b, std::size_t n) {
  T s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
void axpy_ref(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template void gemm_ref<float>(Trans, Trans, std::size_t, std::size_t, std::size_t, float,
                              const float*, std::size_t, const float*, std::size_t, float, float*,
                              std::size_t);
template void gemm_ref<double>(Trans, Trans, std::size_t, std::size_t, std::size_t, double,
                               const double*, std::size_t, const double*, std::size_t, double,
                               double*, std::size_t);
template float dot_ref<float>(const float*, const float*, std::size_t);
template double dot_ref<double>(const double*, const double*, std::size_t);
template void axpy_ref<float>(std::size_t, float, const float*, float*);
template void axpy_ref<double>(std::size_t, double, const double*, double*);

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &gemm_ref<float>, &dot_ref<float>, &axpy_ref<float>};
  return table;
}

}  // namespace sweepret::kernels
