// Copyright 2026 The Posig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scalar reference kernels. These are the ground truth the vector variants
// are tested against, so they stay deliberately plain.

#include <cmath>

#include "simd/kernels_internal.hpp"

namespace posig::simd::scalar {

namespace {

template <typename T>
void GemmNN(int m, int n, int k, const T* a, int lda, const T* b, int ldb,
            T* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<int64_t>(i) * ldc;
    if (!accumulate) {
      for (int j = 0; j < n; ++j) crow[j] = T(0);
    }
    const T* arow = a + static_cast<int64_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + static_cast<int64_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
RepulsionSum RepulsionUpper(const T* points, int rows, int dim,
                            double lambda1, double lambda2, T* grad) {
  RepulsionSum out;
  const double cutoff = lambda2 / lambda1;
  for (int i = 0; i < rows; ++i) {
    const T* pi = points + static_cast<int64_t>(i) * dim;
    for (int j = i + 1; j < rows; ++j) {
      const T* pj = points + static_cast<int64_t>(j) * dim;
      double sq = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff = WrapComponent(static_cast<double>(pi[d])) -
                            WrapComponent(static_cast<double>(pj[d]));
        const double ad = std::fabs(diff);
        const double delta = ad <= 1.0 ? ad : 2.0 - ad;
        sq += delta * delta;
      }
      const double dist = std::sqrt(sq);
      if (dist >= cutoff) continue;
      out.loss_sum += -lambda1 * dist + lambda2;
      ++out.active_pairs;
      if (grad == nullptr || dist == 0.0) continue;
      T* gi = grad + static_cast<int64_t>(i) * dim;
      for (int d = 0; d < dim; ++d) {
        const double diff = WrapComponent(static_cast<double>(pi[d])) -
                            WrapComponent(static_cast<double>(pj[d]));
        const double ad = std::fabs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        // d|delta|/d(pi) flips sign on the wrapped branch.
        const double ddelta = ad <= 1.0 ? sign : -sign;
        const double delta = ad <= 1.0 ? ad : 2.0 - ad;
        gi[d] += static_cast<T>(-lambda1 * delta * ddelta / dist);
      }
    }
  }
  return out;
}

template <typename T>
void PairwiseDistances(const T* points, int rows, int dim, double* out) {
  for (int i = 0; i < rows; ++i) {
    out[static_cast<int64_t>(i) * rows + i] = 0.0;
    for (int j = i + 1; j < rows; ++j) {
      double sq = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff =
            WrapComponent(static_cast<double>(points[i * dim + d])) -
            WrapComponent(static_cast<double>(points[j * dim + d]));
        const double ad = std::fabs(diff);
        const double delta = ad <= 1.0 ? ad : 2.0 - ad;
        sq += delta * delta;
      }
      const double dist = std::sqrt(sq);
      out[static_cast<int64_t>(i) * rows + j] = dist;
      out[static_cast<int64_t>(j) * rows + i] = dist;
    }
  }
}

}  // namespace

template <typename T>
KernelTable<T> MakeTable() {
  KernelTable<T> t;
  t.isa = Isa::kScalar;
  t.gemm_nn = &GemmNN<T>;
  t.repulsion_upper = &RepulsionUpper<T>;
  t.pairwise_distances = &PairwiseDistances<T>;
  return t;
}

template KernelTable<float> MakeTable<float>();
template KernelTable<double> MakeTable<double>();

}  // namespace posig::simd::scalar
