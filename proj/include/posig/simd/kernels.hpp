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

#pragma once

// Data-parallel inner loops used by the autodiff tape and the signaling
// losses. Every kernel has a scalar reference implementation and optional
// AVX2/AVX-512 variants; the variant is chosen once at startup from CPUID
// (override with POSIG_SIMD=scalar|avx2|avx512).

#include <cstdint>
#include <string_view>

namespace posig::simd {

enum class Isa { kScalar = 0, kAvx2 = 1, kAvx512 = 2 };

std::string_view IsaName(Isa isa);

// Result of the upper-triangular repulsion sum over a batch of torus points.
struct RepulsionSum {
  double loss_sum = 0.0;   // sum over i<j of max(-l1*d_ij + l2, 0)
  int64_t active_pairs = 0;  // pairs with d_ij < l2/l1
};

template <typename T>
struct KernelTable {
  Isa isa = Isa::kScalar;

  // C[m x n] (+)= A[m x k] * B[k x n], all row-major with leading dims.
  void (*gemm_nn)(int m, int n, int k, const T* a, int lda, const T* b,
                  int ldb, T* c, int ldc, bool accumulate) = nullptr;

  // Sum over unordered pairs i<j of the hinge repulsion between rows of
  // `points` (rows x dim, row-major) under the toroidal metric with period 2.
  // If `grad` is non-null, d(loss_sum)/d(row i) is ADDED to grad for the
  // first operand of each pair only; the second operand is treated as
  // constant. Zero-distance pairs add l2 to the loss and nothing to grad.
  RepulsionSum (*repulsion_upper)(const T* points, int rows, int dim,
                                  double lambda1, double lambda2,
                                  T* grad) = nullptr;

  // Toroidal distances between every row pair, out is rows x rows
  // (full symmetric matrix, zero diagonal).
  void (*pairwise_distances)(const T* points, int rows, int dim,
                             double* out) = nullptr;
};

// Best table supported by the running CPU (or the POSIG_SIMD override).
template <typename T>
const KernelTable<T>& Kernels();

// Table for a specific ISA; throws std::runtime_error if the CPU or the
// build lacks it.
template <typename T>
const KernelTable<T>& KernelsFor(Isa isa);

bool IsaAvailable(Isa isa);
Isa ActiveIsa();

}  // namespace posig::simd
