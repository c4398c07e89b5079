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

// Compiled with -mavx2 -mfma. Nothing here may be reachable unless the
// dispatcher has confirmed CPU support, and nothing here may instantiate
// inline library templates that other translation units also use.

#include <immintrin.h>

#include "simd/kernels_internal.hpp"

namespace posig::simd::avx2 {
namespace {

alignas(32) const int kMaskTable[16] = {-1, -1, -1, -1, -1, -1, -1, -1,
                                        0,  0,  0,  0,  0,  0,  0,  0};

struct VecF {
  using T = float;
  using Reg = __m256;
  static constexpr int kWidth = 8;
  static Reg Zero() { return _mm256_setzero_ps(); }
  static Reg Load(const float* p) { return _mm256_loadu_ps(p); }
  static __m256i Mask(int n) {
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kMaskTable + 8 - n));
  }
  static Reg LoadN(const float* p, int n) { return _mm256_maskload_ps(p, Mask(n)); }
  static void Store(float* p, Reg r) { _mm256_storeu_ps(p, r); }
  static void StoreN(float* p, Reg r, int n) { _mm256_maskstore_ps(p, Mask(n), r); }
  static Reg Set1(float x) { return _mm256_set1_ps(x); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static Reg Add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
};

struct VecD {
  using T = double;
  using Reg = __m256d;
  using MaskT = __m256d;
  static constexpr int kWidth = 4;
  static Reg Zero() { return _mm256_setzero_pd(); }
  static Reg Load(const double* p) { return _mm256_loadu_pd(p); }
  static __m256i Mask(int n) {
    // Two int lanes per double lane.
    return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kMaskTable + 8 - 2 * n));
  }
  static Reg LoadN(const double* p, int n) { return _mm256_maskload_pd(p, Mask(n)); }
  static void Store(double* p, Reg r) { _mm256_storeu_pd(p, r); }
  static void StoreN(double* p, Reg r, int n) { _mm256_maskstore_pd(p, Mask(n), r); }
  static Reg Set1(double x) { return _mm256_set1_pd(x); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static Reg Add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg Sub(Reg a, Reg b) { return _mm256_sub_pd(a, b); }
  static Reg Mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
  static Reg Div(Reg a, Reg b) { return _mm256_div_pd(a, b); }
  static Reg Sqrt(Reg a) { return _mm256_sqrt_pd(a); }
  static Reg MinImage(Reg diff) {
    const Reg sign_bit = _mm256_set1_pd(-0.0);
    const Reg ad = _mm256_andnot_pd(sign_bit, diff);
    const Reg wrapped = _mm256_cmp_pd(ad, _mm256_set1_pd(1.0), _CMP_GT_OQ);
    // diff - copysign(2, diff) where |diff| > 1.
    const Reg two = _mm256_or_pd(_mm256_and_pd(diff, sign_bit), _mm256_set1_pd(2.0));
    return _mm256_sub_pd(diff, _mm256_and_pd(wrapped, two));
  }
  static MaskT LessMask(Reg a, Reg b) { return _mm256_cmp_pd(a, b, _CMP_LT_OQ); }
  static MaskT GreaterMask(Reg a, Reg b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
  static MaskT AndMask(MaskT a, MaskT b) { return _mm256_and_pd(a, b); }
  static int MaskCount(MaskT m) { return __builtin_popcount(_mm256_movemask_pd(m)); }
  static Reg Select(MaskT m, Reg a, Reg b) { return _mm256_blendv_pd(b, a, m); }
  static double ReduceAdd(Reg r) {
    const __m128d lo = _mm256_castpd256_pd128(r);
    const __m128d hi = _mm256_extractf128_pd(r, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  }
};

#include "simd/kernels_vec.inc"

struct Scratch {
  explicit Scratch(long n) : data(new double[n > 0 ? n : 1]) {}
  ~Scratch() { delete[] data; }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
  double* data;
};

void GemmF(int m, int n, int k, const float* a, int lda, const float* b,
           int ldb, float* c, int ldc, bool accumulate) {
  GemmNNVec<VecF, 6>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void GemmD(int m, int n, int k, const double* a, int lda, const double* b,
           int ldb, double* c, int ldc, bool accumulate) {
  GemmNNVec<VecD, 6>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

template <typename T>
RepulsionSum Repulsion(const T* points, int rows, int dim, double lambda1,
                       double lambda2, T* grad) {
  Scratch soa(static_cast<long>(rows) * dim + dim);
  return RepulsionUpperVec<VecD, T>(points, rows, dim, lambda1, lambda2, grad,
                                    soa.data, soa.data + static_cast<long>(rows) * dim);
}

template <typename T>
void Distances(const T* points, int rows, int dim, double* out) {
  Scratch soa(static_cast<long>(rows) * dim);
  PairwiseDistancesVec<VecD, T>(points, rows, dim, out, soa.data);
}

}  // namespace

template <>
KernelTable<float> MakeTable<float>() {
  KernelTable<float> t;
  t.isa = Isa::kAvx2;
  t.gemm_nn = &GemmF;
  t.repulsion_upper = &Repulsion<float>;
  t.pairwise_distances = &Distances<float>;
  return t;
}

template <>
KernelTable<double> MakeTable<double>() {
  KernelTable<double> t;
  t.isa = Isa::kAvx2;
  t.gemm_nn = &GemmD;
  t.repulsion_upper = &Repulsion<double>;
  t.pairwise_distances = &Distances<double>;
  return t;
}

}  // namespace posig::simd::avx2
