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

// Compiled with -mavx512f -mavx512dq -mavx512vl. Same rules as the AVX2 unit.

#include <immintrin.h>

#include "simd/kernels_internal.hpp"

namespace posig::simd::avx512 {
namespace {

struct VecF {
  using T = float;
  using Reg = __m512;
  static constexpr int kWidth = 16;
  static __mmask16 Mask(int n) { return static_cast<__mmask16>((1u << n) - 1u); }
  static Reg Zero() { return _mm512_setzero_ps(); }
  static Reg Load(const float* p) { return _mm512_loadu_ps(p); }
  static Reg LoadN(const float* p, int n) { return _mm512_maskz_loadu_ps(Mask(n), p); }
  static void Store(float* p, Reg r) { _mm512_storeu_ps(p, r); }
  static void StoreN(float* p, Reg r, int n) { _mm512_mask_storeu_ps(p, Mask(n), r); }
  static Reg Set1(float x) { return _mm512_set1_ps(x); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm512_fmadd_ps(a, b, c); }
  static Reg Add(Reg a, Reg b) { return _mm512_add_ps(a, b); }
};

struct VecD {
  using T = double;
  using Reg = __m512d;
  using MaskT = __mmask8;
  static constexpr int kWidth = 8;
  static __mmask8 Mask(int n) { return static_cast<__mmask8>((1u << n) - 1u); }
  static Reg Zero() { return _mm512_setzero_pd(); }
  static Reg Load(const double* p) { return _mm512_loadu_pd(p); }
  static Reg LoadN(const double* p, int n) { return _mm512_maskz_loadu_pd(Mask(n), p); }
  static void Store(double* p, Reg r) { _mm512_storeu_pd(p, r); }
  static void StoreN(double* p, Reg r, int n) { _mm512_mask_storeu_pd(p, Mask(n), r); }
  static Reg Set1(double x) { return _mm512_set1_pd(x); }
  static Reg Fma(Reg a, Reg b, Reg c) { return _mm512_fmadd_pd(a, b, c); }
  static Reg Add(Reg a, Reg b) { return _mm512_add_pd(a, b); }
  static Reg Sub(Reg a, Reg b) { return _mm512_sub_pd(a, b); }
  static Reg Mul(Reg a, Reg b) { return _mm512_mul_pd(a, b); }
  static Reg Div(Reg a, Reg b) { return _mm512_div_pd(a, b); }
  static Reg Sqrt(Reg a) { return _mm512_sqrt_pd(a); }
  static Reg MinImage(Reg diff) {
    const Reg ad = _mm512_abs_pd(diff);
    const __mmask8 wrapped = _mm512_cmp_pd_mask(ad, _mm512_set1_pd(1.0), _CMP_GT_OQ);
    const __mmask8 negative = _mm512_cmp_pd_mask(diff, _mm512_setzero_pd(), _CMP_LT_OQ);
    const Reg two = _mm512_mask_blend_pd(negative, _mm512_set1_pd(2.0), _mm512_set1_pd(-2.0));
    return _mm512_mask_sub_pd(diff, wrapped, diff, two);
  }
  static MaskT LessMask(Reg a, Reg b) { return _mm512_cmp_pd_mask(a, b, _CMP_LT_OQ); }
  static MaskT GreaterMask(Reg a, Reg b) { return _mm512_cmp_pd_mask(a, b, _CMP_GT_OQ); }
  static MaskT AndMask(MaskT a, MaskT b) { return static_cast<MaskT>(a & b); }
  static int MaskCount(MaskT m) { return __builtin_popcount(static_cast<unsigned>(m)); }
  static Reg Select(MaskT m, Reg a, Reg b) { return _mm512_mask_blend_pd(m, b, a); }
  static double ReduceAdd(Reg r) { return _mm512_reduce_add_pd(r); }
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
  GemmNNVec<VecF, 12>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
}

void GemmD(int m, int n, int k, const double* a, int lda, const double* b,
           int ldb, double* c, int ldc, bool accumulate) {
  GemmNNVec<VecD, 12>(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
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
  t.isa = Isa::kAvx512;
  t.gemm_nn = &GemmF;
  t.repulsion_upper = &Repulsion<float>;
  t.pairwise_distances = &Distances<float>;
  return t;
}

template <>
KernelTable<double> MakeTable<double>() {
  KernelTable<double> t;
  t.isa = Isa::kAvx512;
  t.gemm_nn = &GemmD;
  t.repulsion_upper = &Repulsion<double>;
  t.pairwise_distances = &Distances<double>;
  return t;
}

}  // namespace posig::simd::avx512
