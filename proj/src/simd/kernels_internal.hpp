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

#include <cmath>

#include "posig/simd/kernels.hpp"

namespace posig::simd {

// Canonical representative of x on the circle of circumference 2, in [-1, 1).
// Internal linkage: this header is also compiled with wider ISA flags.
static inline double WrapComponent(double x) {
  double r = x - 2.0 * std::floor((x + 1.0) * 0.5);
  if (r >= 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  return r;
}

namespace scalar {
template <typename T>
KernelTable<T> MakeTable();
}  // namespace scalar

#if defined(POSIG_HAVE_AVX2)
namespace avx2 {
template <typename T>
KernelTable<T> MakeTable();
}  // namespace avx2
#endif

#if defined(POSIG_HAVE_AVX512)
namespace avx512 {
template <typename T>
KernelTable<T> MakeTable();
}  // namespace avx512
#endif

}  // namespace posig::simd
