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

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "simd/kernels_internal.hpp"

namespace posig::simd {

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kAvx512: return "avx512";
  }
  return "unknown";
}

bool IsaAvailable(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(POSIG_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kAvx512:
#if defined(POSIG_HAVE_AVX512)
      return __builtin_cpu_supports("avx512f") &&
             __builtin_cpu_supports("avx512dq") &&
             __builtin_cpu_supports("avx512vl");
#else
      return false;
#endif
  }
  return false;
}

namespace {

Isa DetectIsa() {
  if (const char* env = std::getenv("POSIG_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && IsaAvailable(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "avx512" && IsaAvailable(Isa::kAvx512)) return Isa::kAvx512;
  }
  if (IsaAvailable(Isa::kAvx512)) return Isa::kAvx512;
  if (IsaAvailable(Isa::kAvx2)) return Isa::kAvx2;
  return Isa::kScalar;
}

template <typename T>
KernelTable<T> Build(Isa isa) {
  switch (isa) {
#if defined(POSIG_HAVE_AVX512)
    case Isa::kAvx512: return avx512::MakeTable<T>();
#endif
#if defined(POSIG_HAVE_AVX2)
    case Isa::kAvx2: return avx2::MakeTable<T>();
#endif
    default: return scalar::MakeTable<T>();
  }
}

template <typename T>
struct Tables {
  KernelTable<T> scalar = Build<T>(Isa::kScalar);
  KernelTable<T> avx2 = IsaAvailable(Isa::kAvx2) ? Build<T>(Isa::kAvx2) : scalar;
  KernelTable<T> avx512 =
      IsaAvailable(Isa::kAvx512) ? Build<T>(Isa::kAvx512) : scalar;
};

template <typename T>
const Tables<T>& AllTables() {
  static const Tables<T> tables;
  return tables;
}

}  // namespace

Isa ActiveIsa() {
  static const Isa isa = DetectIsa();
  return isa;
}

template <typename T>
const KernelTable<T>& KernelsFor(Isa isa) {
  if (!IsaAvailable(isa)) {
    throw std::runtime_error("SIMD variant not available: " +
                             std::string(IsaName(isa)));
  }
  const Tables<T>& t = AllTables<T>();
  switch (isa) {
    case Isa::kAvx2: return t.avx2;
    case Isa::kAvx512: return t.avx512;
    default: return t.scalar;
  }
}

template <typename T>
const KernelTable<T>& Kernels() {
  static const KernelTable<T>& active = KernelsFor<T>(ActiveIsa());
  return active;
}

template const KernelTable<float>& Kernels<float>();
template const KernelTable<double>& Kernels<double>();
template const KernelTable<float>& KernelsFor<float>(Isa);
template const KernelTable<double>& KernelsFor<double>(Isa);

}  // namespace posig::simd
