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

#include "posig/torus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "posig/errors.hpp"
#include "posig/simd/kernels.hpp"

namespace posig {

double WrapCoordinate(double x) {
  double r = x - 2.0 * std::floor((x + 1.0) * 0.5);
  // floor() can leave r one ulp outside the interval.
  if (r >= 1.0) r -= 2.0;
  if (r < -1.0) r += 2.0;
  return r;
}

double CircleDistance(double a, double b) {
  const double d = std::fabs(WrapCoordinate(a) - WrapCoordinate(b));
  return std::min(d, 2.0 - d);
}

TorusMessage TorusMessage::Wrap(std::span<const double> raw) {
  TorusMessage m;
  m.components_.reserve(raw.size());
  for (double x : raw) {
    if (!std::isfinite(x)) throw InvalidInput("torus coordinate is not finite");
    m.components_.push_back(WrapCoordinate(x));
  }
  return m;
}

double Distance(const TorusMessage& a, const TorusMessage& b) {
  if (a.dim() != b.dim()) {
    throw InvalidInput("torus distance: dimension mismatch (" +
                       std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()) + ")");
  }
  double sq = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double d = CircleDistance(a[i], b[i]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

template <typename T>
PairwiseDistances ComputePairwiseDistances(const Matrix<T>& batch) {
  if (batch.rows() < 1) throw InvalidInput("pairwise distances: empty batch");
  for (size_t i = 0; i < batch.size(); ++i)
    if (!std::isfinite(static_cast<double>(batch[i])))
      throw InvalidInput("pairwise distances: non-finite coordinate");
  PairwiseDistances out;
  out.rows_ = batch.rows();
  out.values_.assign(static_cast<size_t>(out.rows_) * out.rows_, 0.0);
  simd::Kernels<T>().pairwise_distances(batch.data(), batch.rows(),
                                        batch.cols(), out.values_.data());
  for (int i = 0; i < out.rows_; ++i)
    for (int j = 0; j <= i; ++j)
      out.values_[static_cast<size_t>(i) * out.rows_ + j] = PairwiseDistances::kExcluded;
  return out;
}

template PairwiseDistances ComputePairwiseDistances<float>(const Matrix<float>&);
template PairwiseDistances ComputePairwiseDistances<double>(const Matrix<double>&);

}  // namespace posig
