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

// The continuous message space: the flat n-torus [-1, 1)^n, each component
// a circle of circumference 2 with -1 and 1 identified.

#include <limits>
#include <span>
#include <vector>

#include "posig/matrix.hpp"

namespace posig {

class TorusMessage {
 public:
  TorusMessage() = default;

  // Canonicalizes every component into [-1, 1). Throws InvalidInput on
  // non-finite input.
  static TorusMessage Wrap(std::span<const double> raw);
  static TorusMessage Wrap(std::initializer_list<double> raw) {
    return Wrap(std::span<const double>(raw.begin(), raw.size()));
  }

  int dim() const { return static_cast<int>(components_.size()); }
  std::span<const double> components() const { return components_; }
  double operator[](int i) const { return components_[i]; }

  friend bool operator==(const TorusMessage&, const TorusMessage&) = default;

 private:
  std::vector<double> components_;
};

// Scalar canonicalization of one coordinate into [-1, 1).
double WrapCoordinate(double x);

// Per-component circle distance min(|d|, 2 - |d|) of canonical coordinates.
double CircleDistance(double a, double b);

// sqrt(sum_i min(|a_i - b_i|, 2 - |a_i - b_i|)^2); inputs are re-wrapped.
// Throws InvalidInput on dimension mismatch.
double Distance(const TorusMessage& a, const TorusMessage& b);

// Upper-triangular distance matrix of a batch (rows are points). Excluded
// entries (diagonal and lower triangle) hold +infinity, which makes any
// hinge potential evaluate to zero on them.
class PairwiseDistances {
 public:
  static constexpr double kExcluded = std::numeric_limits<double>::infinity();

  int rows() const { return rows_; }
  double operator()(int i, int j) const {
    return values_[static_cast<size_t>(i) * rows_ + j];
  }
  static bool Included(int i, int j) { return i < j; }
  int IncludedCount() const { return rows_ * (rows_ - 1) / 2; }

 private:
  template <typename T>
  friend PairwiseDistances ComputePairwiseDistances(const Matrix<T>& batch);

  int rows_ = 0;
  std::vector<double> values_;
};

// Throws InvalidInput for an empty batch or non-finite entries.
template <typename T>
PairwiseDistances ComputePairwiseDistances(const Matrix<T>& batch);

}  // namespace posig
