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

// Straightforward reference implementations of the communication losses.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "posig/matrix.hpp"
#include "posig/signaling_losses.hpp"

namespace posig::oracles {

// Minimum-image displacement a - b by trying the three shifts explicitly.
inline double ImageDisplacement(double a, double b) {
  const double wa = a - 2.0 * std::floor((a + 1.0) / 2.0);
  const double wb = b - 2.0 * std::floor((b + 1.0) / 2.0);
  double best = wa - wb;
  for (double shift : {-2.0, 2.0})
    if (std::fabs(wa - wb + shift) < std::fabs(best)) best = wa - wb + shift;
  return best;
}

inline double RowDistance(const Matrix<double>& x, int i, const Matrix<double>& y, int j) {
  double sq = 0.0;
  for (int c = 0; c < x.cols(); ++c) {
    const double s = ImageDisplacement(x(i, c), y(j, c));
    sq += s * s;
  }
  return std::sqrt(sq);
}

// Full B x B distance matrix, keep the strict upper triangle, apply the hinge,
// sum and divide by B^2.
inline double BroadcastPsLoss(const Matrix<double>& m, const RepulsionParams& p) {
  const int b = m.rows();
  std::vector<double> full(static_cast<size_t>(b) * b);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) full[i * b + j] = RowDistance(m, i, m, j);
  double total = 0.0;
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) {
      if (j <= i) continue;
      total += std::max(-p.lambda1 * full[i * b + j] + p.lambda2, 0.0);
    }
  return total / (static_cast<double>(b) * b);
}

// Loss with the second operand of every pair taken from `fixed`.
inline double DetachedPsLoss(const Matrix<double>& x, const Matrix<double>& fixed,
                             const RepulsionParams& p) {
  const int b = x.rows();
  double total = 0.0;
  for (int i = 0; i < b; ++i)
    for (int j = i + 1; j < b; ++j)
      total += std::max(-p.lambda1 * RowDistance(x, i, fixed, j) + p.lambda2, 0.0);
  return total / (static_cast<double>(b) * b);
}

inline double FirstOperandGrad(const Matrix<double>& m, const RepulsionParams& p,
                               int i, int c) {
  const int b = m.rows();
  double g = 0.0;
  for (int j = i + 1; j < b; ++j) {
    const double d = RowDistance(m, i, m, j);
    if (d > 0.0 && d < p.Cutoff()) g += -p.lambda1 * ImageDisplacement(m(i, c), m(j, c)) / d;
  }
  return g / (static_cast<double>(b) * b);
}

// Same loss with gradient through both operands.
inline LossWithGrad<double> BothSidesPsLoss(const Matrix<double>& m,
                                            const RepulsionParams& p) {
  const int b = m.rows();
  LossWithGrad<double> out;
  out.grad = Matrix<double>(b, m.cols());
  const double norm = 1.0 / (static_cast<double>(b) * b);
  for (int i = 0; i < b; ++i)
    for (int j = i + 1; j < b; ++j) {
      const double d = RowDistance(m, i, m, j);
      out.value += norm * std::max(-p.lambda1 * d + p.lambda2, 0.0);
      if (!(d > 0.0 && d < p.Cutoff())) continue;
      for (int c = 0; c < m.cols(); ++c) {
        const double g = -p.lambda1 * ImageDisplacement(m(i, c), m(j, c)) / d * norm;
        out.grad(i, c) += g;
        out.grad(j, c) -= g;
      }
    }
  return out;
}

inline Matrix<double> Softmax(const Matrix<double>& logits, int group) {
  Matrix<double> out(logits.rows(), logits.cols());
  for (int r = 0; r < logits.rows(); ++r)
    for (int g0 = 0; g0 < logits.cols(); g0 += group) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < group; ++k) mx = std::max(mx, logits(r, g0 + k));
      double z = 0.0;
      for (int k = 0; k < group; ++k) z += std::exp(logits(r, g0 + k) - mx);
      for (int k = 0; k < group; ++k) out(r, g0 + k) = std::exp(logits(r, g0 + k) - mx) / z;
    }
  return out;
}

// The discrete bias evaluated literally on arbitrary positive inputs.
inline double DiscretePsFormula(const Matrix<double>& q, int positions, int alphabet,
                                double lambda, double h_target, bool squared) {
  const int b = q.rows();
  auto h = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) if (x > 0.0) s -= x * std::log(x);
    return s;
  };
  double total = 0.0;
  for (int p = 0; p < positions; ++p) {
    std::vector<double> avg(alphabet, 0.0);
    double member = 0.0;
    for (int r = 0; r < b; ++r) {
      std::vector<double> v(alphabet);
      for (int a = 0; a < alphabet; ++a) {
        v[a] = q(r, p * alphabet + a);
        avg[a] += v[a] / b;
      }
      const double hb = h(v);
      member += squared ? (hb - h_target) * (hb - h_target) : hb;
    }
    total += -h(avg) + lambda * member / b;
  }
  return total / positions;
}

}  // namespace posig::oracles
