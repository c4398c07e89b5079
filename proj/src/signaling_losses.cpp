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

#include "posig/signaling_losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "posig/errors.hpp"
#include "posig/simd/kernels.hpp"

namespace posig {

namespace {

template <typename T>
void RequireFinite(const Matrix<T>& m, const char* what) {
  for (size_t i = 0; i < m.size(); ++i)
    if (!std::isfinite(static_cast<double>(m[i])))
      throw InvalidInput(std::string(what) + ": non-finite input");
}

// ln(q) used in entropy gradients; q = 0 would give -inf.
double SafeLog(double q) { return std::log(std::max(q, 1e-30)); }

}  // namespace

void RepulsionParams::Validate() const {
  if (!(lambda1 > 0.0)) throw InvalidInput("lambda1 must be > 0");
  if (!(lambda2 > 0.0)) throw InvalidInput("lambda2 must be > 0");
}

double RepulsionAtDistance(double distance, const RepulsionParams& p) {
  return std::max(-p.lambda1 * distance + p.lambda2, 0.0);
}

double Repulsion(const TorusMessage& a, const TorusMessage& b,
                 const RepulsionParams& p) {
  return RepulsionAtDistance(Distance(a, b), p);
}

template <typename T>
LossWithGrad<T> ContinuousPsLoss(const Matrix<T>& means,
                                 const RepulsionParams& p) {
  p.Validate();
  if (means.rows() < 1) throw InvalidInput("continuous PS loss: empty batch");
  RequireFinite(means, "continuous PS loss");
  LossWithGrad<T> out;
  out.grad = Matrix<T>(means.rows(), means.cols());
  const simd::RepulsionSum sum = simd::Kernels<T>().repulsion_upper(
      means.data(), means.rows(), means.cols(), p.lambda1, p.lambda2,
      out.grad.data());
  const double norm = 1.0 / (static_cast<double>(means.rows()) * means.rows());
  out.value = sum.loss_sum * norm;
  for (size_t i = 0; i < out.grad.size(); ++i)
    out.grad[i] = static_cast<T>(out.grad[i] * norm);
  return out;
}

template <typename T>
LossWithGrad<T> ContinuousPsLossAgainst(const Matrix<T>& means,
                                        const Matrix<T>& reference,
                                        const RepulsionParams& p) {
  p.Validate();
  if (means.rows() < 1) throw InvalidInput("continuous PS loss: empty batch");
  if (!means.SameShape(reference))
    throw InvalidInput("continuous PS loss: reference shape mismatch");
  RequireFinite(means, "continuous PS loss");
  RequireFinite(reference, "continuous PS loss reference");
  const int b = means.rows();
  const int dim = means.cols();
  const double cutoff = p.Cutoff();
  LossWithGrad<T> out;
  out.grad = Matrix<T>(b, dim);
  double total = 0.0;
  std::vector<double> disp(dim);
  for (int i = 0; i < b; ++i) {
    for (int j = i + 1; j < b; ++j) {
      double sq = 0.0;
      for (int d = 0; d < dim; ++d) {
        double s = WrapCoordinate(means(i, d)) - WrapCoordinate(reference(j, d));
        if (s > 1.0) s -= 2.0;
        if (s < -1.0) s += 2.0;
        disp[d] = s;
        sq += s * s;
      }
      const double dist = std::sqrt(sq);
      if (dist >= cutoff) continue;
      total += p.lambda2 - p.lambda1 * dist;
      if (dist == 0.0) continue;
      for (int d = 0; d < dim; ++d)
        out.grad(i, d) += static_cast<T>(-p.lambda1 * disp[d] / dist);
    }
  }
  const double norm = 1.0 / (static_cast<double>(b) * b);
  out.value = total * norm;
  for (size_t i = 0; i < out.grad.size(); ++i)
    out.grad[i] = static_cast<T>(out.grad[i] * norm);
  return out;
}

template <typename T>
LossWithGrad<T> ContinuousPsLossSplit(const Matrix<T>& means,
                                      const RepulsionParams& p) {
  p.Validate();
  const int b = means.rows();
  if (b < 2 || b % 2 != 0)
    throw InvalidInput("split PS loss needs an even, nonzero batch, got " +
                       std::to_string(b));
  RequireFinite(means, "split PS loss");
  const int half = b / 2;
  const int dim = means.cols();
  const double cutoff = p.Cutoff();
  LossWithGrad<T> out;
  out.grad = Matrix<T>(b, dim);
  double total = 0.0;
  std::vector<double> disp(dim);
  for (int i = 0; i < half; ++i) {
    for (int j = half; j < b; ++j) {
      double sq = 0.0;
      for (int d = 0; d < dim; ++d) {
        double s = WrapCoordinate(means(i, d)) - WrapCoordinate(means(j, d));
        if (s > 1.0) s -= 2.0;
        if (s < -1.0) s += 2.0;
        disp[d] = s;
        sq += s * s;
      }
      const double dist = std::sqrt(sq);
      if (dist >= cutoff) continue;
      total += p.lambda2 - p.lambda1 * dist;
      if (dist == 0.0) continue;
      for (int d = 0; d < dim; ++d)
        out.grad(i, d) += static_cast<T>(-p.lambda1 * disp[d] / dist);
    }
  }
  const double norm = 2.0 / b;
  out.value = total * norm;
  for (size_t i = 0; i < out.grad.size(); ++i)
    out.grad[i] = static_cast<T>(out.grad[i] * norm);
  return out;
}

template <typename T>
CategoricalPolicyBatch<T>::CategoricalPolicyBatch(const Matrix<T>& probs,
                                                  int positions, int alphabet)
    : probs_(&probs), positions_(positions), alphabet_(alphabet) {
  if (positions < 1 || alphabet < 1 || probs.cols() != positions * alphabet)
    throw InvalidInput("categorical batch: width must equal positions * alphabet");
  const double tol = sizeof(T) >= 8 ? 1e-6 : 1e-4;
  for (int b = 0; b < probs.rows(); ++b)
    for (int p = 0; p < positions; ++p) {
      double sum = 0.0;
      for (T q : slice(b, p)) {
        if (!(q >= T(0))) throw InvalidInput("categorical batch: negative probability");
        sum += q;
      }
      if (std::fabs(sum - 1.0) > tol)
        throw InvalidInput("categorical batch: slice does not sum to 1");
    }
}

DiscretePsParams DiscretePsParams::WithDefaultTarget(double lambda_ps,
                                                     int alphabet) {
  return DiscretePsParams{lambda_ps, 0.1 * std::log(static_cast<double>(alphabet))};
}

void DiscretePsParams::Validate(int alphabet) const {
  if (!(lambda_ps > 0.0)) throw InvalidInput("lambda_ps must be > 0");
  if (!(h_target >= 0.0)) throw InvalidInput("h_target must be >= 0");
  if (h_target > std::log(static_cast<double>(alphabet)) + 1e-12)
    throw InvalidInput("h_target exceeds ln(alphabet)");
}

template <typename T>
Matrix<double> AveragePolicy(const CategoricalPolicyBatch<T>& batch) {
  Matrix<double> avg(batch.positions(), batch.alphabet());
  for (int b = 0; b < batch.batch(); ++b)
    for (int p = 0; p < batch.positions(); ++p) {
      auto s = batch.slice(b, p);
      for (int a = 0; a < batch.alphabet(); ++a) avg(p, a) += s[a];
    }
  const double inv = batch.batch() > 0 ? 1.0 / batch.batch() : 0.0;
  for (size_t i = 0; i < avg.size(); ++i) avg[i] *= inv;
  return avg;
}

template <typename T>
double Entropy(std::span<const T> dist) {
  double h = 0.0;
  for (T q : dist)
    if (q > T(0)) h -= static_cast<double>(q) * std::log(static_cast<double>(q));
  return h;
}

namespace {

// Shared body of the two discrete biases. `squared` selects the target
// entropy form; otherwise the member entropy enters linearly.
template <typename T>
LossWithGrad<T> DiscreteBias(const CategoricalPolicyBatch<T>& batch,
                             double lambda_ps, double h_target, bool squared) {
  const int nb = batch.batch();
  const int np = batch.positions();
  const int na = batch.alphabet();
  LossWithGrad<T> out;
  out.grad = Matrix<T>(nb, np * na);
  if (nb == 0) return out;
  const Matrix<double> avg = AveragePolicy(batch);
  const double inv_b = 1.0 / nb;
  const double inv_p = 1.0 / np;
  double total = 0.0;
  for (int p = 0; p < np; ++p) {
    auto avg_row = avg.row(p);
    total -= Entropy(std::span<const double>(avg_row.data(), avg_row.size()));
    for (int b = 0; b < nb; ++b) {
      auto s = batch.slice(b, p);
      const double h = Entropy(s);
      const double coef = squared ? 2.0 * lambda_ps * (h - h_target) : lambda_ps;
      total += inv_b * (squared ? lambda_ps * (h - h_target) * (h - h_target)
                                : lambda_ps * h);
      for (int a = 0; a < na; ++a) {
        // d(-H(avg))/dq = (ln avg + 1)/B;  dH_b/dq = -(ln q + 1).
        const double g_avg = (SafeLog(avg_row[a]) + 1.0) * inv_b;
        const double g_member = -coef * (SafeLog(s[a]) + 1.0) * inv_b;
        out.grad(b, p * na + a) = static_cast<T>((g_avg + g_member) * inv_p);
      }
    }
  }
  out.value = total * inv_p;
  return out;
}

}  // namespace

template <typename T>
LossWithGrad<T> DiscretePsLoss(const CategoricalPolicyBatch<T>& batch,
                               const DiscretePsParams& p) {
  p.Validate(batch.alphabet());
  return DiscreteBias(batch, p.lambda_ps, p.h_target, /*squared=*/true);
}

template <typename T>
LossWithGrad<T> NaiveDiscretePsLoss(const CategoricalPolicyBatch<T>& batch,
                                    double lambda_ps) {
  if (!(lambda_ps > 0.0)) throw InvalidInput("lambda_ps must be > 0");
  return DiscreteBias(batch, lambda_ps, 0.0, /*squared=*/false);
}

double ComposeCommLoss(double rc_loss, double ib_loss, const CommLossWeights& w) {
  return (w.rc_enabled ? rc_loss : 0.0) +
         (w.ps_enabled ? w.lambda_ib * ib_loss : 0.0);
}

template <typename T>
Var ContinuousPsLoss(Tape<T>& tape, Var means, const RepulsionParams& p,
                     bool split, const Matrix<T>* reference) {
  if (split && reference != nullptr)
    throw InvalidUse("split PS loss has no reference form");
  LossWithGrad<T> l = split ? ContinuousPsLossSplit(tape.Value(means), p)
                      : reference ? ContinuousPsLossAgainst(tape.Value(means), *reference, p)
                                  : ContinuousPsLoss(tape.Value(means), p);
  return tape.ScalarFunction(means, l.value, std::move(l.grad));
}

template <typename T>
Var DiscretePsLoss(Tape<T>& tape, Var probs, int positions, int alphabet,
                   const DiscretePsParams& p) {
  const CategoricalPolicyBatch<T> batch(tape.Value(probs), positions, alphabet);
  LossWithGrad<T> l = DiscretePsLoss(batch, p);
  return tape.ScalarFunction(probs, l.value, std::move(l.grad));
}

template <typename T>
std::optional<Var> ComposeCommLoss(Tape<T>& tape, std::optional<Var> rc_loss,
                                   std::optional<Var> ib_loss,
                                   const CommLossWeights& w) {
  std::vector<Var> terms;
  if (w.rc_enabled && rc_loss) terms.push_back(*rc_loss);
  if (w.ps_enabled && ib_loss) {
    terms.push_back(w.lambda_ib == 1.0
                        ? *ib_loss
                        : tape.Scale(*ib_loss, static_cast<T>(w.lambda_ib)));
  }
  if (terms.empty()) return std::nullopt;
  if (terms.size() == 1) return terms[0];
  return tape.SumScalars(terms);
}

#define POSIG_INSTANTIATE(T)                                                   \
  template LossWithGrad<T> ContinuousPsLoss<T>(const Matrix<T>&,               \
                                               const RepulsionParams&);        \
  template LossWithGrad<T> ContinuousPsLossSplit<T>(const Matrix<T>&,          \
                                                    const RepulsionParams&);   \
  template class CategoricalPolicyBatch<T>;                                    \
  template Matrix<double> AveragePolicy<T>(const CategoricalPolicyBatch<T>&);  \
  template double Entropy<T>(std::span<const T>);                              \
  template LossWithGrad<T> DiscretePsLoss<T>(const CategoricalPolicyBatch<T>&, \
                                             const DiscretePsParams&);         \
  template LossWithGrad<T> NaiveDiscretePsLoss<T>(                             \
      const CategoricalPolicyBatch<T>&, double);                               \
  template LossWithGrad<T> ContinuousPsLossAgainst<T>(                         \
      const Matrix<T>&, const Matrix<T>&, const RepulsionParams&);             \
  template Var ContinuousPsLoss<T>(Tape<T>&, Var, const RepulsionParams&,      \
                                   bool, const Matrix<T>*);                    \
  template Var DiscretePsLoss<T>(Tape<T>&, Var, int, int,                      \
                                 const DiscretePsParams&);                     \
  template std::optional<Var> ComposeCommLoss<T>(                              \
      Tape<T>&, std::optional<Var>, std::optional<Var>, const CommLossWeights&);

POSIG_INSTANTIATE(float)
POSIG_INSTANTIATE(double)
#undef POSIG_INSTANTIATE

}  // namespace posig
