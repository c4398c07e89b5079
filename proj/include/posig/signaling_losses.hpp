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

// Communication losses: the hinge repulsion between message means on the
// torus (continuous positive signaling), the entropy-based biases for
// categorical messages, and their composition with the reinforced
// communication term.

#include <optional>
#include <span>

#include "posig/autodiff.hpp"
#include "posig/matrix.hpp"
#include "posig/torus.hpp"

namespace posig {

// Hinge potential max(-lambda1 * d + lambda2, 0); zero beyond lambda2/lambda1.
struct RepulsionParams {
  double lambda1 = 100.0;
  double lambda2 = 10.0;

  double Cutoff() const { return lambda2 / lambda1; }
  void Validate() const;  // both strictly positive, else InvalidInput
};

double Repulsion(const TorusMessage& a, const TorusMessage& b,
                 const RepulsionParams& p);
// Same potential evaluated at a known distance.
double RepulsionAtDistance(double distance, const RepulsionParams& p);

template <typename T>
struct LossWithGrad {
  double value = 0.0;
  Matrix<T> grad;  // d(value)/d(input), same shape as the input
};

// (1/B^2) * sum_{i<j} repulsion(row_i, detach(row_j)). Gradient flows only
// through the first operand of each pair; zero-distance pairs contribute
// lambda2 to the value and nothing to the gradient. B = 1 gives 0.
template <typename T>
LossWithGrad<T> ContinuousPsLoss(const Matrix<T>& means,
                                 const RepulsionParams& p);

// The same pair accounting with the detached operands taken from a separate
// `reference` batch: (1/B^2) * sum_{i<j} repulsion(means_i, reference_j).
// ContinuousPsLoss(m) equals ContinuousPsLossAgainst(m, m); a frozen
// reference turns the value into a function whose true gradient is the
// detached one.
template <typename T>
LossWithGrad<T> ContinuousPsLossAgainst(const Matrix<T>& means,
                                        const Matrix<T>& reference,
                                        const RepulsionParams& p);

// Equipartitioned variant: (2/B) * sum over first-half x second-half pairs of
// repulsion(m, detach(m')). Requires even B.
template <typename T>
LossWithGrad<T> ContinuousPsLossSplit(const Matrix<T>& means,
                                      const RepulsionParams& p);

// View of per-member categorical policies: B rows, each holding P positions
// of A probabilities laid out position-major.
template <typename T>
class CategoricalPolicyBatch {
 public:
  // Throws InvalidInput unless every slice is nonnegative and sums to 1
  // within 1e-6 (1e-4 for float storage).
  CategoricalPolicyBatch(const Matrix<T>& probs, int positions, int alphabet);

  int batch() const { return probs_->rows(); }
  int positions() const { return positions_; }
  int alphabet() const { return alphabet_; }
  std::span<const T> slice(int b, int p) const {
    return probs_->row(b).subspan(static_cast<size_t>(p) * alphabet_, alphabet_);
  }
  const Matrix<T>& probs() const { return *probs_; }

 private:
  const Matrix<T>* probs_;
  int positions_;
  int alphabet_;
};

struct DiscretePsParams {
  double lambda_ps = 1.0;
  double h_target = 0.0;  // nats

  // Default target: 0.1 * ln(A).
  static DiscretePsParams WithDefaultTarget(double lambda_ps, int alphabet);
  void Validate(int alphabet) const;
};

// Batch mean policy, P x A.
template <typename T>
Matrix<double> AveragePolicy(const CategoricalPolicyBatch<T>& batch);

// -sum p ln p in nats, with 0 ln 0 = 0.
template <typename T>
double Entropy(std::span<const T> dist);

// Mean over positions of [-H(avg policy) + lambda_ps * mean_b (H_b - H_target)^2].
template <typename T>
LossWithGrad<T> DiscretePsLoss(const CategoricalPolicyBatch<T>& batch,
                               const DiscretePsParams& p);

// Mean over positions of [-H(avg policy) + lambda_ps * mean_b H_b].
template <typename T>
LossWithGrad<T> NaiveDiscretePsLoss(const CategoricalPolicyBatch<T>& batch,
                                    double lambda_ps);

struct CommLossWeights {
  double lambda_ib = 1.0;
  bool rc_enabled = true;
  bool ps_enabled = true;
};

// rc_enabled * rc + lambda_ib * ps_enabled * ib.
double ComposeCommLoss(double rc_loss, double ib_loss, const CommLossWeights& w);

// Tape counterparts used by the trainers.
template <typename T>
Var ContinuousPsLoss(Tape<T>& tape, Var means, const RepulsionParams& p,
                     bool split = false, const Matrix<T>* reference = nullptr);
template <typename T>
Var DiscretePsLoss(Tape<T>& tape, Var probs, int positions, int alphabet,
                   const DiscretePsParams& p);
// Missing terms count as zero; returns nullopt when nothing contributes.
template <typename T>
std::optional<Var> ComposeCommLoss(Tape<T>& tape, std::optional<Var> rc_loss,
                                   std::optional<Var> ib_loss,
                                   const CommLossWeights& w);

}  // namespace posig
