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

// A small reverse-mode tape over batched matrices. One tape records one
// training iteration (all turns of a batch of episodes); Backward() walks it
// once and deposits parameter gradients into the owning ParamStore.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "posig/matrix.hpp"

namespace posig {

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
};

// Owns named parameters with stable addresses, in registration order.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter<T>& Add(std::string name, int rows, int cols);
  Parameter<T>* Find(std::string_view name);
  const Parameter<T>* Find(std::string_view name) const;

  std::span<const std::unique_ptr<Parameter<T>>> all() const { return params_; }
  size_t size() const { return params_.size(); }
  size_t ScalarCount() const;

  void ZeroGrad();
  double GradNorm() const;  // global L2 norm of all gradients
  void ScaleGrad(double factor);
  void CopyValuesFrom(const ParamStore& other);  // same layout required

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var Constant(Matrix<T> value);
  // A leaf whose gradient can be read back after Backward().
  Var Input(Matrix<T> value);
  // Registers a parameter once per tape; repeated calls return the same Var.
  Var Param(Parameter<T>& p);

  const Matrix<T>& Value(Var v) const { return nodes_[v.id].value; }
  bool RequiresGrad(Var v) const { return nodes_[v.id].requires_grad; }
  // Empty matrix if no gradient reached v.
  const Matrix<T>& Grad(Var v) const { return nodes_[v.id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // Seeds d(root)/d(root) = 1 for a 1x1 root and accumulates into every
  // parameter reached.
  void Backward(Var root);

  // x * w + b, with w (in x out) and b (1 x out).
  Var Linear(Var x, Var w, Var b);
  Var Concat(std::span<const Var> parts);
  Var Concat(std::initializer_list<Var> parts) {
    return Concat(std::span<const Var>(parts.begin(), parts.size()));
  }
  Var Slice(Var x, int col_begin, int cols);
  Var GatherRows(Var x, std::span<const int> rows);

  // gates: B x 4H in (input, forget, cell, output) order; c_prev: B x H.
  // Returns B x 2H holding [h | c].
  Var LstmCell(Var gates, Var c_prev);

  Var Sigmoid(Var x);
  Var Tanh(Var x);
  Var Relu(Var x);
  Var LeakyRelu(Var x, T slope = T(0.01));
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Scale(Var x, T factor);
  // max(x, lo); the gradient is passed only where x > lo.
  Var ClampMin(Var x, T lo);
  Var Detach(Var x);

  // Softmax over consecutive column groups of width group_size.
  Var SoftmaxGroups(Var logits, int group_size);
  // Sum over groups of log softmax(logits)[choice]; choices is rows x groups.
  Var CategoricalLogProb(Var logits, int group_size,
                         std::span<const int> choices);
  // Row sums of the diagonal Gaussian log-density of a fixed sample.
  Var GaussianLogProb(Var mean, Var std, const Matrix<T>& sample);
  // Row sums of log Bernoulli(outcome; sigmoid(logit)).
  Var BernoulliLogProb(Var logit, const Matrix<T>& outcome);

  // Scalar sum(weights .* x).
  Var WeightedSum(Var x, const Matrix<T>& weights);
  // Scalar sum of 1x1 terms.
  Var SumScalars(std::span<const Var> terms);

  // Scalar node with externally computed value and gradient d(value)/dx.
  Var ScalarFunction(Var x, double value, Matrix<T> grad_wrt_x);

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    std::function<void(Tape&, int)> backward;
  };

  Var Push(Matrix<T> value, bool requires_grad,
           std::function<void(Tape&, int)> backward);
  Matrix<T>& GradOf(int id);
  bool Needs(Var v) const { return nodes_[v.id].requires_grad; }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, int> param_ids_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace posig
