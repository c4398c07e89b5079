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

#include <cstdint>
#include <vector>

#include "posig/autodiff.hpp"

namespace posig {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: p -= lr * wd * p
  double clip_norm = 0.0;     // global L2 norm; 0 disables clipping

  void Validate() const;
};

struct AdamStepInfo {
  double grad_norm = 0.0;     // before clipping
  double applied_norm = 0.0;  // after clipping
  bool skipped = false;       // non-finite gradient, nothing changed
};

// Adam over a fixed list of parameters, with the moment buffers kept in
// double precision regardless of the parameter type.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter<T>*> params, AdamConfig cfg);

  static double GlobalNorm(const std::vector<Parameter<T>*>& params);

  AdamStepInfo Step();
  void ZeroGrad();

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Parameter<T>*>& params() const { return params_; }

  // State exposed for checkpoints.
  int64_t steps() const { return steps_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void RestoreState(int64_t steps, std::vector<std::vector<double>> m,
                    std::vector<std::vector<double>> v);

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig cfg_;
  int64_t steps_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Every parameter of a store, in registration order.
template <typename T>
std::vector<Parameter<T>*> AllParams(ParamStore<T>& store);

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace posig
