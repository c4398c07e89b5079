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

#include "posig/optimizer.hpp"

#include <cmath>

#include "posig/errors.hpp"

namespace posig {

void AdamConfig::Validate() const {
  if (!(lr > 0.0)) throw InvalidInput("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidInput("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidInput("beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  if (!(weight_decay >= 0.0)) throw InvalidInput("weight_decay must be nonnegative");
  if (!(clip_norm >= 0.0)) throw InvalidInput("clip_norm must be nonnegative");
}

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  cfg_.Validate();
  for (const auto* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

template <typename T>
double Adam<T>::GlobalNorm(const std::vector<Parameter<T>*>& params) {
  double sq = 0.0;
  for (const auto* p : params)
    for (size_t i = 0; i < p->grad.size(); ++i) {
      const double g = p->grad[i];
      sq += g * g;
    }
  return std::sqrt(sq);
}

template <typename T>
AdamStepInfo Adam<T>::Step() {
  AdamStepInfo info;
  info.grad_norm = GlobalNorm(params_);
  if (!std::isfinite(info.grad_norm)) {
    info.skipped = true;
    return info;
  }
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0 && info.grad_norm > cfg_.clip_norm)
    scale = cfg_.clip_norm / info.grad_norm;
  info.applied_norm = info.grad_norm * scale;

  ++steps_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  const double decay = cfg_.lr * cfg_.weight_decay;
  for (size_t k = 0; k < params_.size(); ++k) {
    Parameter<T>& p = *params_[k];
    std::vector<double>& m = m_[k];
    std::vector<double>& v = v_[k];
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = static_cast<double>(p.grad[i]) * scale;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double step = cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
      const double w = static_cast<double>(p.value[i]);
      p.value[i] = static_cast<T>(w - step - decay * w);
    }
  }
  return info;
}

template <typename T>
void Adam<T>::ZeroGrad() {
  for (auto* p : params_) p->grad.SetZero();
}

template <typename T>
void Adam<T>::RestoreState(int64_t steps, std::vector<std::vector<double>> m,
                           std::vector<std::vector<double>> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw InvalidInput("optimizer state: parameter count mismatch");
  for (size_t k = 0; k < params_.size(); ++k)
    if (m[k].size() != params_[k]->value.size() || v[k].size() != params_[k]->value.size())
      throw InvalidInput("optimizer state: size mismatch for " + params_[k]->name);
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

template <typename T>
std::vector<Parameter<T>*> AllParams(ParamStore<T>& store) {
  std::vector<Parameter<T>*> out;
  for (const auto& p : store.all()) out.push_back(p.get());
  return out;
}

template class Adam<float>;
template class Adam<double>;
template std::vector<Parameter<float>*> AllParams(ParamStore<float>&);
template std::vector<Parameter<double>*> AllParams(ParamStore<double>&);

}  // namespace posig
