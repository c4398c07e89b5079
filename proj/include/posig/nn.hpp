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

// Layers over the tape. Weights are initialized uniformly in
// [-1/sqrt(fan_in), 1/sqrt(fan_in)]; biases start at zero except the LSTM
// forget gate, which starts at one.

#include <span>
#include <string>
#include <vector>

#include "posig/autodiff.hpp"
#include "posig/random.hpp"

namespace posig {

template <typename T>
void InitUniformFanIn(Parameter<T>& p, Rng& rng);

template <typename T>
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(ParamStore<T>& store, const std::string& name, int in, int out,
             Rng& rng);

  Var operator()(Tape<T>& tape, Var x) const {
    return tape.Linear(x, tape.Param(*w_), tape.Param(*b_));
  }
  int in() const { return w_->value.rows(); }
  int out() const { return w_->value.cols(); }

 private:
  Parameter<T>* w_ = nullptr;
  Parameter<T>* b_ = nullptr;
};

template <typename T>
class LstmLayer {
 public:
  struct State {
    Var h;
    Var c;
  };

  LstmLayer() = default;
  LstmLayer(ParamStore<T>& store, const std::string& name, int input,
            int hidden, Rng& rng);

  State Zero(Tape<T>& tape, int rows) const;
  State Step(Tape<T>& tape, Var x, const State& s) const;
  // Keeps only the listed rows of a state.
  State Gather(Tape<T>& tape, const State& s, std::span<const int> rows) const;

  int input() const { return input_; }
  int hidden() const { return hidden_; }

 private:
  Parameter<T>* w_ = nullptr;  // (input + hidden) x 4 hidden, gates i f g o
  Parameter<T>* b_ = nullptr;
  int input_ = 0;
  int hidden_ = 0;
};

// rows x (groups * width) matrix of one-hot blocks; symbols is rows x groups.
template <typename T>
Matrix<T> OneHotRows(std::span<const int> symbols, int rows, int groups, int width);

// rows x width matrix whose every row is the one-hot of `index`.
template <typename T>
Matrix<T> RepeatedOneHot(int rows, int width, int index);

extern template class DenseLayer<float>;
extern template class DenseLayer<double>;
extern template class LstmLayer<float>;
extern template class LstmLayer<double>;

}  // namespace posig
