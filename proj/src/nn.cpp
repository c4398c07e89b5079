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

#include "posig/nn.hpp"

#include <cmath>

#include "posig/errors.hpp"

namespace posig {

template <typename T>
void InitUniformFanIn(Parameter<T>& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.value.rows()));
  for (size_t i = 0; i < p.value.size(); ++i)
    p.value[i] = static_cast<T>((2.0 * rng.Uniform() - 1.0) * bound);
}

template <typename T>
DenseLayer<T>::DenseLayer(ParamStore<T>& store, const std::string& name,
                          int in, int out, Rng& rng) {
  w_ = &store.Add(name + ".w", in, out);
  b_ = &store.Add(name + ".b", 1, out);
  InitUniformFanIn(*w_, rng);
}

template <typename T>
LstmLayer<T>::LstmLayer(ParamStore<T>& store, const std::string& name,
                        int input, int hidden, Rng& rng)
    : input_(input), hidden_(hidden) {
  w_ = &store.Add(name + ".w", input + hidden, 4 * hidden);
  b_ = &store.Add(name + ".b", 1, 4 * hidden);
  InitUniformFanIn(*w_, rng);
  for (int j = hidden; j < 2 * hidden; ++j) b_->value[j] = T(1);
}

template <typename T>
typename LstmLayer<T>::State LstmLayer<T>::Zero(Tape<T>& tape, int rows) const {
  return {tape.Constant(Matrix<T>(rows, hidden_)),
          tape.Constant(Matrix<T>(rows, hidden_))};
}

template <typename T>
typename LstmLayer<T>::State LstmLayer<T>::Step(Tape<T>& tape, Var x,
                                                const State& s) const {
  if (tape.Value(x).cols() != input_)
    throw InvalidInput("LSTM input width " + std::to_string(tape.Value(x).cols()) +
                       ", expected " + std::to_string(input_));
  const Var gates = tape.Linear(tape.Concat({x, s.h}), tape.Param(*w_), tape.Param(*b_));
  const Var hc = tape.LstmCell(gates, s.c);
  return {tape.Slice(hc, 0, hidden_), tape.Slice(hc, hidden_, hidden_)};
}

template <typename T>
typename LstmLayer<T>::State LstmLayer<T>::Gather(Tape<T>& tape, const State& s,
                                                  std::span<const int> rows) const {
  return {tape.GatherRows(s.h, rows), tape.GatherRows(s.c, rows)};
}

template <typename T>
Matrix<T> OneHotRows(std::span<const int> symbols, int rows, int groups, int width) {
  if (symbols.size() != static_cast<size_t>(rows) * groups)
    throw InvalidInput("one-hot: symbol count mismatch");
  Matrix<T> m(rows, groups * width);
  for (int r = 0; r < rows; ++r)
    for (int g = 0; g < groups; ++g) {
      const int s = symbols[static_cast<size_t>(r) * groups + g];
      if (s < 0 || s >= width) throw InvalidInput("one-hot: symbol out of range");
      m(r, g * width + s) = T(1);
    }
  return m;
}

template <typename T>
Matrix<T> RepeatedOneHot(int rows, int width, int index) {
  if (index < 0 || index >= width) throw InvalidInput("one-hot: index out of range");
  Matrix<T> m(rows, width);
  for (int r = 0; r < rows; ++r) m(r, index) = T(1);
  return m;
}

#define POSIG_INSTANTIATE(T)                                                \
  template void InitUniformFanIn<T>(Parameter<T>&, Rng&);                   \
  template class DenseLayer<T>;                                             \
  template class LstmLayer<T>;                                              \
  template Matrix<T> OneHotRows<T>(std::span<const int>, int, int, int);    \
  template Matrix<T> RepeatedOneHot<T>(int, int, int);

POSIG_INSTANTIATE(float)
POSIG_INSTANTIATE(double)
#undef POSIG_INSTANTIATE

}  // namespace posig
