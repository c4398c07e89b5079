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

#include "posig/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace posig {

namespace {

void Require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename T>
T SigmoidScalar(T x) {
  if (x >= 0) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T Softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore

template <typename T>
Parameter<T>& ParamStore<T>::Add(std::string name, int rows, int cols) {
  if (Find(name) != nullptr) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  auto p = std::make_unique<Parameter<T>>();
  p->name = std::move(name);
  p->value = Matrix<T>(rows, cols);
  p->grad = Matrix<T>(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParamStore<T>::Find(std::string_view name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <typename T>
const Parameter<T>* ParamStore<T>::Find(std::string_view name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <typename T>
size_t ParamStore<T>::ScalarCount() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename T>
void ParamStore<T>::ZeroGrad() {
  for (auto& p : params_) p->grad.SetZero();
}

template <typename T>
double ParamStore<T>::GradNorm() const {
  double sq = 0.0;
  for (const auto& p : params_)
    for (size_t i = 0; i < p->grad.size(); ++i) {
      const double g = p->grad[i];
      sq += g * g;
    }
  return std::sqrt(sq);
}

template <typename T>
void ParamStore<T>::ScaleGrad(double factor) {
  for (auto& p : params_)
    for (size_t i = 0; i < p->grad.size(); ++i)
      p->grad[i] = static_cast<T>(p->grad[i] * factor);
}

template <typename T>
void ParamStore<T>::CopyValuesFrom(const ParamStore& other) {
  Require(other.params_.size() == params_.size(), "parameter layout mismatch");
  for (size_t i = 0; i < params_.size(); ++i) {
    Require(params_[i]->value.SameShape(other.params_[i]->value),
            "parameter shape mismatch");
    params_[i]->value = other.params_[i]->value;
  }
}

// ---------------------------------------------------------------------------
// Tape plumbing

template <typename T>
Var Tape<T>::Push(Matrix<T> value, bool requires_grad,
                  std::function<void(Tape&, int)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Matrix<T>& Tape<T>::GradOf(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = Matrix<T>(n.value.rows(), n.value.cols());
  } else if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix<T>(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

template <typename T>
Var Tape<T>::Constant(Matrix<T> value) {
  return Push(std::move(value), false, nullptr);
}

template <typename T>
Var Tape<T>::Input(Matrix<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Tape<T>::Param(Parameter<T>& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var{it->second};
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_ids_.emplace(&p, id);
  return Var{id};
}

template <typename T>
void Tape<T>::Backward(Var root) {
  Require(root.valid() && root.id < size(), "invalid backward root");
  Require(nodes_[root.id].value.rows() == 1 && nodes_[root.id].value.cols() == 1,
          "backward root must be 1x1");
  if (!nodes_[root.id].requires_grad) return;
  GradOf(root.id)[0] += T(1);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) {
      Matrix<T>& pg = n.param->grad;
      const Matrix<T>& g = nodes_[id].grad;
      for (size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
    }
  }
}

// ---------------------------------------------------------------------------
// Dense and structural ops

template <typename T>
Var Tape<T>::Linear(Var x, Var w, Var b) {
  const Matrix<T>& xv = Value(x);
  const Matrix<T>& wv = Value(w);
  const Matrix<T>& bv = Value(b);
  Require(xv.cols() == wv.rows(), "Linear: input width mismatch");
  Require(bv.rows() == 1 && bv.cols() == wv.cols(), "Linear: bias shape");
  Matrix<T> y(xv.rows(), wv.cols());
  for (int r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    for (int c = 0; c < y.cols(); ++c) yr[c] = bv[c];
  }
  MatMul(xv, wv, y, /*accumulate=*/true);
  const bool rg = Needs(x) || Needs(w) || Needs(b);
  return Push(std::move(y), rg, [x, w, b](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    if (t.Needs(x)) MatMulNT(dy, t.Value(w), t.GradOf(x.id), true);
    if (t.Needs(w)) MatMulTN(t.Value(x), dy, t.GradOf(w.id), true);
    if (t.Needs(b)) {
      Matrix<T>& db = t.GradOf(b.id);
      for (int r = 0; r < dy.rows(); ++r) {
        auto dr = dy.row(r);
        for (int c = 0; c < dy.cols(); ++c) db[c] += dr[c];
      }
    }
  });
}

template <typename T>
Var Tape<T>::Concat(std::span<const Var> parts) {
  Require(!parts.empty(), "Concat: no inputs");
  const int rows = Value(parts[0]).rows();
  int cols = 0;
  bool rg = false;
  for (Var p : parts) {
    Require(Value(p).rows() == rows, "Concat: row mismatch");
    cols += Value(p).cols();
    rg = rg || Needs(p);
  }
  Matrix<T> y(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Matrix<T>& pv = Value(p);
    for (int r = 0; r < rows; ++r)
      std::copy(pv.row(r).begin(), pv.row(r).end(), y.row(r).begin() + off);
    off += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return Push(std::move(y), rg, [inputs](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    int off = 0;
    for (Var p : inputs) {
      const int pc = t.Value(p).cols();
      if (t.Needs(p)) {
        Matrix<T>& dp = t.GradOf(p.id);
        for (int r = 0; r < dy.rows(); ++r) {
          auto dr = dy.row(r);
          auto pr = dp.row(r);
          for (int c = 0; c < pc; ++c) pr[c] += dr[off + c];
        }
      }
      off += pc;
    }
  });
}

template <typename T>
Var Tape<T>::Slice(Var x, int col_begin, int cols) {
  const Matrix<T>& xv = Value(x);
  Require(col_begin >= 0 && cols >= 0 && col_begin + cols <= xv.cols(),
          "Slice: column range");
  Matrix<T> y(xv.rows(), cols);
  for (int r = 0; r < xv.rows(); ++r) {
    auto xr = xv.row(r);
    std::copy(xr.begin() + col_begin, xr.begin() + col_begin + cols,
              y.row(r).begin());
  }
  return Push(std::move(y), Needs(x), [x, col_begin, cols](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (int r = 0; r < dy.rows(); ++r) {
      auto dr = dy.row(r);
      auto xr = dx.row(r);
      for (int c = 0; c < cols; ++c) xr[col_begin + c] += dr[c];
    }
  });
}

template <typename T>
Var Tape<T>::GatherRows(Var x, std::span<const int> rows) {
  const Matrix<T>& xv = Value(x);
  Matrix<T> y(static_cast<int>(rows.size()), xv.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i] >= 0 && rows[i] < xv.rows(), "GatherRows: index");
    auto src = xv.row(rows[i]);
    std::copy(src.begin(), src.end(), y.row(static_cast<int>(i)).begin());
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return Push(std::move(y), Needs(x), [x, idx](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < idx.size(); ++i) {
      auto dr = dy.row(static_cast<int>(i));
      auto xr = dx.row(idx[i]);
      for (size_t c = 0; c < dr.size(); ++c) xr[c] += dr[c];
    }
  });
}

template <typename T>
Var Tape<T>::LstmCell(Var gates, Var c_prev) {
  const Matrix<T>& g = Value(gates);
  const Matrix<T>& cp = Value(c_prev);
  const int rows = g.rows();
  const int h = cp.cols();
  Require(cp.rows() == rows && g.cols() == 4 * h, "LstmCell: shapes");
  // Cached activations: i, f, g, o, tanh(c).
  Matrix<T> act(rows, 5 * h);
  Matrix<T> y(rows, 2 * h);
  for (int r = 0; r < rows; ++r) {
    auto gr = g.row(r);
    auto cr = cp.row(r);
    auto ar = act.row(r);
    auto yr = y.row(r);
    for (int j = 0; j < h; ++j) {
      const T i = SigmoidScalar(gr[j]);
      const T f = SigmoidScalar(gr[h + j]);
      const T gg = std::tanh(gr[2 * h + j]);
      const T o = SigmoidScalar(gr[3 * h + j]);
      const T c = f * cr[j] + i * gg;
      const T tc = std::tanh(c);
      ar[j] = i;
      ar[h + j] = f;
      ar[2 * h + j] = gg;
      ar[3 * h + j] = o;
      ar[4 * h + j] = tc;
      yr[j] = o * tc;
      yr[h + j] = c;
    }
  }
  const bool rg = Needs(gates) || Needs(c_prev);
  return Push(std::move(y), rg,
              [gates, c_prev, act = std::move(act), h](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    const Matrix<T>& cp = t.Value(c_prev);
    Matrix<T>* dg = t.Needs(gates) ? &t.GradOf(gates.id) : nullptr;
    Matrix<T>* dcp = t.Needs(c_prev) ? &t.GradOf(c_prev.id) : nullptr;
    for (int r = 0; r < dy.rows(); ++r) {
      auto dr = dy.row(r);
      auto ar = act.row(r);
      auto cr = cp.row(r);
      for (int j = 0; j < h; ++j) {
        const T i = ar[j], f = ar[h + j], gg = ar[2 * h + j];
        const T o = ar[3 * h + j], tc = ar[4 * h + j];
        const T dh = dr[j];
        const T dc = dr[h + j] + dh * o * (T(1) - tc * tc);
        if (dg != nullptr) {
          auto gr = dg->row(r);
          gr[j] += dc * gg * i * (T(1) - i);
          gr[h + j] += dc * cr[j] * f * (T(1) - f);
          gr[2 * h + j] += dc * i * (T(1) - gg * gg);
          gr[3 * h + j] += dh * tc * o * (T(1) - o);
        }
        if (dcp != nullptr) dcp->row(r)[j] += dc * f;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise ops

template <typename T>
Var Tape<T>::Sigmoid(Var x) {
  Matrix<T> y = Value(x);
  for (size_t i = 0; i < y.size(); ++i) y[i] = SigmoidScalar(y[i]);
  return Push(std::move(y), Needs(x), [x](Tape& t, int self) {
    const Matrix<T>& yv = t.nodes_[self].value;
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * yv[i] * (T(1) - yv[i]);
  });
}

template <typename T>
Var Tape<T>::Tanh(Var x) {
  Matrix<T> y = Value(x);
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(y[i]);
  return Push(std::move(y), Needs(x), [x](Tape& t, int self) {
    const Matrix<T>& yv = t.nodes_[self].value;
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (T(1) - yv[i] * yv[i]);
  });
}

template <typename T>
Var Tape<T>::Relu(Var x) {
  return LeakyRelu(x, T(0));
}

template <typename T>
Var Tape<T>::LeakyRelu(Var x, T slope) {
  Matrix<T> y = Value(x);
  for (size_t i = 0; i < y.size(); ++i)
    if (y[i] < T(0)) y[i] *= slope;
  return Push(std::move(y), Needs(x), [x, slope](Tape& t, int self) {
    const Matrix<T>& xv = t.Value(x);
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dy.size(); ++i)
      dx[i] += xv[i] > T(0) ? dy[i] : slope * dy[i];
  });
}

template <typename T>
Var Tape<T>::Add(Var a, Var b) {
  Require(Value(a).SameShape(Value(b)), "Add: shapes");
  Matrix<T> y = Value(a);
  const Matrix<T>& bv = Value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return Push(std::move(y), Needs(a) || Needs(b), [a, b](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    for (Var v : {a, b}) {
      if (!t.Needs(v)) continue;
      Matrix<T>& dv = t.GradOf(v.id);
      for (size_t i = 0; i < dy.size(); ++i) dv[i] += dy[i];
    }
  });
}

template <typename T>
Var Tape<T>::Sub(Var a, Var b) {
  Require(Value(a).SameShape(Value(b)), "Sub: shapes");
  Matrix<T> y = Value(a);
  const Matrix<T>& bv = Value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return Push(std::move(y), Needs(a) || Needs(b), [a, b](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    if (t.Needs(a)) {
      Matrix<T>& da = t.GradOf(a.id);
      for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
    }
    if (t.Needs(b)) {
      Matrix<T>& db = t.GradOf(b.id);
      for (size_t i = 0; i < dy.size(); ++i) db[i] -= dy[i];
    }
  });
}

template <typename T>
Var Tape<T>::Mul(Var a, Var b) {
  Require(Value(a).SameShape(Value(b)), "Mul: shapes");
  Matrix<T> y = Value(a);
  const Matrix<T>& bv = Value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return Push(std::move(y), Needs(a) || Needs(b), [a, b](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    if (t.Needs(a)) {
      const Matrix<T>& bv = t.Value(b);
      Matrix<T>& da = t.GradOf(a.id);
      for (size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[i];
    }
    if (t.Needs(b)) {
      const Matrix<T>& av = t.Value(a);
      Matrix<T>& db = t.GradOf(b.id);
      for (size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av[i];
    }
  });
}

template <typename T>
Var Tape<T>::Scale(Var x, T factor) {
  Matrix<T> y = Value(x);
  for (size_t i = 0; i < y.size(); ++i) y[i] *= factor;
  return Push(std::move(y), Needs(x), [x, factor](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dy.size(); ++i) dx[i] += factor * dy[i];
  });
}

template <typename T>
Var Tape<T>::ClampMin(Var x, T lo) {
  Matrix<T> y = Value(x);
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::max(y[i], lo);
  return Push(std::move(y), Needs(x), [x, lo](Tape& t, int self) {
    const Matrix<T>& xv = t.Value(x);
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dy.size(); ++i)
      if (xv[i] > lo) dx[i] += dy[i];
  });
}

template <typename T>
Var Tape<T>::Detach(Var x) {
  return Constant(Value(x));
}

// ---------------------------------------------------------------------------
// Distributions

template <typename T>
Var Tape<T>::SoftmaxGroups(Var logits, int group_size) {
  const Matrix<T>& xv = Value(logits);
  Require(group_size > 0 && xv.cols() % group_size == 0,
          "SoftmaxGroups: width not divisible by group size");
  Matrix<T> y(xv.rows(), xv.cols());
  for (size_t base = 0; base < xv.size(); base += group_size) {
    T mx = xv[base];
    for (int a = 1; a < group_size; ++a) mx = std::max(mx, xv[base + a]);
    T sum = 0;
    for (int a = 0; a < group_size; ++a) {
      y[base + a] = std::exp(xv[base + a] - mx);
      sum += y[base + a];
    }
    for (int a = 0; a < group_size; ++a) y[base + a] /= sum;
  }
  return Push(std::move(y), Needs(logits), [logits, group_size](Tape& t, int self) {
    const Matrix<T>& yv = t.nodes_[self].value;
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(logits.id);
    for (size_t base = 0; base < yv.size(); base += group_size) {
      T dot = 0;
      for (int a = 0; a < group_size; ++a) dot += dy[base + a] * yv[base + a];
      for (int a = 0; a < group_size; ++a)
        dx[base + a] += yv[base + a] * (dy[base + a] - dot);
    }
  });
}

template <typename T>
Var Tape<T>::CategoricalLogProb(Var logits, int group_size,
                                std::span<const int> choices) {
  const Matrix<T>& xv = Value(logits);
  Require(group_size > 0 && xv.cols() % group_size == 0,
          "CategoricalLogProb: width not divisible by group size");
  const int groups = xv.cols() / group_size;
  Require(choices.size() == static_cast<size_t>(xv.rows()) * groups,
          "CategoricalLogProb: choice count");
  Matrix<T> probs(xv.rows(), xv.cols());
  Matrix<T> y(xv.rows(), 1);
  for (int r = 0; r < xv.rows(); ++r) {
    T total = 0;
    for (int g = 0; g < groups; ++g) {
      const size_t base = static_cast<size_t>(r) * xv.cols() + g * group_size;
      const int choice = choices[static_cast<size_t>(r) * groups + g];
      Require(choice >= 0 && choice < group_size, "CategoricalLogProb: choice");
      T mx = xv[base];
      for (int a = 1; a < group_size; ++a) mx = std::max(mx, xv[base + a]);
      T sum = 0;
      for (int a = 0; a < group_size; ++a) {
        probs[base + a] = std::exp(xv[base + a] - mx);
        sum += probs[base + a];
      }
      for (int a = 0; a < group_size; ++a) probs[base + a] /= sum;
      total += xv[base + choice] - mx - std::log(sum);
    }
    y[r] = total;
  }
  std::vector<int> picks(choices.begin(), choices.end());
  return Push(std::move(y), Needs(logits),
              [logits, group_size, groups, picks = std::move(picks),
               probs = std::move(probs)](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    Matrix<T>& dx = t.GradOf(logits.id);
    const int cols = dx.cols();
    for (int r = 0; r < dx.rows(); ++r) {
      for (int g = 0; g < groups; ++g) {
        const size_t base = static_cast<size_t>(r) * cols + g * group_size;
        const int choice = picks[static_cast<size_t>(r) * groups + g];
        for (int a = 0; a < group_size; ++a)
          dx[base + a] += dy[r] * ((a == choice ? T(1) : T(0)) - probs[base + a]);
      }
    }
  });
}

template <typename T>
Var Tape<T>::GaussianLogProb(Var mean, Var std, const Matrix<T>& sample) {
  const Matrix<T>& mv = Value(mean);
  const Matrix<T>& sv = Value(std);
  Require(mv.SameShape(sv) && mv.SameShape(sample), "GaussianLogProb: shapes");
  const T half_log_2pi = T(0.5) * std::log(T(2) * std::numbers::pi_v<T>);
  Matrix<T> y(mv.rows(), 1);
  for (int r = 0; r < mv.rows(); ++r) {
    T total = 0;
    for (int c = 0; c < mv.cols(); ++c) {
      const T z = (sample(r, c) - mv(r, c)) / sv(r, c);
      total += T(-0.5) * z * z - std::log(sv(r, c)) - half_log_2pi;
    }
    y[r] = total;
  }
  return Push(std::move(y), Needs(mean) || Needs(std),
              [mean, std, sample](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    const Matrix<T>& mv = t.Value(mean);
    const Matrix<T>& sv = t.Value(std);
    Matrix<T>* dm = t.Needs(mean) ? &t.GradOf(mean.id) : nullptr;
    Matrix<T>* ds = t.Needs(std) ? &t.GradOf(std.id) : nullptr;
    for (int r = 0; r < mv.rows(); ++r) {
      for (int c = 0; c < mv.cols(); ++c) {
        const T s = sv(r, c);
        const T z = (sample(r, c) - mv(r, c)) / s;
        if (dm != nullptr) (*dm)(r, c) += dy[r] * z / s;
        if (ds != nullptr) (*ds)(r, c) += dy[r] * (z * z - T(1)) / s;
      }
    }
  });
}

template <typename T>
Var Tape<T>::BernoulliLogProb(Var logit, const Matrix<T>& outcome) {
  const Matrix<T>& zv = Value(logit);
  Require(zv.SameShape(outcome), "BernoulliLogProb: shapes");
  Matrix<T> y(zv.rows(), 1);
  for (int r = 0; r < zv.rows(); ++r) {
    T total = 0;
    for (int c = 0; c < zv.cols(); ++c)
      total += outcome(r, c) * zv(r, c) - Softplus(zv(r, c));
    y[r] = total;
  }
  return Push(std::move(y), Needs(logit), [logit, outcome](Tape& t, int self) {
    const Matrix<T>& dy = t.nodes_[self].grad;
    const Matrix<T>& zv = t.Value(logit);
    Matrix<T>& dz = t.GradOf(logit.id);
    for (int r = 0; r < zv.rows(); ++r)
      for (int c = 0; c < zv.cols(); ++c)
        dz(r, c) += dy[r] * (outcome(r, c) - SigmoidScalar(zv(r, c)));
  });
}

// ---------------------------------------------------------------------------
// Reductions

template <typename T>
Var Tape<T>::WeightedSum(Var x, const Matrix<T>& weights) {
  const Matrix<T>& xv = Value(x);
  Require(xv.SameShape(weights), "WeightedSum: shapes");
  double total = 0.0;
  for (size_t i = 0; i < xv.size(); ++i)
    total += static_cast<double>(weights[i]) * static_cast<double>(xv[i]);
  Matrix<T> y(1, 1, static_cast<T>(total));
  return Push(std::move(y), Needs(x), [x, weights](Tape& t, int self) {
    const T dy = t.nodes_[self].grad[0];
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dy * weights[i];
  });
}

template <typename T>
Var Tape<T>::SumScalars(std::span<const Var> terms) {
  double total = 0.0;
  bool rg = false;
  for (Var v : terms) {
    Require(Value(v).rows() == 1 && Value(v).cols() == 1, "SumScalars: 1x1");
    total += Value(v)[0];
    rg = rg || Needs(v);
  }
  std::vector<Var> inputs(terms.begin(), terms.end());
  return Push(Matrix<T>(1, 1, static_cast<T>(total)), rg,
              [inputs](Tape& t, int self) {
    const T dy = t.nodes_[self].grad[0];
    for (Var v : inputs)
      if (t.Needs(v)) t.GradOf(v.id)[0] += dy;
  });
}

template <typename T>
Var Tape<T>::ScalarFunction(Var x, double value, Matrix<T> grad_wrt_x) {
  Require(Value(x).SameShape(grad_wrt_x), "ScalarFunction: gradient shape");
  return Push(Matrix<T>(1, 1, static_cast<T>(value)), Needs(x),
              [x, g = std::move(grad_wrt_x)](Tape& t, int self) {
    const T dy = t.nodes_[self].grad[0];
    Matrix<T>& dx = t.GradOf(x.id);
    for (size_t i = 0; i < dx.size(); ++i) dx[i] += dy * g[i];
  });
}

template class ParamStore<float>;
template class ParamStore<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace posig
