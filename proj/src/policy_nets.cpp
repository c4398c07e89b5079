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

#include "posig/policy_nets.hpp"

#include <cmath>

#include "posig/errors.hpp"

namespace posig {

// ---------------------------------------------------------------------------
// SampleSource

SampleSource SampleSource::Replay(std::vector<double> log) {
  SampleSource s;
  s.log_ = std::move(log);
  return s;
}

double SampleSource::Next(double live) {
  if (rng_ == nullptr) {
    if (cursor_ >= log_.size()) throw InvalidUse("sample replay log exhausted");
    return log_[cursor_++];
  }
  log_.push_back(live);
  return live;
}

double SampleSource::Normal() { return Next(rng_ ? rng_->Normal() : 0.0); }

double SampleSource::Pin(double value) { return Next(value); }

bool SampleSource::Bernoulli(double p) {
  return Next(rng_ ? (rng_->Uniform() < p ? 1.0 : 0.0) : 0.0) != 0.0;
}

template <typename T>
int SampleSource::Categorical(std::span<const T> probs) {
  int pick = 0;
  if (rng_ != nullptr) {
    const double u = rng_->Uniform();
    double acc = 0.0;
    pick = static_cast<int>(probs.size()) - 1;
    for (size_t a = 0; a < probs.size(); ++a) {
      acc += static_cast<double>(probs[a]);
      if (u < acc) {
        pick = static_cast<int>(a);
        break;
      }
    }
  }
  return static_cast<int>(Next(pick));
}

template int SampleSource::Categorical<float>(std::span<const float>);
template int SampleSource::Categorical<double>(std::span<const double>);

// ---------------------------------------------------------------------------
// Gaussian heads

template <typename T>
GaussianHead<T> MakeGaussianHead(Tape<T>& tape, Var raw, int off_mean,
                                 int off_std, int d) {
  GaussianHead<T> h;
  h.mean = tape.Slice(raw, off_mean, d);
  h.std = tape.ClampMin(tape.Sigmoid(tape.Slice(raw, off_std, d)), static_cast<T>(kMinStd));
  return h;
}

template <typename T>
ContinuousSample<T> SampleGaussian(Tape<T>& tape, const GaussianHead<T>& head,
                                   SampleSource& source) {
  const Matrix<T>& mean = tape.Value(head.mean);
  const Matrix<T>& std = tape.Value(head.std);
  ContinuousSample<T> s;
  s.eps = Matrix<T>(mean.rows(), mean.cols());
  s.pre_squash = Matrix<T>(mean.rows(), mean.cols());
  for (size_t i = 0; i < mean.size(); ++i) {
    s.eps[i] = static_cast<T>(source.Normal());
    s.pre_squash[i] = static_cast<T>(source.Pin(mean[i] + std[i] * s.eps[i]));
  }
  s.log_prob = tape.GaussianLogProb(head.mean, head.std, s.pre_squash);
  s.squashed_mean = tape.Tanh(head.mean);
  return s;
}

template <typename T>
Var ContinuousMessage(Tape<T>& tape, const GaussianHead<T>& head,
                      const ContinuousSample<T>& sample, bool reparameterized) {
  if (reparameterized) {
    const Var noise = tape.Constant(sample.eps);
    return tape.Tanh(tape.Add(head.mean, tape.Mul(head.std, noise)));
  }
  Matrix<T> m = sample.pre_squash;
  for (size_t i = 0; i < m.size(); ++i) m[i] = std::tanh(m[i]);
  return tape.Constant(std::move(m));
}

// ---------------------------------------------------------------------------
// Negotiation

template <typename T>
NegotiationNet<T>::NegotiationNet(ParamStore<T>& store, const std::string& prefix,
                                  int obs_dim, int out_dim, int hidden, Rng& rng)
    : lstm_(store, prefix + ".lstm", obs_dim, hidden, rng),
      hidden_(store, prefix + ".fc", hidden, hidden, rng),
      out_(store, prefix + ".out", hidden, out_dim, rng) {}

template <typename T>
Var NegotiationNet<T>::Forward(Tape<T>& tape, Var obs, Core& core) const {
  core = lstm_.Step(tape, obs, core);
  return out_(tape, tape.LeakyRelu(hidden_(tape, core.h)));
}

template <typename T>
NegotiationHeads<T> SplitNegotiationHeads(Tape<T>& tape, Var raw, int items,
                                          int message_dim) {
  const int k = items, n = message_dim;
  if (tape.Value(raw).cols() != 2 * k + 2 * n + 1)
    throw InvalidInput("negotiation heads: raw width must be 2k + 2n + 1");
  NegotiationHeads<T> h;
  h.proposal = MakeGaussianHead(tape, raw, 0, k + n, k);
  h.message = MakeGaussianHead(tape, raw, k, 2 * k + n, n);
  h.accept_logit = tape.Slice(raw, 2 * k + 2 * n, 1);
  return h;
}

template <typename T>
NegotiationSample<T> SampleNegotiationAction(Tape<T>& tape,
                                             const NegotiationHeads<T>& heads,
                                             SampleSource& source,
                                             bool reparameterized) {
  NegotiationSample<T> out;
  const ContinuousSample<T> prop = SampleGaussian(tape, heads.proposal, source);
  const ContinuousSample<T> msg = SampleGaussian(tape, heads.message, source);
  const Matrix<T>& logit = tape.Value(heads.accept_logit);
  const int rows = logit.rows();
  Matrix<T> outcome(rows, 1);
  out.accept.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(logit[r])));
    out.accept[r] = source.Bernoulli(p) ? 1 : 0;
    outcome[r] = static_cast<T>(out.accept[r]);
  }
  out.proposal = prop.pre_squash;
  for (size_t i = 0; i < out.proposal.size(); ++i)
    out.proposal[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(out.proposal[i]))));
  out.message = ContinuousMessage(tape, heads.message, msg, reparameterized);
  out.message_value = tape.Value(out.message);
  out.message_mean = msg.squashed_mean;
  out.log_prob_action = tape.Add(prop.log_prob, tape.BernoulliLogProb(heads.accept_logit, outcome));
  out.log_prob_message = msg.log_prob;
  return out;
}

// ---------------------------------------------------------------------------
// Sequence Guess

SeqGuessNetConfig SeqGuessNetConfig::FromGame(const SeqGuessConfig& g, int hidden) {
  SeqGuessNetConfig c;
  c.alphabet = g.alphabet;
  c.length = g.length;
  c.max_turns = g.max_turns;
  c.message_length = g.message_length;
  c.message_dim = g.message_dim;
  c.hidden = hidden;
  c.kind = g.message_kind;
  return c;
}

template <typename T>
SymbolDecoder<T>::SymbolDecoder(ParamStore<T>& store, const std::string& prefix,
                                int alphabet, int width, int steps, Rng& rng)
    : lstm_(store, prefix + ".lstm", alphabet, width, rng),
      out_(store, prefix + ".out", width, alphabet, rng),
      alphabet_(alphabet),
      steps_(steps) {}

template <typename T>
SymbolSample<T> SymbolDecoder<T>::Decode(Tape<T>& tape, Var context,
                                         SampleSource& source) const {
  const int rows = tape.Value(context).rows();
  typename LstmLayer<T>::State state{context, tape.Constant(Matrix<T>(rows, lstm_.hidden()))};
  Var prev = tape.Constant(Matrix<T>(rows, alphabet_));
  std::vector<Var> logits, probs;
  std::vector<int> step_symbols(rows);
  SymbolSample<T> out;
  out.symbols.assign(static_cast<size_t>(rows) * steps_, 0);
  for (int s = 0; s < steps_; ++s) {
    state = lstm_.Step(tape, prev, state);
    logits.push_back(out_(tape, state.h));
    probs.push_back(tape.SoftmaxGroups(logits.back(), alphabet_));
    const Matrix<T>& p = tape.Value(probs.back());
    for (int r = 0; r < rows; ++r) {
      step_symbols[r] = source.Categorical(p.row(r));
      out.symbols[static_cast<size_t>(r) * steps_ + s] = step_symbols[r];
    }
    prev = tape.Constant(OneHotRows<T>(step_symbols, rows, 1, alphabet_));
  }
  out.logits = tape.Concat(logits);
  out.probs = tape.Concat(probs);
  out.log_prob = tape.CategoricalLogProb(out.logits, alphabet_, out.symbols);
  return out;
}

template <typename T>
Mastermind<T>::Mastermind(ParamStore<T>& store, const std::string& prefix,
                          const SeqGuessNetConfig& cfg, Rng& rng)
    : cfg_(cfg),
      encoder_(store, prefix + ".enc", 2 * cfg.alphabet, cfg.hidden, rng) {
  if (cfg.kind == MessageKind::kDiscrete) {
    decoder_ = SymbolDecoder<T>(store, prefix + ".dec", cfg.alphabet,
                                cfg.context_width(), cfg.message_length, rng);
  } else {
    head_hidden_ = DenseLayer<T>(store, prefix + ".fc", cfg.context_width(), cfg.hidden, rng);
    head_out_ = DenseLayer<T>(store, prefix + ".out", cfg.hidden, 2 * cfg.message_dim, rng);
  }
}

template <typename T>
Var Mastermind<T>::Context(Tape<T>& tape, std::span<const int> targets,
                           std::span<const int> guesses, int rows, int turn) const {
  const int k = cfg_.length, a = cfg_.alphabet;
  if (targets.size() != static_cast<size_t>(rows) * k || guesses.size() != targets.size())
    throw InvalidInput("mastermind: expected rows x k targets and guesses");
  auto state = encoder_.Zero(tape, rows);
  std::vector<int> pair(static_cast<size_t>(rows) * 2);
  for (int i = 0; i < k; ++i) {
    for (int r = 0; r < rows; ++r) {
      pair[2 * r] = targets[static_cast<size_t>(r) * k + i];
      pair[2 * r + 1] = guesses[static_cast<size_t>(r) * k + i];
    }
    state = encoder_.Step(tape, tape.Constant(OneHotRows<T>(pair, rows, 2, a)), state);
  }
  return tape.Concat({state.h, tape.Constant(RepeatedOneHot<T>(rows, cfg_.max_turns, turn))});
}

template <typename T>
SymbolSample<T> Mastermind<T>::DecodeSymbols(Tape<T>& tape, Var context,
                                             SampleSource& source) const {
  if (cfg_.kind != MessageKind::kDiscrete) throw InvalidUse("mastermind: not a discrete channel");
  return decoder_.Decode(tape, context, source);
}

template <typename T>
GaussianHead<T> Mastermind<T>::ContinuousHead(Tape<T>& tape, Var context) const {
  if (cfg_.kind != MessageKind::kContinuous) throw InvalidUse("mastermind: not a continuous channel");
  const Var raw = head_out_(tape, tape.Relu(head_hidden_(tape, context)));
  return MakeGaussianHead(tape, raw, 0, cfg_.message_dim, cfg_.message_dim);
}

template <typename T>
Guesser<T>::Guesser(ParamStore<T>& store, const std::string& prefix,
                    const SeqGuessNetConfig& cfg, Rng& rng)
    : cfg_(cfg) {
  if (cfg.kind == MessageKind::kDiscrete) {
    encoder_ = LstmLayer<T>(store, prefix + ".enc", cfg.alphabet, cfg.hidden, rng);
  } else {
    embed_ = DenseLayer<T>(store, prefix + ".embed", cfg.message_dim, cfg.hidden, rng);
  }
  decoder_ = SymbolDecoder<T>(store, prefix + ".dec", cfg.alphabet,
                              cfg.context_width(), cfg.length, rng);
}

template <typename T>
Var Guesser<T>::Context(Tape<T>& tape, Var message, int turn) const {
  const Matrix<T> m = tape.Value(message);
  const int rows = m.rows();
  const Var turn_hot = tape.Constant(RepeatedOneHot<T>(rows, cfg_.max_turns, turn));
  if (cfg_.kind == MessageKind::kContinuous) {
    if (m.cols() != cfg_.message_dim) throw InvalidInput("guesser: message width");
    return tape.Concat({tape.Tanh(embed_(tape, message)), turn_hot});
  }
  if (m.cols() != cfg_.message_length) throw InvalidInput("guesser: message length");
  auto state = encoder_.Zero(tape, rows);
  std::vector<int> sym(rows);
  for (int p = 0; p < cfg_.message_length; ++p) {
    for (int r = 0; r < rows; ++r) sym[r] = static_cast<int>(m(r, p));
    state = encoder_.Step(tape, tape.Constant(OneHotRows<T>(sym, rows, 1, cfg_.alphabet)), state);
  }
  return tape.Concat({state.h, turn_hot});
}

template <typename T>
SymbolSample<T> Guesser<T>::DecodeGuess(Tape<T>& tape, Var context,
                                        SampleSource& source) const {
  return decoder_.Decode(tape, context, source);
}

#define POSIG_INSTANTIATE(T)                                                         \
  template GaussianHead<T> MakeGaussianHead<T>(Tape<T>&, Var, int, int, int);        \
  template ContinuousSample<T> SampleGaussian<T>(Tape<T>&, const GaussianHead<T>&,   \
                                                 SampleSource&);                     \
  template Var ContinuousMessage<T>(Tape<T>&, const GaussianHead<T>&,                \
                                    const ContinuousSample<T>&, bool);               \
  template class NegotiationNet<T>;                                                  \
  template NegotiationHeads<T> SplitNegotiationHeads<T>(Tape<T>&, Var, int, int);    \
  template NegotiationSample<T> SampleNegotiationAction<T>(                          \
      Tape<T>&, const NegotiationHeads<T>&, SampleSource&, bool);                    \
  template class SymbolDecoder<T>;                                                   \
  template class Mastermind<T>;                                                      \
  template class Guesser<T>;

POSIG_INSTANTIATE(float)
POSIG_INSTANTIATE(double)
#undef POSIG_INSTANTIATE

}  // namespace posig
