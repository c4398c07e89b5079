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

// Policy and baseline networks for both games, with their sampling heads.
//
// Negotiation agent: obs -> LSTM -> dense + leaky ReLU -> dense(2k + 2n + 1).
// The raw output holds the proposal means, message means, proposal raw stds,
// message raw stds and the accept logit, in that order.
//
// Sequence Guess: the mastermind encodes (target, guess) symbol pairs with an
// LSTM; its context is the final hidden state with the one-hot turn appended.
// Discrete channels decode P symbols with an LSTM; continuous channels map
// the context through dense + ReLU + dense to a Gaussian head. The guesser
// builds the same kind of context from the message and decodes k guess
// symbols.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "posig/autodiff.hpp"
#include "posig/nn.hpp"
#include "posig/random.hpp"
#include "posig/seqguess_env.hpp"

namespace posig {

// Source of every random decision made while acting. A live source draws
// from an Rng and logs each outcome; a replay source hands back a previous
// log in order, so a rollout can be rebuilt exactly with other weights.
class SampleSource {
 public:
  explicit SampleSource(Rng& rng) : rng_(&rng) {}
  static SampleSource Replay(std::vector<double> log);

  double Normal();             // standard normal noise
  double Pin(double value);    // logs a value that later terms treat as fixed
  bool Bernoulli(double p);
  template <typename T>
  int Categorical(std::span<const T> probs);

  const std::vector<double>& log() const { return log_; }
  bool replaying() const { return rng_ == nullptr; }

 private:
  SampleSource() = default;
  double Next(double live);

  Rng* rng_ = nullptr;
  std::vector<double> log_;
  size_t cursor_ = 0;
};

inline constexpr double kMinStd = 1e-6;

template <typename T>
struct GaussianHead {
  Var mean;  // rows x d
  Var std;   // rows x d, sigmoid of the raw output, floored at kMinStd
};

template <typename T>
struct ContinuousSample {
  Matrix<T> eps;         // standard normal noise
  Matrix<T> pre_squash;  // the Gaussian sample y = mean + std * eps
  Var log_prob;          // rows x 1, log N(y; mean, std), no squashing Jacobian
  Var squashed_mean;     // tanh(mean)
};

// Gaussian head from a raw block: mean = raw[:, off_mean:+d],
// std = max(sigmoid(raw[:, off_std:+d]), kMinStd).
template <typename T>
GaussianHead<T> MakeGaussianHead(Tape<T>& tape, Var raw, int off_mean,
                                 int off_std, int d);

template <typename T>
ContinuousSample<T> SampleGaussian(Tape<T>& tape, const GaussianHead<T>& head,
                                   SampleSource& source);

// tanh(mean + std * eps): differentiable in the head when reparameterized,
// otherwise a constant equal to tanh(y).
template <typename T>
Var ContinuousMessage(Tape<T>& tape, const GaussianHead<T>& head,
                      const ContinuousSample<T>& sample, bool reparameterized);

// ---------------------------------------------------------------------------
// Negotiation

template <typename T>
struct NegotiationHeads {
  GaussianHead<T> proposal;
  GaussianHead<T> message;
  Var accept_logit;  // rows x 1
};

template <typename T>
struct NegotiationSample {
  Matrix<T> proposal;            // sigmoid(y1), rows x k
  Matrix<T> message_value;       // tanh(y2), rows x n
  Var message;                   // same values; differentiable when reparameterized
  Var message_mean;              // tanh(mean of the message head)
  std::vector<uint8_t> accept;
  Var log_prob_action;           // log N(y1) + log Bernoulli(accept)
  Var log_prob_message;          // log N(y2)
};

template <typename T>
class NegotiationNet {
 public:
  using Core = typename LstmLayer<T>::State;

  NegotiationNet() = default;
  // out_dim = 2k + 2n + 1 for an agent, 1 for the baseline.
  NegotiationNet(ParamStore<T>& store, const std::string& prefix, int obs_dim,
                 int out_dim, int hidden, Rng& rng);

  Core InitialCore(Tape<T>& tape, int rows) const { return lstm_.Zero(tape, rows); }
  Core GatherCore(Tape<T>& tape, const Core& c, std::span<const int> rows) const {
    return lstm_.Gather(tape, c, rows);
  }
  // Raw outputs; advances `core`.
  Var Forward(Tape<T>& tape, Var obs, Core& core) const;

  int obs_dim() const { return lstm_.input(); }
  int out_dim() const { return out_.out(); }

 private:
  LstmLayer<T> lstm_;
  DenseLayer<T> hidden_;
  DenseLayer<T> out_;
};

template <typename T>
NegotiationHeads<T> SplitNegotiationHeads(Tape<T>& tape, Var raw, int items,
                                          int message_dim);

// Draws y1, y2 and the accept bit. With `reparameterized` the message is
// tanh(mean + std * eps) on the tape so the receiver's loss reaches the
// sender's weights.
template <typename T>
NegotiationSample<T> SampleNegotiationAction(Tape<T>& tape,
                                             const NegotiationHeads<T>& heads,
                                             SampleSource& source,
                                             bool reparameterized);

// tanh of the single baseline output.
template <typename T>
Var BaselineValue(Tape<T>& tape, Var raw) { return tape.Tanh(raw); }

// ---------------------------------------------------------------------------
// Sequence Guess

struct SeqGuessNetConfig {
  int alphabet = 3;
  int length = 3;
  int max_turns = 3;
  int message_length = 3;
  int message_dim = 3;
  int hidden = 100;
  MessageKind kind = MessageKind::kContinuous;

  static SeqGuessNetConfig FromGame(const SeqGuessConfig& g, int hidden);
  int context_width() const { return hidden + max_turns; }
};

template <typename T>
struct SymbolSample {
  std::vector<int> symbols;  // rows x steps
  Var logits;                // rows x (steps * A)
  Var probs;                 // rows x (steps * A)
  Var log_prob;              // rows x 1, summed over steps
};

// Autoregressive symbol decoder: the initial hidden state is the context,
// each step reads the one-hot of the previous symbol (zeros at the start).
template <typename T>
class SymbolDecoder {
 public:
  SymbolDecoder() = default;
  SymbolDecoder(ParamStore<T>& store, const std::string& prefix, int alphabet,
                int width, int steps, Rng& rng);
  SymbolSample<T> Decode(Tape<T>& tape, Var context, SampleSource& source) const;

 private:
  LstmLayer<T> lstm_;
  DenseLayer<T> out_;
  int alphabet_ = 0;
  int steps_ = 0;
};

template <typename T>
class Mastermind {
 public:
  Mastermind() = default;
  Mastermind(ParamStore<T>& store, const std::string& prefix,
             const SeqGuessNetConfig& cfg, Rng& rng);

  // targets and guesses are rows x k symbols.
  Var Context(Tape<T>& tape, std::span<const int> targets,
              std::span<const int> guesses, int rows, int turn) const;
  // Discrete channel.
  SymbolSample<T> DecodeSymbols(Tape<T>& tape, Var context, SampleSource& source) const;
  // Continuous channel.
  GaussianHead<T> ContinuousHead(Tape<T>& tape, Var context) const;

  const SeqGuessNetConfig& config() const { return cfg_; }

 private:
  SeqGuessNetConfig cfg_;
  LstmLayer<T> encoder_;
  SymbolDecoder<T> decoder_;
  DenseLayer<T> head_hidden_;
  DenseLayer<T> head_out_;
};

template <typename T>
class Guesser {
 public:
  Guesser() = default;
  Guesser(ParamStore<T>& store, const std::string& prefix,
          const SeqGuessNetConfig& cfg, Rng& rng);

  // message: rows x P symbol indices (discrete) or rows x n values.
  Var Context(Tape<T>& tape, Var message, int turn) const;
  SymbolSample<T> DecodeGuess(Tape<T>& tape, Var context, SampleSource& source) const;

  const SeqGuessNetConfig& config() const { return cfg_; }

 private:
  SeqGuessNetConfig cfg_;
  LstmLayer<T> encoder_;     // discrete channel
  DenseLayer<T> embed_;      // continuous channel
  SymbolDecoder<T> decoder_;
};

}  // namespace posig
