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

#include "posig/seqguess_env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "posig/errors.hpp"
#include "trace_io.hpp"

namespace posig {

namespace {

constexpr const char* kGame = "seqguess";

void CheckSequence(const SeqGuessConfig& cfg, std::span<const int> seq,
                   const char* what) {
  if (static_cast<int>(seq.size()) != cfg.length)
    throw InvalidInput(std::string(what) + ": wrong length");
  for (int s : seq)
    if (s < 0 || s >= cfg.alphabet)
      throw InvalidInput(std::string(what) + ": symbol outside the alphabet");
}

}  // namespace

const char* MessageKindName(MessageKind k) {
  return k == MessageKind::kDiscrete ? "discrete" : "continuous";
}

MessageKind ParseMessageKind(const std::string& s) {
  if (s == "discrete") return MessageKind::kDiscrete;
  if (s == "continuous") return MessageKind::kContinuous;
  throw InvalidInput("message kind must be discrete or continuous, got '" + s + "'");
}

void SeqGuessConfig::Validate() const {
  if (alphabet < 2) throw InvalidInput("seqguess.alphabet must be >= 2");
  if (length < 1) throw InvalidInput("seqguess.length must be >= 1");
  if (max_turns < 1) throw InvalidInput("seqguess.max_turns must be >= 1");
  if (message_length < 1) throw InvalidInput("seqguess.message_length must be >= 1");
  if (message_dim < 1) throw InvalidInput("seqguess.message_dim must be >= 1");
  if (!(time_penalty >= 0.0) || !std::isfinite(time_penalty))
    throw InvalidInput("seqguess.time_penalty must be finite and >= 0");
  if (std::pow(static_cast<double>(alphabet), length) > 1e9)
    throw InvalidInput("seqguess: alphabet^length too large");
}

std::vector<double> InitialSeqGuessMessage(const SeqGuessConfig& cfg) {
  return std::vector<double>(cfg.MessageWidth(), 0.0);
}

SeqGuessState ResetSeqGuess(const SeqGuessConfig& cfg, Rng& rng) {
  cfg.Validate();
  SeqGuessState s;
  s.target.resize(cfg.length);
  for (int& a : s.target) a = rng.UniformInt(cfg.alphabet);
  s.last_message = InitialSeqGuessMessage(cfg);
  return s;
}

double SeqGuessReward(const SeqGuessConfig& cfg, int turn,
                      std::span<const int> guess, std::span<const int> target) {
  if (guess.size() != target.size()) throw InvalidInput("seqguess reward: size mismatch");
  int matches = 0;
  for (size_t i = 0; i < guess.size(); ++i) matches += guess[i] == target[i];
  return -cfg.time_penalty * turn + static_cast<double>(matches) / guess.size();
}

double ReportingShift(const SeqGuessConfig& cfg) {
  const double q = std::pow(static_cast<double>(cfg.alphabet), -cfg.length);
  return 1.0 - (q + (1.0 - q) * (1.0 - cfg.time_penalty));
}

SeqGuessStep StepGuess(const SeqGuessConfig& cfg, const SeqGuessState& state,
                       std::span<const int> guess) {
  if (state.phase != SeqGuessPhase::kGuess)
    throw InvalidUse("seqguess: guess outside the guess phase");
  CheckSequence(cfg, guess, "seqguess guess");
  SeqGuessStep out{state, std::nullopt};
  out.state.last_guess = std::vector<int>(guess.begin(), guess.end());
  const bool exact = std::equal(guess.begin(), guess.end(), state.target.begin());
  if (exact || state.turn >= cfg.max_turns - 1) {
    out.state.phase = SeqGuessPhase::kDone;
    out.reward = SeqGuessReward(cfg, state.turn, guess, state.target);
  } else {
    out.state.phase = SeqGuessPhase::kReply;
  }
  return out;
}

SeqGuessState StepReply(const SeqGuessConfig& cfg, const SeqGuessState& state,
                        std::span<const double> message) {
  if (state.phase != SeqGuessPhase::kReply)
    throw InvalidUse("seqguess: reply outside the reply phase");
  if (static_cast<int>(message.size()) != cfg.MessageWidth())
    throw InvalidInput("seqguess reply: wrong message width");
  for (double m : message) {
    if (!std::isfinite(m)) throw InvalidInput("seqguess reply: non-finite message");
    if (cfg.message_kind == MessageKind::kDiscrete &&
        (m != std::floor(m) || m < 0 || m >= cfg.alphabet))
      throw InvalidInput("seqguess reply: invalid symbol");
  }
  SeqGuessState s = state;
  s.last_message.assign(message.begin(), message.end());
  s.turn = state.turn + 1;
  s.phase = SeqGuessPhase::kGuess;
  return s;
}

int SequenceIndex(std::span<const int> seq, int alphabet) {
  int idx = 0;
  for (int s : seq) idx = idx * alphabet + s;
  return idx;
}

std::vector<int> SequenceFromIndex(int index, int length, int alphabet) {
  std::vector<int> seq(length);
  for (int i = length - 1; i >= 0; --i) {
    seq[i] = index % alphabet;
    index /= alphabet;
  }
  return seq;
}

void WriteSeqGuessTrace(std::ostream& out, const SeqGuessTrace& trace) {
  const SeqGuessConfig& c = trace.config;
  trace_io::WriteHeader(out, {
      {"game", kGame},
      {"alphabet", c.alphabet},
      {"length", c.length},
      {"max_turns", c.max_turns},
      {"message_kind", MessageKindName(c.message_kind)},
      {"message_length", c.message_length},
      {"message_dim", c.message_dim},
      {"time_penalty", c.time_penalty},
      {"target", trace.target},
  });
  for (const auto& t : trace.turns) {
    nlohmann::json line = {{"turn", t.turn}};
    if (t.is_guess) {
      line["role"] = "guesser";
      line["guess"] = t.guess;
      line["reward"] = t.reward ? nlohmann::json(*t.reward) : nlohmann::json(nullptr);
    } else {
      line["role"] = "mastermind";
      line["message"] = t.message;
    }
    out << line.dump() << '\n';
  }
}

SeqGuessTrace ReadSeqGuessTrace(std::istream& in) {
  const trace_io::Lines lines = trace_io::ReadLines(in, kGame);
  SeqGuessTrace trace;
  try {
    const auto& h = lines.header;
    SeqGuessConfig& c = trace.config;
    c.alphabet = h.at("alphabet").get<int>();
    c.length = h.at("length").get<int>();
    c.max_turns = h.at("max_turns").get<int>();
    c.message_kind = ParseMessageKind(h.at("message_kind").get<std::string>());
    c.message_length = h.at("message_length").get<int>();
    c.message_dim = h.at("message_dim").get<int>();
    c.time_penalty = h.at("time_penalty").get<double>();
    trace.target = h.at("target").get<std::vector<int>>();
    for (const auto& j : lines.body) {
      SeqGuessTurnRecord t;
      t.turn = j.at("turn").get<int>();
      const std::string role = j.at("role").get<std::string>();
      if (role == "guesser") {
        t.guess = j.at("guess").get<std::vector<int>>();
        if (!j.at("reward").is_null()) t.reward = j.at("reward").get<double>();
      } else if (role == "mastermind") {
        t.is_guess = false;
        t.message = j.at("message").get<std::vector<double>>();
      } else {
        throw InvalidInput("seqguess trace: unknown role " + role);
      }
      trace.turns.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("seqguess trace: ") + e.what());
  }
  trace.config.Validate();
  CheckSequence(trace.config, trace.target, "seqguess trace target");
  if (trace.turns.empty()) throw InvalidInput("seqguess trace: no turns");
  return trace;
}

double ReplaySeqGuessReward(const SeqGuessTrace& trace) {
  SeqGuessState s;
  s.target = trace.target;
  s.last_message = InitialSeqGuessMessage(trace.config);
  for (const auto& t : trace.turns) {
    if (t.turn != s.turn) throw InvalidInput("seqguess trace: turns out of order");
    if (t.is_guess) {
      SeqGuessStep step = StepGuess(trace.config, s, t.guess);
      if (step.reward) return *step.reward;
      s = std::move(step.state);
    } else {
      s = StepReply(trace.config, s, t.message);
    }
  }
  throw InvalidInput("seqguess trace: game does not end");
}

std::string PeekTraceGame(std::istream& in) { return trace_io::PeekGame(in); }

}  // namespace posig
