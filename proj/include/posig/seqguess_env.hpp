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

// Sequence Guess: a guesser tries to name a hidden target sequence. After
// each wrong guess the mastermind, who sees the target, replies with a
// message. The game ends on an exact match or after the guess at turn T - 1.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posig/random.hpp"

namespace posig {

enum class MessageKind { kDiscrete, kContinuous };
const char* MessageKindName(MessageKind k);
// Throws InvalidInput for anything but "discrete" / "continuous".
MessageKind ParseMessageKind(const std::string& s);

struct SeqGuessConfig {
  int alphabet = 3;        // A
  int length = 3;          // k
  int max_turns = 3;       // T
  MessageKind message_kind = MessageKind::kContinuous;
  int message_length = 3;  // P, discrete symbols per message
  int message_dim = 3;     // n, continuous components
  double time_penalty = 0.1;

  void Validate() const;
  // Width of one message on the wire: P symbols or n reals.
  int MessageWidth() const {
    return message_kind == MessageKind::kDiscrete ? message_length : message_dim;
  }
};

enum class SeqGuessPhase { kGuess, kReply, kDone };

struct SeqGuessState {
  std::vector<int> target;
  int turn = 0;
  SeqGuessPhase phase = SeqGuessPhase::kGuess;
  std::optional<std::vector<int>> last_guess;
  // Discrete messages hold symbol indices as exact small integers.
  std::vector<double> last_message;

  bool terminated() const { return phase == SeqGuessPhase::kDone; }
};

struct SeqGuessStep {
  SeqGuessState state;
  std::optional<double> reward;
};

SeqGuessState ResetSeqGuess(const SeqGuessConfig& cfg, Rng& rng);
// The all-zeros message (symbol 0 repeated for discrete channels).
std::vector<double> InitialSeqGuessMessage(const SeqGuessConfig& cfg);

// Ends the game on an exact match or at turn T - 1. Throws InvalidUse outside
// the guess phase and InvalidInput on malformed guesses.
SeqGuessStep StepGuess(const SeqGuessConfig& cfg, const SeqGuessState& state,
                       std::span<const int> guess);
// Stores the mastermind's reply and advances the turn.
SeqGuessState StepReply(const SeqGuessConfig& cfg, const SeqGuessState& state,
                        std::span<const double> message);

// -penalty * t + (matching positions) / k.
double SeqGuessReward(const SeqGuessConfig& cfg, int turn,
                      std::span<const int> guess, std::span<const int> target);

// Reporting shift s = 1 - (q + (1 - q) * (1 - penalty)), q = A^-k, which
// puts the optimal expected return at 1.
double ReportingShift(const SeqGuessConfig& cfg);
inline double ShiftedReturn(double r, const SeqGuessConfig& cfg) {
  return r + ReportingShift(cfg);
}

// Index of a sequence in [0, A^k) and back, first symbol most significant.
int SequenceIndex(std::span<const int> seq, int alphabet);
std::vector<int> SequenceFromIndex(int index, int length, int alphabet);

struct SeqGuessTurnRecord {
  int turn = 0;
  bool is_guess = true;
  std::vector<int> guess;
  std::vector<double> message;
  std::optional<double> reward;
};

struct SeqGuessTrace {
  SeqGuessConfig config;
  std::vector<int> target;
  std::vector<SeqGuessTurnRecord> turns;
};

void WriteSeqGuessTrace(std::ostream& out, const SeqGuessTrace& trace);
SeqGuessTrace ReadSeqGuessTrace(std::istream& in);
double ReplaySeqGuessReward(const SeqGuessTrace& trace);

// Game name recorded in a trace header ("negotiation" or "seqguess").
std::string PeekTraceGame(std::istream& in);

}  // namespace posig
