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

// Two agents with private item utilities alternate moves. A move is a
// proposal (the fraction of each item the mover keeps), a message, and an
// accept bit. Accepting ends the game with a shared reward computed from the
// partner's standing proposal; running out of moves costs both agents -1.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "posig/random.hpp"
#include "posig/torus.hpp"

namespace posig {

struct NegotiationConfig {
  int items = 3;          // k
  int message_dim = 3;    // n
  int max_turns = 6;      // T, counted in single moves
  double punishment = -1.0;

  void Validate() const;
};

enum class Agent { kA = 0, kB = 1 };
inline Agent Partner(Agent a) { return a == Agent::kA ? Agent::kB : Agent::kA; }
const char* AgentName(Agent a);

enum class NegotiationOutcome { kInProgress, kAgreement, kTimeout };

struct NegotiationState {
  std::vector<double> u_a;
  std::vector<double> u_b;
  int turn = 0;
  Agent active = Agent::kA;
  // Fraction of each item kept by the agent who made the last move.
  std::optional<std::vector<double>> last_proposal;
  TorusMessage last_message;
  NegotiationOutcome outcome = NegotiationOutcome::kInProgress;

  bool terminated() const { return outcome != NegotiationOutcome::kInProgress; }
  const std::vector<double>& utilities(Agent a) const {
    return a == Agent::kA ? u_a : u_b;
  }
};

struct NegotiationAction {
  std::vector<double> proposal;  // in [0, 1]^k
  std::vector<double> message;   // in (-1, 1)^n
  bool accept = false;
};

struct NegotiationStep {
  NegotiationState state;
  std::optional<double> reward;  // set exactly when the game ends
};

NegotiationState ResetNegotiation(const NegotiationConfig& cfg, Rng& rng);

// Throws InvalidUse on a terminated state and InvalidInput on malformed
// actions (wrong sizes, proposal outside [0, 1], non-finite values).
NegotiationStep StepNegotiation(const NegotiationConfig& cfg,
                                const NegotiationState& state,
                                const NegotiationAction& action);

// sum_i p_i * u_i.
double IndividualReward(std::span<const double> p, std::span<const double> u);

// (r_proposer + r_acceptor) / sum_i max(u_proposer_i, u_acceptor_i), where the
// acceptor receives 1 - p.
double SharedReward(std::span<const double> p_proposer,
                    std::span<const double> u_proposer,
                    std::span<const double> u_acceptor);

// [own utilities, last message, t / T].
std::vector<double> NegotiationObservation(const NegotiationConfig& cfg,
                                           const NegotiationState& state,
                                           Agent agent);

// Line-delimited episode trace: a header line with the configuration and
// utilities, then one line per move.
struct NegotiationTurnRecord {
  int turn = 0;
  Agent agent = Agent::kA;
  std::vector<double> proposal;
  std::vector<double> message;
  bool accept = false;
  std::optional<double> reward;
};

struct NegotiationTrace {
  NegotiationConfig config;
  std::vector<double> u_a;
  std::vector<double> u_b;
  std::vector<NegotiationTurnRecord> turns;
};

void WriteNegotiationTrace(std::ostream& out, const NegotiationTrace& trace);
// Throws InvalidInput on malformed or empty traces.
NegotiationTrace ReadNegotiationTrace(std::istream& in);

// Replays the recorded moves through the environment and returns the reward
// the environment assigns. Throws InvalidInput if the trace does not end the
// game.
double ReplayNegotiationReward(const NegotiationTrace& trace);

}  // namespace posig
