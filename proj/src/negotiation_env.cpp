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

#include "posig/negotiation_env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "posig/errors.hpp"
#include "trace_io.hpp"

namespace posig {

namespace {

constexpr const char* kGame = "negotiation";

void CheckFinite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite value");
}

}  // namespace

void NegotiationConfig::Validate() const {
  if (items < 1) throw InvalidInput("negotiation.items must be >= 1");
  if (message_dim < 1) throw InvalidInput("negotiation.message_dim must be >= 1");
  if (max_turns < 2) throw InvalidInput("negotiation.max_turns must be >= 2");
  if (!std::isfinite(punishment)) throw InvalidInput("negotiation.punishment must be finite");
}

const char* AgentName(Agent a) { return a == Agent::kA ? "A" : "B"; }

NegotiationState ResetNegotiation(const NegotiationConfig& cfg, Rng& rng) {
  cfg.Validate();
  NegotiationState s;
  s.u_a.resize(cfg.items);
  s.u_b.resize(cfg.items);
  for (double& u : s.u_a) u = rng.UniformOpen();
  for (double& u : s.u_b) u = rng.UniformOpen();
  s.last_message = TorusMessage::Wrap(std::vector<double>(cfg.message_dim, 0.0));
  return s;
}

double IndividualReward(std::span<const double> p, std::span<const double> u) {
  if (p.size() != u.size()) throw InvalidInput("individual reward: size mismatch");
  double r = 0.0;
  for (size_t i = 0; i < p.size(); ++i) r += p[i] * u[i];
  return r;
}

double SharedReward(std::span<const double> p_proposer,
                    std::span<const double> u_proposer,
                    std::span<const double> u_acceptor) {
  const size_t k = p_proposer.size();
  if (u_proposer.size() != k || u_acceptor.size() != k)
    throw InvalidInput("shared reward: size mismatch");
  double r_prop = 0.0, r_acc = 0.0, r_max = 0.0;
  for (size_t i = 0; i < k; ++i) {
    r_prop += p_proposer[i] * u_proposer[i];
    r_acc += (1.0 - p_proposer[i]) * u_acceptor[i];
    r_max += std::max(u_proposer[i], u_acceptor[i]);
  }
  if (!(r_max > 0.0)) throw InvalidInput("shared reward: utilities must be positive");
  return (r_prop + r_acc) / r_max;
}

NegotiationStep StepNegotiation(const NegotiationConfig& cfg,
                                const NegotiationState& state,
                                const NegotiationAction& action) {
  if (state.terminated()) throw InvalidUse("negotiation: step on a finished game");
  if (static_cast<int>(action.proposal.size()) != cfg.items)
    throw InvalidInput("negotiation: proposal has the wrong size");
  if (static_cast<int>(action.message.size()) != cfg.message_dim)
    throw InvalidInput("negotiation: message has the wrong size");
  CheckFinite(action.proposal, "negotiation proposal");
  CheckFinite(action.message, "negotiation message");
  for (double p : action.proposal)
    if (p < 0.0 || p > 1.0) throw InvalidInput("negotiation: proposal outside [0, 1]");

  NegotiationStep out{state, std::nullopt};
  NegotiationState& s = out.state;
  if (action.accept && state.turn >= 1) {
    const Agent proposer = Partner(state.active);
    s.outcome = NegotiationOutcome::kAgreement;
    out.reward = SharedReward(*state.last_proposal, state.utilities(proposer),
                              state.utilities(state.active));
    return out;
  }
  s.last_proposal = action.proposal;
  s.last_message = TorusMessage::Wrap(action.message);
  s.active = Partner(state.active);
  s.turn = state.turn + 1;
  if (s.turn >= cfg.max_turns) {
    s.outcome = NegotiationOutcome::kTimeout;
    out.reward = cfg.punishment;
  }
  return out;
}

std::vector<double> NegotiationObservation(const NegotiationConfig& cfg,
                                           const NegotiationState& state,
                                           Agent agent) {
  std::vector<double> obs;
  obs.reserve(cfg.items + cfg.message_dim + 1);
  const auto& u = state.utilities(agent);
  obs.insert(obs.end(), u.begin(), u.end());
  const auto m = state.last_message.components();
  obs.insert(obs.end(), m.begin(), m.end());
  obs.push_back(static_cast<double>(state.turn) / cfg.max_turns);
  return obs;
}

void WriteNegotiationTrace(std::ostream& out, const NegotiationTrace& trace) {
  nlohmann::json header = {
      {"game", kGame},
      {"items", trace.config.items},
      {"message_dim", trace.config.message_dim},
      {"max_turns", trace.config.max_turns},
      {"punishment", trace.config.punishment},
      {"u_a", trace.u_a},
      {"u_b", trace.u_b},
  };
  trace_io::WriteHeader(out, header);
  for (const auto& t : trace.turns) {
    nlohmann::json line = {
        {"turn", t.turn},
        {"agent", AgentName(t.agent)},
        {"proposal", t.proposal},
        {"message", t.message},
        {"accept", t.accept},
        {"reward", t.reward ? nlohmann::json(*t.reward) : nlohmann::json(nullptr)},
    };
    out << line.dump() << '\n';
  }
}

NegotiationTrace ReadNegotiationTrace(std::istream& in) {
  const trace_io::Lines lines = trace_io::ReadLines(in, kGame);
  NegotiationTrace trace;
  try {
    const auto& h = lines.header;
    trace.config.items = h.at("items").get<int>();
    trace.config.message_dim = h.at("message_dim").get<int>();
    trace.config.max_turns = h.at("max_turns").get<int>();
    trace.config.punishment = h.at("punishment").get<double>();
    trace.u_a = h.at("u_a").get<std::vector<double>>();
    trace.u_b = h.at("u_b").get<std::vector<double>>();
    for (const auto& j : lines.body) {
      NegotiationTurnRecord t;
      t.turn = j.at("turn").get<int>();
      const std::string agent = j.at("agent").get<std::string>();
      if (agent != "A" && agent != "B") throw InvalidInput("trace: unknown agent " + agent);
      t.agent = agent == "A" ? Agent::kA : Agent::kB;
      t.proposal = j.at("proposal").get<std::vector<double>>();
      t.message = j.at("message").get<std::vector<double>>();
      t.accept = j.at("accept").get<bool>();
      if (!j.at("reward").is_null()) t.reward = j.at("reward").get<double>();
      trace.turns.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("negotiation trace: ") + e.what());
  }
  trace.config.Validate();
  if (trace.turns.empty()) throw InvalidInput("negotiation trace: no turns");
  return trace;
}

double ReplayNegotiationReward(const NegotiationTrace& trace) {
  NegotiationState s;
  s.u_a = trace.u_a;
  s.u_b = trace.u_b;
  s.last_message = TorusMessage::Wrap(std::vector<double>(trace.config.message_dim, 0.0));
  for (const auto& t : trace.turns) {
    if (t.agent != s.active || t.turn != s.turn)
      throw InvalidInput("negotiation trace: moves out of order");
    NegotiationStep step = StepNegotiation(trace.config, s, {t.proposal, t.message, t.accept});
    if (step.reward) return *step.reward;
    s = std::move(step.state);
  }
  throw InvalidInput("negotiation trace: game does not end");
}

}  // namespace posig
