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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "posig/errors.hpp"
#include "posig/seqguess_env.hpp"

namespace posig {
namespace {

const SeqGuessConfig kCfg;

SeqGuessState WithTarget(std::vector<int> target) {
  Rng rng(0);
  SeqGuessState s = ResetSeqGuess(kCfg, rng);
  s.target = std::move(target);
  return s;
}

TEST_CASE("reset") {
  Rng a(1), b(1);
  CHECK(ResetSeqGuess(kCfg, a).target == ResetSeqGuess(kCfg, b).target);
  Rng rng(2);
  std::vector<int> counts(27, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const SeqGuessState s = ResetSeqGuess(kCfg, rng);
    CHECK(s.turn == 0);
    ++counts[SequenceIndex(s.target, 3)];
  }
  for (int c : counts) CHECK(std::fabs(double(c) / n - 1.0 / 27) < 0.005);
  // The guesser's first view is the constant message for every target.
  Rng r2(3);
  const SeqGuessState s1 = ResetSeqGuess(kCfg, r2);
  const SeqGuessState s2 = ResetSeqGuess(kCfg, r2);
  CHECK(s1.last_message == s2.last_message);
  CHECK(s1.last_message == std::vector<double>(3, 0.0));
}

TEST_CASE("rewards") {
  const std::vector<int> target = {0, 1, 2};
  CHECK(SeqGuessReward(kCfg, 0, target, target) == 1.0);
  CHECK(SeqGuessReward(kCfg, 1, target, target) == 0.9);
  CHECK(SeqGuessReward(kCfg, 2, std::vector<int>{0, 1, 0}, target) ==
        doctest::Approx(-0.2 + 2.0 / 3).epsilon(1e-12));
  CHECK(std::fabs(ReportingShift(kCfg) - (1.0 - (1.0 / 27 + 0.9 * 26.0 / 27))) < 1e-12);
  CHECK(ShiftedReturn(1.0, kCfg) == doctest::Approx(1.0963).epsilon(1e-4));
  CHECK(ShiftedReturn(0.9, kCfg) == doctest::Approx(0.9963).epsilon(1e-4));
  // Optimal play: guess blind, then read the reply and win at t = 1.
  const double q = 1.0 / 27;
  CHECK(q * ShiftedReturn(1.0, kCfg) + (1 - q) * ShiftedReturn(0.9, kCfg) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("step guess and reply") {
  SUBCASE("correct first guess") {
    auto r = StepGuess(kCfg, WithTarget({2, 2, 1}), std::vector<int>{2, 2, 1});
    REQUIRE(r.reward.has_value());
    CHECK(*r.reward == 1.0);
    CHECK(r.state.terminated());
  }
  SUBCASE("correct at t = 1") {
    auto r = StepGuess(kCfg, WithTarget({2, 2, 1}), std::vector<int>{0, 0, 0});
    CHECK_FALSE(r.reward.has_value());
    CHECK(r.state.phase == SeqGuessPhase::kReply);
    CHECK_THROWS_AS(StepGuess(kCfg, r.state, std::vector<int>{0, 0, 0}), InvalidUse);
    const std::vector<double> msg = {0.25, -0.5, 0.75};
    SeqGuessState s = StepReply(kCfg, r.state, msg);
    CHECK(s.turn == 1);
    CHECK(s.last_message == msg);
    CHECK(s.target == std::vector<int>{2, 2, 1});
    auto r2 = StepGuess(kCfg, s, std::vector<int>{2, 2, 1});
    REQUIRE(r2.reward.has_value());
    CHECK(*r2.reward == 0.9);
  }
  SUBCASE("forced termination at t = T - 1") {
    SeqGuessState s = WithTarget({0, 1, 2});
    for (int t = 0; t < 2; ++t) {
      auto r = StepGuess(kCfg, s, std::vector<int>{1, 1, 1});
      CHECK_FALSE(r.reward.has_value());
      s = StepReply(kCfg, r.state, std::vector<double>{0, 0, 0});
    }
    auto r = StepGuess(kCfg, s, std::vector<int>{0, 1, 0});
    REQUIRE(r.reward.has_value());
    CHECK(*r.reward == doctest::Approx(0.4667).epsilon(1e-4));
  }
  SUBCASE("errors") {
    SeqGuessState s = WithTarget({0, 1, 2});
    CHECK_THROWS_AS(StepGuess(kCfg, s, std::vector<int>{0, 1}), InvalidInput);
    CHECK_THROWS_AS(StepGuess(kCfg, s, std::vector<int>{0, 1, 3}), InvalidInput);
    CHECK_THROWS_AS(StepReply(kCfg, s, std::vector<double>{0, 0, 0}), InvalidUse);
    SeqGuessConfig dm = kCfg;
    dm.message_kind = MessageKind::kDiscrete;
    auto r = StepGuess(dm, s, std::vector<int>{0, 0, 0});
    CHECK_THROWS_AS(StepReply(dm, r.state, std::vector<double>{0.5, 0, 0}), InvalidInput);
    CHECK_NOTHROW(StepReply(dm, r.state, std::vector<double>{2, 0, 1}));
  }
}

TEST_CASE("reward range and episode length under random play") {
  Rng rng(9);
  for (int ep = 0; ep < 5000; ++ep) {
    SeqGuessState s = ResetSeqGuess(kCfg, rng);
    int guesses = 0, rewards = 0;
    double reward = 0.0;
    while (!s.terminated()) {
      std::vector<int> g = {rng.UniformInt(3), rng.UniformInt(3), rng.UniformInt(3)};
      auto r = StepGuess(kCfg, s, g);
      ++guesses;
      if (r.reward) {
        ++rewards;
        reward = *r.reward;
        s = r.state;
      } else {
        s = StepReply(kCfg, r.state, std::vector<double>{0, 0, 0});
      }
    }
    CHECK(guesses <= kCfg.max_turns);
    CHECK(rewards == 1);
    CHECK(reward >= -0.1 * kCfg.max_turns);
    CHECK(reward <= 1.0);
    if (reward == 1.0) CHECK(guesses == 1);
  }
}

// Exhaustive search over deterministic no-communication guessers: with a
// constant channel the guesser's policy is a guess per turn.
double BestBlindSchedule(const SeqGuessConfig& cfg) {
  const int n = 27;
  double best = -1e9;
  for (int g0 = 0; g0 < n; ++g0)
    for (int g1 = 0; g1 < n; ++g1)
      for (int g2 = 0; g2 < n; ++g2) {
        const int sched[3] = {g0, g1, g2};
        double total = 0.0;
        for (int target = 0; target < n; ++target) {
          const auto tv = SequenceFromIndex(target, 3, 3);
          SeqGuessState s = WithTarget(tv);
          for (int t = 0;; ++t) {
            auto r = StepGuess(cfg, s, SequenceFromIndex(sched[t], 3, 3));
            if (r.reward) {
              total += *r.reward;
              break;
            }
            s = StepReply(cfg, r.state, std::vector<double>{0, 0, 0});
          }
        }
        best = std::max(best, total / n);
      }
  return best;
}

TEST_CASE("no-communication optimum") {
  const double best = BestBlindSchedule(kCfg);
  // Two distinct blind guesses, then a last guess sharing no symbol with
  // either: 1 + 0.9 + (9 - 0.2 * 25) over 27 targets.
  CHECK(best == doctest::Approx(5.9 / 27).epsilon(1e-12));
  // Strictly below the communicating optimum on either scale.
  const double q = 1.0 / 27;
  CHECK(best < q * 1.0 + (1 - q) * 0.9);
  CHECK(ShiftedReturn(best, kCfg) < 1.0);
}

TEST_CASE("sequence indexing") {
  for (int i = 0; i < 27; ++i) CHECK(SequenceIndex(SequenceFromIndex(i, 3, 3), 3) == i);
  CHECK(SequenceFromIndex(5, 3, 3) == std::vector<int>{0, 1, 2});
}

TEST_CASE("trace round trip and replay") {
  SeqGuessTrace trace;
  trace.target = {1, 0, 2};
  trace.turns.push_back({0, true, {0, 0, 0}, {}, std::nullopt});
  trace.turns.push_back({0, false, {}, {0.5, -0.25, 0.125}, std::nullopt});
  trace.turns.push_back({1, true, {1, 0, 2}, {}, 0.9});
  std::stringstream ss;
  WriteSeqGuessTrace(ss, trace);
  std::stringstream peek(ss.str());
  CHECK(PeekTraceGame(peek) == "seqguess");
  const SeqGuessTrace back = ReadSeqGuessTrace(ss);
  REQUIRE(back.turns.size() == 3);
  CHECK(back.turns[1].message == trace.turns[1].message);
  CHECK(ReplaySeqGuessReward(back) == 0.9);

  std::stringstream wrong("{\"format\":\"posig-trace\",\"version\":2,\"game\":\"seqguess\"}\n");
  CHECK_THROWS_AS(ReadSeqGuessTrace(wrong), InvalidInput);
}

}  // namespace
}  // namespace posig
