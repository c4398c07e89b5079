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

// Episodic REINFORCE for both games.
//
// One iteration plays a batch of episodes on a single tape, assembles
//   action loss + compose(rc loss, ps loss, lambda_ib) [+ baseline MSE]
// and takes one optimizer step. Returns are terminal and undiscounted, so
// every turn of an episode uses the same advantage R - b.
//
// Randomness is derived from (seed, iteration): stream 2i draws the episode
// setups and stream 2i + 1 drives the policies, so an iteration can be rebuilt
// exactly from its index.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "posig/autodiff.hpp"
#include "posig/checkpoint.hpp"
#include "posig/negotiation_env.hpp"
#include "posig/optimizer.hpp"
#include "posig/policy_nets.hpp"
#include "posig/seqguess_env.hpp"
#include "posig/signaling_losses.hpp"

namespace posig {

struct TrainerConfig {
  bool rc_enabled = true;
  bool ps_enabled = true;
  bool interagent_gradients = false;
  // Receivers only ever see the initial message; message losses are off.
  bool channel_ablated = false;
  bool shared_agent_params = false;  // Negotiation only

  int batch_size = 2048;
  int64_t iterations = 50000;
  int hidden = 100;

  double lr = 1e-3;
  bool lr_drop = true;  // latched drop, Negotiation only
  double lr_after_threshold = 1e-4;
  double lr_threshold = 0.9;
  double clip_norm = 1.0;  // 0 disables
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;

  double lambda1 = 250.0;
  double lambda2 = 10.0;
  double lambda_ib = 1.0;
  double lambda_ps = 1.0;
  std::optional<double> h_target;  // discrete PS; default 0.1 ln A
  double baseline_momentum = 0.7;  // Sequence Guess moving average

  static TrainerConfig NegotiationDefaults();
  static TrainerConfig SeqGuessDefaults(MessageKind kind);

  // Throws InvalidInput naming the offending key.
  void Validate(bool continuous_messages) const;
  AdamConfig Optimizer() const;
};

nlohmann::json ToJson(const TrainerConfig& c);
nlohmann::json ToJson(const NegotiationConfig& c);
nlohmann::json ToJson(const SeqGuessConfig& c);

struct IterationStats {
  int64_t iteration = 0;
  double mean_return = 0.0;          // raw scale
  std::optional<double> shifted;     // Sequence Guess reporting scale
  double action_loss = 0.0;
  double rc_loss = 0.0;
  double ps_loss = 0.0;
  double baseline_loss = 0.0;        // Negotiation value regression
  double total_loss = 0.0;
  double grad_norm = 0.0;            // policy gradients, before clipping
  double lr = 0.0;
  double timeout_rate = 0.0;         // episodes ending at the turn limit without success
  double mean_turns = 0.0;
  double baseline = 0.0;             // Sequence Guess moving baseline used
  bool failed = false;
  std::string failure;
};

nlohmann::json ToJson(const IterationStats& s);
IterationStats IterationStatsFromJson(const nlohmann::json& j);

// 0.7 b + 0.3 G with the default momentum.
double MovingBaselineUpdate(double b, double g, double momentum = 0.7);

// Latched learning-rate drop: once an iteration's mean return reaches the
// threshold the rate stays at lr_after_threshold.
class LrSchedule {
 public:
  explicit LrSchedule(const TrainerConfig& cfg) : cfg_(cfg) {}
  double Update(double mean_return);
  double current() const { return dropped_ ? cfg_.lr_after_threshold : cfg_.lr; }
  bool dropped() const { return dropped_; }
  void set_dropped(bool d) { dropped_ = d; }

 private:
  TrainerConfig cfg_;
  bool dropped_ = false;
};

// -sum_i advantage_i * log_prob_i / normalizer; the advantages are constants.
template <typename T>
Var ReinforceTerm(Tape<T>& tape, Var log_probs, std::span<const double> advantages,
                  double normalizer);

// Detached quantities of one rollout. Recording them on a live pass and
// feeding them back on replays makes the loss a smooth function whose true
// gradient is the one the trainer applies, which is what gradient checks need.
template <typename T>
struct FrozenTerms {
  std::vector<Matrix<T>> baseline;      // per turn, Negotiation
  std::vector<Matrix<T>> ps_reference;  // per turn, continuous PS
};

struct LossTerms {
  std::optional<Var> action;
  std::optional<Var> rc;
  std::optional<Var> ps;
  std::optional<Var> baseline;
  std::optional<Var> comm;   // composed rc + lambda_ib * ps
  std::optional<Var> agent_action[2];  // Negotiation action loss split by agent
  Var total;
};

struct BatchOutcome {
  std::vector<double> returns;  // raw, one per episode
  std::vector<int> turns;       // moves (Negotiation) or guesses (Sequence Guess) played
  std::vector<uint8_t> timed_out;
  int entries = 0;              // valid (episode, turn) action entries
};

template <typename T>
struct Rollout {
  LossTerms loss;
  BatchOutcome outcome;
};

template <typename T = float>
class NegotiationTrainer {
 public:
  NegotiationTrainer(const NegotiationConfig& game, const TrainerConfig& cfg, uint64_t seed);

  IterationStats Step();

  // Builds the rollout and every loss term of `iteration` on `tape`.
  Rollout<T> BuildLoss(Tape<T>& tape, int64_t iteration, SampleSource& source,
                       const FrozenTerms<T>* frozen = nullptr,
                       FrozenTerms<T>* record = nullptr) const;
  static Rng EpisodeRng(uint64_t seed, int64_t iteration);
  static Rng PolicyRng(uint64_t seed, int64_t iteration);

  int64_t iteration() const { return iteration_; }
  uint64_t seed() const { return seed_; }
  double lr() const { return schedule_.current(); }
  bool lr_dropped() const { return schedule_.dropped(); }
  const TrainerConfig& config() const { return cfg_; }
  const NegotiationConfig& game() const { return game_; }

  ParamStore<T>& agent_params(Agent a);
  ParamStore<T>& baseline_params() { return base_store_; }
  int obs_dim() const { return game_.items + game_.message_dim + 1; }

  Checkpoint Save() const;
  // Throws InvalidInput when the checkpoint belongs to another configuration.
  void Load(const Checkpoint& ck);

  // Samples one episode with the current policy and records it.
  NegotiationTrace PlayEpisode(uint64_t episode_seed) const;

 private:
  Rollout<T> Run(Tape<T>& tape, int batch, Rng& env, SampleSource& source,
                 const FrozenTerms<T>* frozen, FrozenTerms<T>* record,
                 NegotiationTrace* trace) const;

  NegotiationConfig game_;
  TrainerConfig cfg_;
  uint64_t seed_;
  int64_t iteration_ = 0;
  LrSchedule schedule_;

  ParamStore<T> stores_[2];
  ParamStore<T> base_store_;
  NegotiationNet<T> nets_[2];
  NegotiationNet<T> base_;
  std::vector<Adam<T>> agent_opts_;
  Adam<T> base_opt_;
};

template <typename T = float>
class SeqGuessTrainer {
 public:
  SeqGuessTrainer(const SeqGuessConfig& game, const TrainerConfig& cfg, uint64_t seed);

  IterationStats Step();

  Rollout<T> BuildLoss(Tape<T>& tape, int64_t iteration, SampleSource& source,
                       const FrozenTerms<T>* frozen = nullptr,
                       FrozenTerms<T>* record = nullptr) const;
  static Rng EpisodeRng(uint64_t seed, int64_t iteration);
  static Rng PolicyRng(uint64_t seed, int64_t iteration);

  int64_t iteration() const { return iteration_; }
  uint64_t seed() const { return seed_; }
  double baseline() const { return baseline_; }
  void set_baseline(double b) { baseline_ = b; }
  const TrainerConfig& config() const { return cfg_; }
  const SeqGuessConfig& game() const { return game_; }

  ParamStore<T>& mastermind_params() { return mm_store_; }
  ParamStore<T>& guesser_params() { return g_store_; }

  Checkpoint Save() const;
  void Load(const Checkpoint& ck);

  SeqGuessTrace PlayEpisode(uint64_t episode_seed) const;

 private:
  Rollout<T> Run(Tape<T>& tape, int batch, Rng& env, SampleSource& source,
                 const FrozenTerms<T>* frozen, FrozenTerms<T>* record,
                 SeqGuessTrace* trace) const;

  SeqGuessConfig game_;
  TrainerConfig cfg_;
  SeqGuessNetConfig net_cfg_;
  uint64_t seed_;
  int64_t iteration_ = 0;
  double baseline_ = 0.0;

  ParamStore<T> mm_store_;
  ParamStore<T> g_store_;
  Mastermind<T> mm_;
  Guesser<T> guesser_;
  std::vector<Adam<T>> opts_;
};

extern template class NegotiationTrainer<float>;
extern template class NegotiationTrainer<double>;
extern template class SeqGuessTrainer<float>;
extern template class SeqGuessTrainer<double>;

}  // namespace posig
