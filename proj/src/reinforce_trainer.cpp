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

#include "posig/reinforce_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "posig/errors.hpp"

namespace posig {

namespace {

// Index of every element of `sub` inside `super`; both sorted ascending.
std::vector<int> Positions(const std::vector<int>& sub, const std::vector<int>& super) {
  std::vector<int> pos;
  pos.reserve(sub.size());
  size_t j = 0;
  for (int e : sub) {
    while (j < super.size() && super[j] < e) ++j;
    if (j == super.size() || super[j] != e) throw InvalidUse("rollout: row bookkeeping broken");
    pos.push_back(static_cast<int>(j));
  }
  return pos;
}

template <typename T>
double Scalar(const Tape<T>& tape, const std::optional<Var>& v) {
  return v ? static_cast<double>(tape.Value(*v)[0]) : 0.0;
}

template <typename T>
Var Sum(Tape<T>& tape, const std::vector<Var>& terms) {
  return terms.size() == 1 ? terms[0] : tape.SumScalars(terms);
}

template <typename T>
std::optional<Var> Mean(Tape<T>& tape, const std::vector<Var>& terms) {
  if (terms.empty()) return std::nullopt;
  const Var s = Sum(tape, terms);
  return terms.size() == 1 ? s : tape.Scale(s, static_cast<T>(1.0 / terms.size()));
}

void Require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw InvalidInput("trainer." + key + ": " + what);
}

void FillOutcomeStats(IterationStats& s, const BatchOutcome& o) {
  const double n = static_cast<double>(o.returns.size());
  double r = 0.0, turns = 0.0, timeouts = 0.0;
  for (size_t e = 0; e < o.returns.size(); ++e) {
    r += o.returns[e];
    turns += o.turns[e];
    timeouts += o.timed_out[e];
  }
  s.mean_return = r / n;
  s.mean_turns = turns / n;
  s.timeout_rate = timeouts / n;
}

template <typename T>
void FillLossStats(IterationStats& s, const Tape<T>& tape, const LossTerms& l) {
  s.action_loss = Scalar(tape, l.action);
  s.rc_loss = Scalar(tape, l.rc);
  s.ps_loss = Scalar(tape, l.ps);
  s.baseline_loss = Scalar(tape, l.baseline);
  s.total_loss = static_cast<double>(tape.Value(l.total)[0]);
}

void CheckMeta(const Checkpoint& ck, const char* key, const nlohmann::json& expected) {
  if (!ck.meta.contains(key) || ck.meta[key] != expected)
    throw InvalidInput(std::string("checkpoint: ") + key + " does not match this trainer");
}

template <typename T>
constexpr const char* DtypeName() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TrainerConfig TrainerConfig::NegotiationDefaults() {
  TrainerConfig c;
  c.iterations = 50000;
  c.lambda1 = 250.0;
  c.lambda2 = 10.0;
  c.clip_norm = 1.0;
  c.weight_decay = 1e-4;
  c.lr_drop = true;
  return c;
}

TrainerConfig TrainerConfig::SeqGuessDefaults(MessageKind kind) {
  TrainerConfig c;
  c.iterations = 100000;
  c.lambda1 = 100.0;
  c.lambda2 = 10.0;
  c.clip_norm = 0.0;
  c.weight_decay = kind == MessageKind::kDiscrete ? 0.0 : 1e-4;
  c.lr_drop = false;
  return c;
}

void TrainerConfig::Validate(bool continuous_messages) const {
  Require(batch_size >= 1, "batch_size", "must be at least 1");
  Require(iterations >= 0, "iterations", "must be nonnegative");
  Require(hidden >= 1, "hidden", "must be at least 1");
  Require(lr > 0.0, "lr", "must be positive");
  Require(lr_after_threshold > 0.0, "lr_after_threshold", "must be positive");
  Require(std::isfinite(lr_threshold), "lr_threshold", "must be finite");
  Require(clip_norm >= 0.0, "clip_norm", "must be nonnegative");
  Require(weight_decay >= 0.0, "weight_decay", "must be nonnegative");
  Require(beta1 >= 0.0 && beta1 < 1.0, "beta1", "must be in [0, 1)");
  Require(beta2 >= 0.0 && beta2 < 1.0, "beta2", "must be in [0, 1)");
  Require(lambda1 > 0.0, "lambda1", "must be positive");
  Require(lambda2 > 0.0, "lambda2", "must be positive");
  Require(lambda_ib >= 0.0, "lambda_ib", "must be nonnegative");
  Require(lambda_ps >= 0.0, "lambda_ps", "must be nonnegative");
  Require(!h_target || *h_target >= 0.0, "h_target", "must be nonnegative");
  Require(baseline_momentum >= 0.0 && baseline_momentum < 1.0, "baseline_momentum",
          "must be in [0, 1)");
  Require(!interagent_gradients || continuous_messages, "interagent_gradients",
          "requires continuous messages");
}

AdamConfig TrainerConfig::Optimizer() const {
  AdamConfig a;
  a.lr = lr;
  a.beta1 = beta1;
  a.beta2 = beta2;
  a.weight_decay = weight_decay;
  a.clip_norm = clip_norm;
  return a;
}

nlohmann::json ToJson(const TrainerConfig& c) {
  nlohmann::json j = {
      {"rc", c.rc_enabled},
      {"ps", c.ps_enabled},
      {"interagent_gradients", c.interagent_gradients},
      {"channel_ablated", c.channel_ablated},
      {"shared_agent_params", c.shared_agent_params},
      {"batch_size", c.batch_size},
      {"iterations", c.iterations},
      {"hidden", c.hidden},
      {"lr", c.lr},
      {"lr_drop", c.lr_drop},
      {"lr_after_threshold", c.lr_after_threshold},
      {"lr_threshold", c.lr_threshold},
      {"clip_norm", c.clip_norm},
      {"weight_decay", c.weight_decay},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"lambda1", c.lambda1},
      {"lambda2", c.lambda2},
      {"lambda_ib", c.lambda_ib},
      {"lambda_ps", c.lambda_ps},
      {"baseline_momentum", c.baseline_momentum},
  };
  j["h_target"] = c.h_target ? nlohmann::json(*c.h_target) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json ToJson(const NegotiationConfig& c) {
  return {{"items", c.items},
          {"message_dim", c.message_dim},
          {"max_turns", c.max_turns},
          {"punishment", c.punishment}};
}

nlohmann::json ToJson(const SeqGuessConfig& c) {
  return {{"alphabet", c.alphabet},
          {"length", c.length},
          {"max_turns", c.max_turns},
          {"message_kind", MessageKindName(c.message_kind)},
          {"message_length", c.message_length},
          {"message_dim", c.message_dim},
          {"time_penalty", c.time_penalty}};
}

nlohmann::json ToJson(const IterationStats& s) {
  nlohmann::json j = {
      {"iteration", s.iteration},       {"mean_return", s.mean_return},
      {"action_loss", s.action_loss},   {"rc_loss", s.rc_loss},
      {"ps_loss", s.ps_loss},           {"baseline_loss", s.baseline_loss},
      {"total_loss", s.total_loss},     {"grad_norm", s.grad_norm},
      {"lr", s.lr},                     {"timeout_rate", s.timeout_rate},
      {"mean_turns", s.mean_turns},     {"baseline", s.baseline},
      {"failed", s.failed},
  };
  if (s.shifted) j["shifted_return"] = *s.shifted;
  if (s.failed) j["failure"] = s.failure;
  return j;
}

IterationStats IterationStatsFromJson(const nlohmann::json& j) {
  // Non-finite numbers are written as null by the JSON library.
  auto num = [&](const char* key) {
    const auto& v = j.at(key);
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  IterationStats s;
  s.iteration = j.at("iteration").get<int64_t>();
  s.mean_return = num("mean_return");
  s.action_loss = num("action_loss");
  s.rc_loss = num("rc_loss");
  s.ps_loss = num("ps_loss");
  s.baseline_loss = num("baseline_loss");
  s.total_loss = num("total_loss");
  s.grad_norm = num("grad_norm");
  s.lr = num("lr");
  s.timeout_rate = num("timeout_rate");
  s.mean_turns = num("mean_turns");
  s.baseline = num("baseline");
  s.failed = j.at("failed").get<bool>();
  if (j.contains("shifted_return")) s.shifted = num("shifted_return");
  if (j.contains("failure")) s.failure = j["failure"].get<std::string>();
  return s;
}

double MovingBaselineUpdate(double b, double g, double momentum) {
  return momentum * b + (1.0 - momentum) * g;
}

double LrSchedule::Update(double mean_return) {
  if (!dropped_ && mean_return >= cfg_.lr_threshold) dropped_ = true;
  return current();
}

template <typename T>
Var ReinforceTerm(Tape<T>& tape, Var log_probs, std::span<const double> advantages,
                  double normalizer) {
  const Matrix<T>& lp = tape.Value(log_probs);
  if (lp.cols() != 1 || static_cast<size_t>(lp.rows()) != advantages.size())
    throw InvalidInput("reinforce: one advantage per log-probability row");
  if (!(normalizer > 0.0)) throw InvalidInput("reinforce: normalizer must be positive");
  Matrix<T> w(lp.rows(), 1);
  for (int r = 0; r < lp.rows(); ++r) w[r] = static_cast<T>(-advantages[r] / normalizer);
  return tape.WeightedSum(log_probs, w);
}

// ---------------------------------------------------------------------------
// Negotiation

template <typename T>
NegotiationTrainer<T>::NegotiationTrainer(const NegotiationConfig& game,
                                          const TrainerConfig& cfg, uint64_t seed)
    : game_(game), cfg_(cfg), seed_(seed), schedule_(cfg) {
  game_.Validate();
  cfg_.Validate(true);
  Rng init = Rng::Derive(seed, std::numeric_limits<uint64_t>::max());
  const int out = 2 * game_.items + 2 * game_.message_dim + 1;
  nets_[0] = NegotiationNet<T>(stores_[0], "agent_a", obs_dim(), out, cfg_.hidden, init);
  nets_[1] = cfg_.shared_agent_params
                 ? nets_[0]
                 : NegotiationNet<T>(stores_[1], "agent_b", obs_dim(), out, cfg_.hidden, init);
  base_ = NegotiationNet<T>(base_store_, "baseline", obs_dim(), 1, cfg_.hidden, init);

  const AdamConfig opt = cfg_.Optimizer();
  if (cfg_.shared_agent_params) {
    agent_opts_.emplace_back(AllParams(stores_[0]), opt);
  } else if (cfg_.interagent_gradients) {
    auto all = AllParams(stores_[0]);
    for (auto* p : AllParams(stores_[1])) all.push_back(p);
    agent_opts_.emplace_back(std::move(all), opt);
  } else {
    agent_opts_.emplace_back(AllParams(stores_[0]), opt);
    agent_opts_.emplace_back(AllParams(stores_[1]), opt);
  }
  base_opt_ = Adam<T>(AllParams(base_store_), opt);
}

template <typename T>
ParamStore<T>& NegotiationTrainer<T>::agent_params(Agent a) {
  return stores_[cfg_.shared_agent_params ? 0 : static_cast<int>(a)];
}

template <typename T>
Rng NegotiationTrainer<T>::EpisodeRng(uint64_t seed, int64_t iteration) {
  return Rng::Derive(seed, 2 * static_cast<uint64_t>(iteration));
}

template <typename T>
Rng NegotiationTrainer<T>::PolicyRng(uint64_t seed, int64_t iteration) {
  return Rng::Derive(seed, 2 * static_cast<uint64_t>(iteration) + 1);
}

template <typename T>
Rollout<T> NegotiationTrainer<T>::BuildLoss(Tape<T>& tape, int64_t iteration,
                                            SampleSource& source,
                                            const FrozenTerms<T>* frozen,
                                            FrozenTerms<T>* record) const {
  Rng env = EpisodeRng(seed_, iteration);
  return Run(tape, cfg_.batch_size, env, source, frozen, record, nullptr);
}

template <typename T>
Rollout<T> NegotiationTrainer<T>::Run(Tape<T>& tape, int batch, Rng& env,
                                      SampleSource& source,
                                      const FrozenTerms<T>* frozen,
                                      FrozenTerms<T>* record,
                                      NegotiationTrace* trace) const {
  using Core = typename NegotiationNet<T>::Core;
  const int k = game_.items, n = game_.message_dim, tmax = game_.max_turns;
  const bool channel = !cfg_.channel_ablated;
  const bool reparam = channel && cfg_.interagent_gradients;

  std::vector<NegotiationState> st;
  st.reserve(batch);
  for (int e = 0; e < batch; ++e) st.push_back(ResetNegotiation(game_, env));
  if (trace != nullptr) {
    trace->config = game_;
    trace->u_a = st[0].u_a;
    trace->u_b = st[0].u_b;
    trace->turns.clear();
  }

  Rollout<T> out;
  BatchOutcome& oc = out.outcome;
  oc.returns.assign(batch, 0.0);
  oc.turns.assign(batch, 0);
  oc.timed_out.assign(batch, 0);

  struct Turn {
    std::vector<int> eps;
    Var lp_action, lp_message, value, mean;
    Matrix<T> advantage_base;
  };
  std::vector<Turn> turns;

  std::vector<int> act(batch);
  std::iota(act.begin(), act.end(), 0);
  Core core[2], bcore;
  std::vector<int> core_eps[2], bcore_eps, msg_eps;
  bool started[2] = {false, false};
  Var msg;

  for (int t = 0; t < tmax && !act.empty(); ++t) {
    const int who = t % 2;
    const Agent agent = who == 0 ? Agent::kA : Agent::kB;
    const int rows = static_cast<int>(act.size());

    Matrix<T> util(rows, k);
    for (int r = 0; r < rows; ++r)
      for (int i = 0; i < k; ++i) util(r, i) = static_cast<T>(st[act[r]].utilities(agent)[i]);
    const Var heard = (t == 0 || !channel)
                          ? tape.Constant(Matrix<T>(rows, n))
                          : tape.GatherRows(msg, Positions(act, msg_eps));
    const Var obs = tape.Concat({tape.Constant(std::move(util)), heard,
                                 tape.Constant(Matrix<T>(rows, 1, static_cast<T>(t) / tmax))});

    if (!started[who]) {
      core[who] = nets_[who].InitialCore(tape, rows);
      started[who] = true;
    } else if (core_eps[who] != act) {
      core[who] = nets_[who].GatherCore(tape, core[who], Positions(act, core_eps[who]));
    }
    core_eps[who] = act;
    const auto heads = SplitNegotiationHeads(tape, nets_[who].Forward(tape, obs, core[who]), k, n);
    const NegotiationSample<T> s = SampleNegotiationAction(tape, heads, source, reparam);

    // The baseline sees the same observation but never sends gradient back.
    if (t == 0) {
      bcore = base_.InitialCore(tape, rows);
    } else if (bcore_eps != act) {
      bcore = base_.GatherCore(tape, bcore, Positions(act, bcore_eps));
    }
    bcore_eps = act;
    const Var value = BaselineValue(tape, base_.Forward(tape, tape.Detach(obs), bcore));
    if (record != nullptr) record->baseline.push_back(tape.Value(value));

    Turn turn{act, s.log_prob_action, s.log_prob_message, value, s.message_mean,
              frozen != nullptr ? frozen->baseline.at(t) : tape.Value(value)};

    std::vector<int> next;
    NegotiationAction a;
    a.proposal.resize(k);
    a.message.resize(n);
    for (int r = 0; r < rows; ++r) {
      const int e = act[r];
      for (int i = 0; i < k; ++i) a.proposal[i] = static_cast<double>(s.proposal(r, i));
      for (int i = 0; i < n; ++i) a.message[i] = static_cast<double>(s.message_value(r, i));
      a.accept = s.accept[r] != 0;
      NegotiationStep step = StepNegotiation(game_, st[e], a);
      st[e] = std::move(step.state);
      oc.turns[e] = t + 1;
      if (step.reward) {
        oc.returns[e] = *step.reward;
        oc.timed_out[e] = st[e].outcome == NegotiationOutcome::kTimeout;
      } else {
        next.push_back(e);
      }
      if (trace != nullptr && e == 0)
        trace->turns.push_back({t, agent, a.proposal, a.message, a.accept, step.reward});
    }
    oc.entries += rows;
    msg = s.message;
    msg_eps = act;
    turns.push_back(std::move(turn));
    act = std::move(next);
  }

  // Loss assembly.
  const double entries = oc.entries;
  std::vector<Var> action_terms, rc_terms, ps_terms, base_terms, by_agent[2];
  const RepulsionParams rep{cfg_.lambda1, cfg_.lambda2};
  for (size_t t = 0; t < turns.size(); ++t) {
    const Turn& turn = turns[t];
    const int rows = static_cast<int>(turn.eps.size());
    std::vector<double> adv(rows);
    const Matrix<T> live = tape.Value(turn.value);
    Matrix<T> grad(rows, 1);
    double mse = 0.0;
    for (int r = 0; r < rows; ++r) {
      const double ret = oc.returns[turn.eps[r]];
      adv[r] = ret - static_cast<double>(turn.advantage_base[r]);
      const double diff = static_cast<double>(live[r]) - ret;
      mse += diff * diff / entries;
      grad[r] = static_cast<T>(2.0 * diff / entries);
    }
    action_terms.push_back(ReinforceTerm(tape, turn.lp_action, adv, entries));
    by_agent[t % 2].push_back(action_terms.back());
    if (channel) rc_terms.push_back(ReinforceTerm(tape, turn.lp_message, adv, entries));
    base_terms.push_back(tape.ScalarFunction(turn.value, mse, std::move(grad)));
    if (channel && cfg_.ps_enabled) {
      if (record != nullptr) record->ps_reference.push_back(tape.Value(turn.mean));
      ps_terms.push_back(ContinuousPsLoss(tape, turn.mean, rep, false,
                                          frozen != nullptr ? &frozen->ps_reference.at(t) : nullptr));
    }
  }

  LossTerms& loss = out.loss;
  loss.action = Sum(tape, action_terms);
  for (int w = 0; w < 2; ++w)
    if (!by_agent[w].empty()) loss.agent_action[w] = Sum(tape, by_agent[w]);
  if (!rc_terms.empty()) loss.rc = Sum(tape, rc_terms);
  loss.ps = Mean(tape, ps_terms);
  loss.baseline = Sum(tape, base_terms);
  loss.comm = ComposeCommLoss(tape, loss.rc, loss.ps,
                              CommLossWeights{cfg_.lambda_ib, cfg_.rc_enabled && channel,
                                              cfg_.ps_enabled && channel});
  std::vector<Var> total{*loss.action, *loss.baseline};
  if (loss.comm) total.push_back(*loss.comm);
  loss.total = Sum(tape, total);
  return out;
}

template <typename T>
IterationStats NegotiationTrainer<T>::Step() {
  IterationStats stats;
  stats.iteration = iteration_;
  Tape<T> tape;
  Rng policy = PolicyRng(seed_, iteration_);
  SampleSource source(policy);
  const Rollout<T> roll = BuildLoss(tape, iteration_, source);
  FillOutcomeStats(stats, roll.outcome);
  FillLossStats(stats, tape, roll.loss);

  const double lr = cfg_.lr_drop ? schedule_.Update(stats.mean_return) : cfg_.lr;
  for (auto& o : agent_opts_) o.set_lr(lr);
  base_opt_.set_lr(lr);
  stats.lr = lr;

  if (!std::isfinite(stats.total_loss)) {
    stats.failed = true;
    stats.failure = "non-finite loss";
  } else {
    for (auto& store : stores_) store.ZeroGrad();
    base_store_.ZeroGrad();
    tape.Backward(roll.loss.total);
    double sq = 0.0;
    for (const auto& o : agent_opts_) {
      const double g = Adam<T>::GlobalNorm(o.params());
      sq += g * g;
    }
    stats.grad_norm = std::sqrt(sq);
    if (!std::isfinite(stats.grad_norm) ||
        !std::isfinite(Adam<T>::GlobalNorm(base_opt_.params()))) {
      stats.failed = true;
      stats.failure = "non-finite gradient";
    } else {
      for (auto& o : agent_opts_) o.Step();
      base_opt_.Step();
    }
  }
  ++iteration_;
  return stats;
}

template <typename T>
Checkpoint NegotiationTrainer<T>::Save() const {
  Checkpoint ck;
  ck.meta["game"] = "negotiation";
  ck.meta["game_config"] = ToJson(game_);
  ck.meta["trainer"] = ToJson(cfg_);
  ck.meta["seed"] = seed_;
  ck.meta["dtype"] = DtypeName<T>();
  ck.meta["iteration"] = iteration_;
  ck.meta["lr_dropped"] = schedule_.dropped();
  PutParams(ck, "agent_a", stores_[0]);
  if (!cfg_.shared_agent_params) PutParams(ck, "agent_b", stores_[1]);
  PutParams(ck, "baseline", base_store_);
  for (size_t i = 0; i < agent_opts_.size(); ++i)
    PutAdam(ck, "opt_agent_" + std::to_string(i), agent_opts_[i]);
  PutAdam(ck, "opt_baseline", base_opt_);
  return ck;
}

template <typename T>
void NegotiationTrainer<T>::Load(const Checkpoint& ck) {
  CheckMeta(ck, "game", "negotiation");
  CheckMeta(ck, "game_config", ToJson(game_));
  CheckMeta(ck, "trainer", ToJson(cfg_));
  CheckMeta(ck, "seed", seed_);
  CheckMeta(ck, "dtype", DtypeName<T>());
  GetParams(ck, "agent_a", stores_[0]);
  if (!cfg_.shared_agent_params) GetParams(ck, "agent_b", stores_[1]);
  GetParams(ck, "baseline", base_store_);
  for (size_t i = 0; i < agent_opts_.size(); ++i)
    GetAdam(ck, "opt_agent_" + std::to_string(i), agent_opts_[i]);
  GetAdam(ck, "opt_baseline", base_opt_);
  iteration_ = ck.meta.at("iteration").get<int64_t>();
  schedule_.set_dropped(ck.meta.at("lr_dropped").get<bool>());
}

template <typename T>
NegotiationTrace NegotiationTrainer<T>::PlayEpisode(uint64_t episode_seed) const {
  Tape<T> tape;
  Rng env = Rng::Derive(episode_seed, 0);
  Rng policy = Rng::Derive(episode_seed, 1);
  SampleSource source(policy);
  NegotiationTrace trace;
  Run(tape, 1, env, source, nullptr, nullptr, &trace);
  return trace;
}

// ---------------------------------------------------------------------------
// Sequence Guess

template <typename T>
SeqGuessTrainer<T>::SeqGuessTrainer(const SeqGuessConfig& game, const TrainerConfig& cfg,
                                    uint64_t seed)
    : game_(game), cfg_(cfg), seed_(seed) {
  game_.Validate();
  cfg_.Validate(game_.message_kind == MessageKind::kContinuous);
  net_cfg_ = SeqGuessNetConfig::FromGame(game_, cfg_.hidden);
  Rng init = Rng::Derive(seed, std::numeric_limits<uint64_t>::max());
  mm_ = Mastermind<T>(mm_store_, "mastermind", net_cfg_, init);
  guesser_ = Guesser<T>(g_store_, "guesser", net_cfg_, init);
  const AdamConfig opt = cfg_.Optimizer();
  if (cfg_.interagent_gradients) {
    auto all = AllParams(mm_store_);
    for (auto* p : AllParams(g_store_)) all.push_back(p);
    opts_.emplace_back(std::move(all), opt);
  } else {
    opts_.emplace_back(AllParams(mm_store_), opt);
    opts_.emplace_back(AllParams(g_store_), opt);
  }
}

template <typename T>
Rng SeqGuessTrainer<T>::EpisodeRng(uint64_t seed, int64_t iteration) {
  return Rng::Derive(seed, 2 * static_cast<uint64_t>(iteration));
}

template <typename T>
Rng SeqGuessTrainer<T>::PolicyRng(uint64_t seed, int64_t iteration) {
  return Rng::Derive(seed, 2 * static_cast<uint64_t>(iteration) + 1);
}

template <typename T>
Rollout<T> SeqGuessTrainer<T>::BuildLoss(Tape<T>& tape, int64_t iteration,
                                         SampleSource& source,
                                         const FrozenTerms<T>* frozen,
                                         FrozenTerms<T>* record) const {
  Rng env = EpisodeRng(seed_, iteration);
  return Run(tape, cfg_.batch_size, env, source, frozen, record, nullptr);
}

template <typename T>
Rollout<T> SeqGuessTrainer<T>::Run(Tape<T>& tape, int batch, Rng& env,
                                   SampleSource& source,
                                   const FrozenTerms<T>* frozen,
                                   FrozenTerms<T>* record,
                                   SeqGuessTrace* trace) const {
  const int k = game_.length, tmax = game_.max_turns;
  const int width = game_.MessageWidth();
  const bool discrete = game_.message_kind == MessageKind::kDiscrete;
  const bool channel = !cfg_.channel_ablated;
  const bool reparam = channel && cfg_.interagent_gradients && !discrete;
  const std::vector<double> initial = InitialSeqGuessMessage(game_);

  std::vector<SeqGuessState> st;
  st.reserve(batch);
  for (int e = 0; e < batch; ++e) st.push_back(ResetSeqGuess(game_, env));
  if (trace != nullptr) {
    trace->config = game_;
    trace->target = st[0].target;
    trace->turns.clear();
  }

  Rollout<T> out;
  BatchOutcome& oc = out.outcome;
  oc.returns.assign(batch, 0.0);
  oc.turns.assign(batch, 0);
  oc.timed_out.assign(batch, 0);

  struct Stream {
    std::vector<int> eps;
    Var log_prob;
    Var ps_input;  // squashed means or symbol probabilities
  };
  std::vector<Stream> guesses, messages;
  int message_entries = 0;

  std::vector<int> act(batch);
  std::iota(act.begin(), act.end(), 0);
  std::vector<int> msg_eps;
  Var msg;

  for (int t = 0; t < tmax && !act.empty(); ++t) {
    const int rows = static_cast<int>(act.size());
    Var heard;
    if (t == 0 || !channel) {
      Matrix<T> m(rows, width);
      for (int r = 0; r < rows; ++r)
        for (int i = 0; i < width; ++i) m(r, i) = static_cast<T>(initial[i]);
      heard = tape.Constant(std::move(m));
    } else {
      heard = tape.GatherRows(msg, Positions(act, msg_eps));
    }
    const SymbolSample<T> g = guesser_.DecodeGuess(tape, guesser_.Context(tape, heard, t), source);

    std::vector<int> rem, rem_targets, rem_guesses;
    for (int r = 0; r < rows; ++r) {
      const int e = act[r];
      const std::span<const int> guess(g.symbols.data() + static_cast<size_t>(r) * k, k);
      SeqGuessStep step = StepGuess(game_, st[e], guess);
      oc.turns[e] = t + 1;
      if (step.reward) {
        oc.returns[e] = *step.reward;
        oc.timed_out[e] = !std::equal(guess.begin(), guess.end(), st[e].target.begin());
      } else {
        rem.push_back(e);
        rem_targets.insert(rem_targets.end(), st[e].target.begin(), st[e].target.end());
        rem_guesses.insert(rem_guesses.end(), guess.begin(), guess.end());
      }
      if (trace != nullptr && e == 0)
        trace->turns.push_back({t, true, std::vector<int>(guess.begin(), guess.end()), {}, step.reward});
      st[e] = std::move(step.state);
    }
    oc.entries += rows;
    guesses.push_back({act, g.log_prob, Var{}});
    if (rem.empty()) break;

    const int nrem = static_cast<int>(rem.size());
    if (channel) {
      const Var ctx = mm_.Context(tape, rem_targets, rem_guesses, nrem, t);
      Var message, log_prob, ps_input;
      if (discrete) {
        const SymbolSample<T> s = mm_.DecodeSymbols(tape, ctx, source);
        Matrix<T> sym(nrem, width);
        for (size_t i = 0; i < s.symbols.size(); ++i) sym[i] = static_cast<T>(s.symbols[i]);
        message = tape.Constant(std::move(sym));
        log_prob = s.log_prob;
        ps_input = s.probs;
      } else {
        const GaussianHead<T> head = mm_.ContinuousHead(tape, ctx);
        const ContinuousSample<T> s = SampleGaussian(tape, head, source);
        message = ContinuousMessage(tape, head, s, reparam);
        log_prob = s.log_prob;
        ps_input = s.squashed_mean;
      }
      const Matrix<T> values = tape.Value(message);
      std::vector<double> reply(width);
      for (int r = 0; r < nrem; ++r) {
        const int e = rem[r];
        for (int i = 0; i < width; ++i) reply[i] = static_cast<double>(values(r, i));
        st[e] = StepReply(game_, st[e], reply);
        if (trace != nullptr && e == 0) trace->turns.push_back({t, false, {}, reply, std::nullopt});
      }
      messages.push_back({rem, log_prob, ps_input});
      message_entries += nrem;
      msg = message;
      msg_eps = rem;
    } else {
      for (int e : rem) {
        st[e] = StepReply(game_, st[e], initial);
        if (trace != nullptr && e == 0) trace->turns.push_back({t, false, {}, initial, std::nullopt});
      }
    }
    act = std::move(rem);
  }

  // Loss assembly with the moving baseline held fixed for this batch.
  auto advantages = [&](const std::vector<int>& eps) {
    std::vector<double> adv(eps.size());
    for (size_t r = 0; r < eps.size(); ++r) adv[r] = oc.returns[eps[r]] - baseline_;
    return adv;
  };
  std::vector<Var> action_terms, rc_terms, ps_terms;
  for (const Stream& s : guesses)
    action_terms.push_back(ReinforceTerm(tape, s.log_prob, advantages(s.eps), oc.entries));
  const RepulsionParams rep{cfg_.lambda1, cfg_.lambda2};
  const DiscretePsParams dps{cfg_.lambda_ps,
                             cfg_.h_target.value_or(0.1 * std::log(static_cast<double>(game_.alphabet)))};
  for (size_t m = 0; m < messages.size(); ++m) {
    const Stream& s = messages[m];
    rc_terms.push_back(ReinforceTerm(tape, s.log_prob, advantages(s.eps), message_entries));
    if (!cfg_.ps_enabled) continue;
    if (discrete) {
      ps_terms.push_back(DiscretePsLoss(tape, s.ps_input, game_.message_length, game_.alphabet, dps));
    } else {
      if (record != nullptr) record->ps_reference.push_back(tape.Value(s.ps_input));
      ps_terms.push_back(ContinuousPsLoss(tape, s.ps_input, rep, false,
                                          frozen != nullptr ? &frozen->ps_reference.at(m) : nullptr));
    }
  }

  LossTerms& loss = out.loss;
  loss.action = Sum(tape, action_terms);
  if (!rc_terms.empty()) loss.rc = Sum(tape, rc_terms);
  loss.ps = Mean(tape, ps_terms);
  loss.comm = ComposeCommLoss(tape, loss.rc, loss.ps,
                              CommLossWeights{cfg_.lambda_ib, cfg_.rc_enabled && channel,
                                              cfg_.ps_enabled && channel});
  loss.total = loss.comm ? Sum(tape, {*loss.action, *loss.comm}) : *loss.action;
  return out;
}

template <typename T>
IterationStats SeqGuessTrainer<T>::Step() {
  IterationStats stats;
  stats.iteration = iteration_;
  stats.baseline = baseline_;
  stats.lr = cfg_.lr;
  Tape<T> tape;
  Rng policy = PolicyRng(seed_, iteration_);
  SampleSource source(policy);
  const Rollout<T> roll = BuildLoss(tape, iteration_, source);
  FillOutcomeStats(stats, roll.outcome);
  FillLossStats(stats, tape, roll.loss);
  stats.shifted = ShiftedReturn(stats.mean_return, game_);

  if (!std::isfinite(stats.total_loss)) {
    stats.failed = true;
    stats.failure = "non-finite loss";
  } else {
    mm_store_.ZeroGrad();
    g_store_.ZeroGrad();
    tape.Backward(roll.loss.total);
    double sq = 0.0;
    for (const auto& o : opts_) {
      const double g = Adam<T>::GlobalNorm(o.params());
      sq += g * g;
    }
    stats.grad_norm = std::sqrt(sq);
    if (!std::isfinite(stats.grad_norm)) {
      stats.failed = true;
      stats.failure = "non-finite gradient";
    } else {
      for (auto& o : opts_) o.Step();
    }
  }
  baseline_ = MovingBaselineUpdate(baseline_, stats.mean_return, cfg_.baseline_momentum);
  ++iteration_;
  return stats;
}

template <typename T>
Checkpoint SeqGuessTrainer<T>::Save() const {
  Checkpoint ck;
  ck.meta["game"] = "seqguess";
  ck.meta["game_config"] = ToJson(game_);
  ck.meta["trainer"] = ToJson(cfg_);
  ck.meta["seed"] = seed_;
  ck.meta["dtype"] = DtypeName<T>();
  ck.meta["iteration"] = iteration_;
  ck.meta["baseline"] = baseline_;
  PutParams(ck, "mastermind", mm_store_);
  PutParams(ck, "guesser", g_store_);
  for (size_t i = 0; i < opts_.size(); ++i) PutAdam(ck, "opt_" + std::to_string(i), opts_[i]);
  return ck;
}

template <typename T>
void SeqGuessTrainer<T>::Load(const Checkpoint& ck) {
  CheckMeta(ck, "game", "seqguess");
  CheckMeta(ck, "game_config", ToJson(game_));
  CheckMeta(ck, "trainer", ToJson(cfg_));
  CheckMeta(ck, "seed", seed_);
  CheckMeta(ck, "dtype", DtypeName<T>());
  GetParams(ck, "mastermind", mm_store_);
  GetParams(ck, "guesser", g_store_);
  for (size_t i = 0; i < opts_.size(); ++i) GetAdam(ck, "opt_" + std::to_string(i), opts_[i]);
  iteration_ = ck.meta.at("iteration").get<int64_t>();
  baseline_ = ck.meta.at("baseline").get<double>();
}

template <typename T>
SeqGuessTrace SeqGuessTrainer<T>::PlayEpisode(uint64_t episode_seed) const {
  Tape<T> tape;
  Rng env = Rng::Derive(episode_seed, 0);
  Rng policy = Rng::Derive(episode_seed, 1);
  SampleSource source(policy);
  SeqGuessTrace trace;
  Run(tape, 1, env, source, nullptr, nullptr, &trace);
  return trace;
}

template Var ReinforceTerm<float>(Tape<float>&, Var, std::span<const double>, double);
template Var ReinforceTerm<double>(Tape<double>&, Var, std::span<const double>, double);
template class NegotiationTrainer<float>;
template class NegotiationTrainer<double>;
template class SeqGuessTrainer<float>;
template class SeqGuessTrainer<double>;

}  // namespace posig
