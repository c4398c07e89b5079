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

// Acceptance run: one PASS/FAIL line per criterion, then a count. The
// training grids live in a persistent, resumable directory, so a second run
// only re-reads finished records.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "posig/experiment_config.hpp"
#include "posig/experiment_runner.hpp"
#include "posig/reinforce_trainer.hpp"
#include "posig/signaling_losses.hpp"
#include "posig/torus.hpp"
#include "report.hpp"
#include "signaling_oracles.hpp"
#include "test_util.hpp"

namespace posig {
namespace {

namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Analytic oracles

Verdict AnalyticOracles() {
  NegotiationTrace t;
  t.u_a = {0.8, 0.35, 0.5};
  t.u_b = {0.4, 0.2, 0.8};
  t.turns.push_back({0, Agent::kA, {0.6, 0.6, 0.6}, {0.0, 0.0, 0.0}, false, std::nullopt});
  t.turns.push_back({1, Agent::kB, {0.5, 0.3, 0.4}, {0.0, 0.0, 0.0}, false, std::nullopt});
  t.turns.push_back({2, Agent::kA, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, true, std::nullopt});
  const double fig = ReplayNegotiationReward(t);
  const bool fig_ok = std::fabs(fig - 1.525 / 1.95) <= 1e-4 && std::fabs(fig - 0.7821) <= 1e-4;

  SeqGuessConfig sg;
  const std::vector<int> target = {2, 0, 1};
  const double r0 = SeqGuessReward(sg, 0, target, target);
  const double r1 = SeqGuessReward(sg, 1, target, target);
  const double shift = ReportingShift(sg);
  const double expect = 1.0 - (1.0 / 27.0 + 0.9 * 26.0 / 27.0);
  const bool shift_ok = std::fabs(shift - expect) <= 1e-6 && std::fabs(shift - 0.0963) <= 5e-5;

  return {fig_ok && r0 == 1.0 && r1 == 0.9 && shift_ok,
          "worked negotiation reward " + Fmt("%.6f", fig) + ", guess rewards " + Fmt("%.17g", r0) + " and " +
              Fmt("%.17g", r1) + ", shift " + Fmt("%.7f", shift)};
}

// ---------------------------------------------------------------------------
// 2. Loss correctness

struct FdStats {
  double worst = 0.0;
  int checked = 0;
  int nonzero = 0;

  void Add(double analytic, double fd, double floor) {
    worst = std::max(worst, testing::RelativeError(analytic, fd, floor));
    ++checked;
    nonzero += std::fabs(analytic) > 1e-9;
  }
};

// Continuous PS loss: the detached operand is held fixed while the others
// move, so its analytic gradient is the derivative of that frozen function.
void PsLossFd(FdStats& st) {
  std::mt19937_64 rng(101);
  const RepulsionParams p{10.0, 2.0};  // cutoff 0.2
  for (int trial = 0; trial < 20; ++trial) {
    const int b = 2 + trial % 12;
    const int n = 1 + trial % 3;
    const Matrix<double> m = testing::RandomMatrix(rng, b, n);
    const auto l = ContinuousPsLoss(m, p);
    for (size_t i = 0; i < m.size(); ++i) {
      const double fd = testing::CentralDifference(
          [&](const Matrix<double>& x) { return ContinuousPsLossAgainst(x, m, p).value; }, m, i, 1e-6);
      st.Add(l.grad[i], fd, 1e-6);
    }
  }
}

// The composed loss of one training iteration with every sample replayed.
// The baseline regression reads a detached observation that still moves with
// the agents numerically, so agent parameters are checked without that term.
template <typename Trainer>
void ComposedFd(Trainer& tr, const std::vector<ParamStore<double>*>& stores, const ParamStore<double>* value_store,
                int per_param, uint64_t pick_seed, FdStats& st) {
  Rng policy = Trainer::PolicyRng(tr.seed(), 0);
  SampleSource live(policy);
  FrozenTerms<double> frozen;
  Tape<double> tape;
  const auto roll = tr.BuildLoss(tape, 0, live, nullptr, &frozen);
  for (auto* s : stores) s->ZeroGrad();
  tape.Backward(roll.loss.total);
  const std::vector<double> log = live.log();
  Rng pick(pick_seed);
  for (auto* store : stores)
    for (const auto& p : store->all())
      for (int s = 0; s < per_param; ++s) {
        const size_t i = static_cast<size_t>(pick.UniformInt(static_cast<int>(p->value.size())));
        auto f = [&](const Matrix<double>& x) {
          const Matrix<double> saved = p->value;
          p->value = x;
          SampleSource replay = SampleSource::Replay(log);
          Tape<double> t2;
          const LossTerms terms = tr.BuildLoss(t2, 0, replay, &frozen).loss;
          double v = t2.Value(terms.total)[0];
          if (store != value_store && terms.baseline) v -= t2.Value(*terms.baseline)[0];
          p->value = saved;
          return v;
        };
        st.Add(p->grad[i], testing::CentralDifference(f, p->value, i, 1e-6), 1e-4);
      }
}

void NetworkFd(FdStats& st) {
  for (bool ig : {false, true}) {
    TrainerConfig cfg = TrainerConfig::NegotiationDefaults();
    cfg.batch_size = 4;
    cfg.hidden = 5;
    cfg.interagent_gradients = ig;
    cfg.lambda1 = 10.0;
    cfg.lambda2 = 10.0;
    NegotiationTrainer<double> tr(NegotiationConfig{}, cfg, ig ? 21 : 20);
    ComposedFd(tr, {&tr.agent_params(Agent::kA), &tr.agent_params(Agent::kB), &tr.baseline_params()},
               &tr.baseline_params(), 3, 7, st);
  }
  for (MessageKind kind : {MessageKind::kContinuous, MessageKind::kDiscrete}) {
    SeqGuessConfig game;
    game.message_kind = kind;
    TrainerConfig cfg = TrainerConfig::SeqGuessDefaults(kind);
    cfg.batch_size = 5;
    cfg.hidden = 5;
    cfg.interagent_gradients = kind == MessageKind::kContinuous;
    cfg.lambda1 = 10.0;
    SeqGuessTrainer<double> tr(game, cfg, 30);
    tr.set_baseline(0.15);
    ComposedFd(tr, {&tr.mastermind_params(), &tr.guesser_params()}, nullptr, 3, 8, st);
  }
}

double PairAccountingGap() {
  std::mt19937_64 rng(202);
  const RepulsionParams p{100.0, 10.0};
  double worst = 0.0;
  for (int b = 1; b <= 64; ++b) {
    const int n = 1 + b % 3;
    // Clustered points so that many pairs fall inside the cutoff.
    const double spread = b % 2 == 0 ? 0.2 : 2.0;
    Matrix<double> m = testing::RandomMatrix(rng, b, n, -spread, spread);
    worst = std::max(worst, std::fabs(ContinuousPsLoss(m, p).value - oracles::BroadcastPsLoss(m, p)));
  }
  return worst;
}

Verdict LossCorrectness() {
  FdStats ps, nets;
  PsLossFd(ps);
  NetworkFd(nets);
  const double gap = PairAccountingGap();
  const bool ok = ps.worst < 1e-4 && nets.worst < 1e-4 && nets.nonzero > 0 && gap <= 1e-9;
  return {ok, "PS loss max rel err " + Fmt("%.2e", ps.worst) + " over " + std::to_string(ps.checked) +
                  " coords; networks in the composed loss " + Fmt("%.2e", nets.worst) + " over " +
                  std::to_string(nets.checked) + "; pair accounting gap " + Fmt("%.1e", gap) + " (B = 1..64)"};
}

// ---------------------------------------------------------------------------
// 3. Uniformization

Verdict Uniformization() {
  const RepulsionParams p{100.0, 10.0};
  Rng rng(0);
  Matrix<double> m(8, 1);
  for (size_t i = 0; i < m.size(); ++i) m[i] = 2.0 * rng.Uniform() - 1.0;
  double loss = 0.0;
  int step = 0;
  for (; step < 5000; ++step) {
    const auto l = ContinuousPsLoss(m, p);
    loss = l.value;
    if (loss == 0.0) break;
    for (size_t i = 0; i < m.size(); ++i) m[i] = WrapCoordinate(m[i] - 1e-3 * l.grad[i]);
  }
  loss = ContinuousPsLoss(m, p).value;
  const auto d = ComputePairwiseDistances(m);
  double min_d = 2.0;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) min_d = std::min(min_d, d(i, j));
  return {loss == 0.0 && min_d >= 0.1,
          "loss " + Fmt("%.6g", loss) + " after " + std::to_string(step) + " steps, min pairwise distance " +
              Fmt("%.4f", min_d)};
}

// ---------------------------------------------------------------------------
// 4-6. Training grids

const char* kGridConfig = R"(
[experiment]
progress_every = 0
checkpoint_every = 500
[trainer]
batch_size = 256

[cell neg_ig_rc_ps]
experiment.game = negotiation
experiment.runs = 3
trainer.iterations = 10000
trainer.interagent_gradients = true

[cell neg_ablated]
experiment.game = negotiation
experiment.runs = 3
trainer.iterations = 10000
trainer.rc = false
trainer.ps = false
trainer.channel_ablated = true

[cell cm_ablated]
experiment.game = seqguess
experiment.runs = 3
trainer.iterations = 20000
trainer.rc = false
trainer.ps = false
trainer.channel_ablated = true

[cell cm_rc]
experiment.game = seqguess
experiment.runs = 5
trainer.iterations = 20000
trainer.ps = false

[cell cm_ps]
experiment.game = seqguess
experiment.runs = 5
trainer.iterations = 20000
trainer.rc = false

[cell cm_rc_ps]
experiment.game = seqguess
experiment.runs = 5
trainer.iterations = 20000
)";

struct Grid {
  std::map<std::string, std::vector<RunRecord>> cells;
  std::string error;
};

Grid RunGrids(const fs::path& root, int jobs, const std::set<int>& wanted) {
  static const std::map<std::string, int> kCriterion = {{"neg_ig_rc_ps", 5}, {"neg_ablated", 6}, {"cm_ablated", 6},
                                                        {"cm_rc", 4},        {"cm_ps", 4},       {"cm_rc_ps", 4}};
  Grid g;
  std::vector<ExperimentConfig> cells;
  for (auto c : ResolveExperiments(ParseConfigText(kGridConfig, "acceptance grid"), {})) {
    if (!wanted.contains(kCriterion.at(c.cell))) continue;
    c.out_dir = root.string();
    cells.push_back(c);
  }
  if (cells.empty()) return g;
  GridOptions opt;
  opt.jobs = jobs;
  const auto start = std::chrono::steady_clock::now();
  opt.progress = [&](const ProgressEvent& e) {
    if (e.kind == ProgressEvent::Kind::kIteration || e.kind == ProgressEvent::Kind::kSkipped) return;
    const double min = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
    const char* what = e.kind == ProgressEvent::Kind::kStarted    ? "started"
                       : e.kind == ProgressEvent::Kind::kResumed  ? "resumed"
                       : e.kind == ProgressEvent::Kind::kFinished ? "finished"
                                                                  : "stopped";
    std::cerr << "  [" << Fmt("%6.1f", min) << " min] " << e.cell << " run " << e.run << " " << what << "\n";
  };
  try {
    const GridResult r = RunGrid(cells, opt);
    for (const auto& path : r.records) {
      RunRecord rec = LoadRunRecord(path);
      g.cells[rec.experiment.cell].push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    g.error = e.what();
  }
  return g;
}

double Mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double SampleSd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

std::vector<double> Bests(const std::vector<RunRecord>& runs) {
  std::vector<double> out;
  for (const auto& r : runs) out.push_back(BestMinibatch(r));
  return out;
}

// Largest reported mini-batch mean over every iteration of every run.
double Highest(const std::vector<RunRecord>& runs) {
  double hi = -INFINITY;
  for (const auto& r : runs)
    for (const auto& s : r.iterations)
      if (!s.failed) hi = std::max(hi, r.Reported(s));
  return hi;
}

bool Complete(const Grid& g, const std::string& cell, std::string& why) {
  if (!g.error.empty()) {
    why = "grid error: " + g.error;
    return false;
  }
  const auto it = g.cells.find(cell);
  if (it == g.cells.end() || it->second.empty()) {
    why = "no records for " + cell;
    return false;
  }
  for (const auto& r : it->second)
    if (!r.completed) {
      why = cell + " run " + std::to_string(r.run) + " incomplete" + (r.failure.empty() ? "" : ": " + r.failure);
      return false;
    }
  return true;
}

const char* Ok(bool b) { return b ? "ok" : "MISSED"; }

std::string MeanSd(const std::vector<double>& v) { return Fmt("%.3f", Mean(v)) + " ± " + Fmt("%.3f", SampleSd(v)); }

Verdict SeqGuessOrdering(const Grid& g) {
  std::string why;
  for (const char* c : {"cm_rc", "cm_ps", "cm_rc_ps"})
    if (!Complete(g, c, why)) return {false, why};
  const auto rc = Bests(g.cells.at("cm_rc"));
  const auto ps = Bests(g.cells.at("cm_ps"));
  const auto both = Bests(g.cells.at("cm_rc_ps"));
  const bool order = Mean(both) - SampleSd(both) > Mean(rc) + SampleSd(rc);
  const bool ps_high = Mean(ps) > 0.6 && Mean(both) > 0.6;
  const bool rc_low = Mean(rc) < 0.778;
  return {order && ps_high && rc_low, "best shifted return (mean ± sd over 5 seeds): RC " + MeanSd(rc) + ", PS " +
                                          MeanSd(ps) + ", RC and PS " + MeanSd(both) + "; RC and PS above RC " +
                                          Ok(order) + ", PS cells above 0.6 " + Ok(ps_high) + ", RC below 0.778 " +
                                          Ok(rc_low)};
}

Verdict NegotiationSanity(const Grid& g) {
  std::string why;
  if (!Complete(g, "neg_ig_rc_ps", why)) return {false, why};
  const auto& runs = g.cells.at("neg_ig_rc_ps");
  const auto best = Bests(runs);
  // Timeout rate over the final 100 iterations of each run.
  std::vector<double> timeouts;
  for (const auto& r : runs) {
    const size_t n = r.iterations.size();
    const size_t from = n > 100 ? n - 100 : 0;
    double s = 0.0;
    for (size_t i = from; i < n; ++i) s += r.iterations[i].timeout_rate;
    timeouts.push_back(s / static_cast<double>(n - from));
  }
  const double worst_timeout = *std::max_element(timeouts.begin(), timeouts.end());
  return {Mean(best) >= 0.85 && worst_timeout < 0.05,
          "best return " + MeanSd(best) + " over 3 seeds; final-100 timeout rate at most " +
              Fmt("%.2f%%", 100.0 * worst_timeout)};
}

Verdict NoChannelCeilings(const Grid& g) {
  std::string why;
  for (const char* c : {"cm_ablated", "neg_ablated"})
    if (!Complete(g, c, why)) return {false, why};
  const double sg = Highest(g.cells.at("cm_ablated"));
  const double neg = Highest(g.cells.at("neg_ablated"));
  return {sg <= 0.2 && neg <= 0.92 + 0.02, "highest mini-batch return without a channel: Sequence Guess " +
                                               Fmt("%.3f", sg) + " shifted (bound 0.2) " + Ok(sg <= 0.2) +
                                               ", Negotiation " + Fmt("%.3f", neg) + " (bound 0.94) " +
                                               Ok(neg <= 0.92 + 0.02)};
}

// ---------------------------------------------------------------------------
// 7. Infrastructure

std::string Bytes(const Checkpoint& ck) {
  std::ostringstream out;
  ck.Write(out);
  return out.str();
}

Verdict Infrastructure(const Grid& g, const std::string& test_dir, const std::vector<std::string>& suites) {
  std::vector<std::string> problems;

  // Checkpoint bit-exactness, including training on after a restore.
  TrainerConfig cfg = TrainerConfig::NegotiationDefaults();
  cfg.batch_size = 32;
  cfg.hidden = 16;
  NegotiationTrainer<float> a(NegotiationConfig{}, cfg, 77);
  for (int i = 0; i < 5; ++i) a.Step();
  const std::string bytes = Bytes(a.Save());
  std::istringstream in(bytes);
  NegotiationTrainer<float> b(NegotiationConfig{}, cfg, 77);
  b.Load(Checkpoint::Read(in));
  if (Bytes(b.Save()) != bytes) problems.push_back("checkpoint bytes differ after a round trip");
  for (int i = 0; i < 3; ++i)
    if (a.Step().total_loss != b.Step().total_loss) problems.push_back("restored trainer diverged");

  // Deterministic replay of 100 iterations.
  NegotiationTrainer<float> c(NegotiationConfig{}, cfg, 91), d(NegotiationConfig{}, cfg, 91);
  for (int i = 0; i < 100; ++i) {
    const auto x = c.Step(), y = d.Step();
    if (x.total_loss != y.total_loss || x.mean_return != y.mean_return) {
      problems.push_back("replay diverged at iteration " + std::to_string(i));
      break;
    }
  }

  // Record persist/load identity on a real record.
  RunRecord rec;
  rec.experiment.game = GameId::kNegotiation;
  rec.experiment.trainer = cfg;
  rec.run = 0;
  rec.seed = 91;
  NegotiationTrainer<float> e(NegotiationConfig{}, cfg, 91);
  for (int i = 0; i < 10; ++i) {
    rec.iterations.push_back(e.Step());
    rec.wall_clock.push_back(0.125 * i);
  }
  rec.completed = true;
  std::ostringstream rec_out;
  WriteRunRecord(rec_out, rec);
  std::istringstream rec_in(rec_out.str());
  std::ostringstream again;
  WriteRunRecord(again, ReadRunRecord(rec_in, "memory"));
  if (again.str() != rec_out.str()) problems.push_back("record changed through persist/load");

  // Summarize and plot data agree on the grids that ran.
  std::vector<RunRecord> all;
  for (const auto& [cell, runs] : g.cells) all.insert(all.end(), runs.begin(), runs.end());
  int cross_checked = 0;
  if (!all.empty()) {
    for (const auto& s : Summarize(all)) {
      std::istringstream data(RenderCurveData(s));
      const CurveData parsed = ParseCurveData(data);
      bool same = parsed.iteration == s.grid && parsed.mean == s.curve_mean &&
                  parsed.half_width.size() == s.curve_half_width.size();
      for (size_t i = 0; same && i < parsed.half_width.size(); ++i)
        same = parsed.half_width[i] == s.curve_half_width[i];
      if (!same) problems.push_back("plot data differs from the summary for " + s.experiment.cell);
      ++cross_checked;
    }
  }

  // Every module's invariant suite.
  int suites_ok = 0;
  for (const auto& name : suites) {
    const std::string cmd = "\"" + (fs::path(test_dir) / name).string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) == 0) {
      ++suites_ok;
    } else {
      problems.push_back(name + " failed");
    }
  }

  std::string detail = "checkpoint, records, 100-iteration replay; " + std::to_string(cross_checked) +
                       " cells cross-checked; " + std::to_string(suites_ok) + "/" + std::to_string(suites.size()) +
                       " suites green";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace
}  // namespace posig

int main(int argc, char** argv) {
  using namespace posig;
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Acceptance criteria, one PASS/FAIL line each."};
  std::string dir;
  if (const char* env = std::getenv("POSIG_ACCEPTANCE_DIR")) dir = env;
  if (dir.empty()) dir = POSIG_ACCEPTANCE_DIR;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<int> only;
  app.add_option("--dir", dir, "persistent grid directory (also $POSIG_ACCEPTANCE_DIR)")->capture_default_str();
  app.add_option("--jobs", jobs, "concurrent training runs")->capture_default_str();
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  std::set<int> wanted(only.begin(), only.end());
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7};

  int passed = 0, failed = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << v.detail << std::endl;
    (v.pass ? passed : failed)++;
  };

  if (wanted.contains(1)) report(1, "analytic oracles", AnalyticOracles());
  if (wanted.contains(2)) report(2, "loss correctness", LossCorrectness());
  if (wanted.contains(3)) report(3, "uniformization", Uniformization());
  Grid grid;
  if (wanted.contains(4) || wanted.contains(5) || wanted.contains(6) || wanted.contains(7)) {
    std::cerr << "training grids under " << dir << " (finished runs are reused)\n";
    grid = RunGrids(dir, jobs, wanted);
  }
  if (wanted.contains(4)) report(4, "sequence guess loss ordering", SeqGuessOrdering(grid));
  if (wanted.contains(5)) report(5, "negotiation sanity", NegotiationSanity(grid));
  if (wanted.contains(6)) report(6, "no-channel ceilings", NoChannelCeilings(grid));
  if (wanted.contains(7))
    report(7, "infrastructure", Infrastructure(grid, POSIG_TEST_DIR, Split(POSIG_SUITES, ',')));

  std::cout << passed << " passed, " << failed << " failed of " << passed + failed << " criteria" << std::endl;
  return 0;
}
