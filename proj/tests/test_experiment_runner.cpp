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

#include <unistd.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "posig/errors.hpp"
#include "posig/experiment_runner.hpp"
#include "test_util.hpp"

namespace posig {
namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("posig_runner_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<ExperimentConfig> Resolve(const std::string& text,
                                      const std::vector<ConfigEntry>& overrides = {}) {
  return ResolveExperiments(ParseConfigText(text, "test.cfg"), overrides);
}

TEST_CASE("configuration resolution") {
  const auto cells = Resolve(R"(
# comment
[experiment]
game = seqguess
runs = 5
seed = 100
[seqguess]
message_kind = discrete
[trainer]
batch_size = 256   # trailing comment
iterations = 20000
)");
  REQUIRE(cells.size() == 1);
  const ExperimentConfig& c = cells[0];
  CHECK(c.cell == "main");
  CHECK(c.game == GameId::kSeqGuess);
  CHECK(c.n_runs == 5);
  CHECK(c.seed_base == 100);
  CHECK(c.seqguess.message_kind == MessageKind::kDiscrete);
  CHECK(c.trainer.batch_size == 256);
  CHECK(c.trainer.iterations == 20000);
  // Discrete Sequence Guess defaults.
  CHECK(c.trainer.weight_decay == 0.0);
  CHECK(c.trainer.clip_norm == 0.0);
  CHECK(c.trainer.lambda1 == 100.0);
  CHECK_FALSE(c.trainer.lr_drop);
  CHECK(c.resolved_h_target() == doctest::Approx(0.1 * std::log(3.0)));

  const auto neg = Resolve("[experiment]\ngame = negotiation\n");
  CHECK(neg[0].trainer.lambda1 == 250.0);
  CHECK(neg[0].trainer.clip_norm == 1.0);
  CHECK(neg[0].trainer.lr_drop);
  CHECK(neg[0].n_runs == 30);
}

TEST_CASE("cells and overrides") {
  const auto cells = Resolve(R"(
[experiment]
game = seqguess
[trainer]
iterations = 10
[cell rc]
trainer.ps = false
[cell ps]
trainer.rc = false
[cell rc_ps]
)",
                             {ParseOverride("trainer.iterations=7"), ParseOverride("experiment.runs = 2")});
  REQUIRE(cells.size() == 3);
  CHECK(cells[0].cell == "rc");
  CHECK(cells[0].trainer.rc_enabled);
  CHECK_FALSE(cells[0].trainer.ps_enabled);
  CHECK(cells[1].cell == "ps");
  CHECK_FALSE(cells[1].trainer.rc_enabled);
  CHECK(cells[2].trainer.rc_enabled);
  CHECK(cells[2].trainer.ps_enabled);
  for (const auto& c : cells) {
    CHECK(c.trainer.iterations == 7);
    CHECK(c.n_runs == 2);
  }
  // A cell can switch the message kind, which changes its defaults.
  const auto dm = Resolve("[experiment]\ngame = seqguess\n[cell d]\nseqguess.message_kind = discrete\n[cell c]\n");
  CHECK(dm[0].trainer.weight_decay == 0.0);
  CHECK(dm[1].trainer.weight_decay == 1e-4);
}

TEST_CASE("configuration errors name the key") {
  CHECK_THROWS_WITH_AS(Resolve("[trainer]\nlamda1 = 3\n"), "test.cfg:2: unknown key 'trainer.lamda1'",
                       InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[bogus]\n"), "test.cfg:1: unknown section [bogus]", InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[trainer]\nlr = 1\nlr = 2\n"),
                       "test.cfg:3: duplicate key 'trainer.lr' (first at test.cfg:2)", InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[trainer]\nlambda1 = 0\n"), "trainer.lambda1: must be positive",
                       InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[trainer]\nlambda1 = -2.5\n"), "trainer.lambda1: must be positive",
                       InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[trainer]\nbatch_size = many\n"),
                       "test.cfg:2: trainer.batch_size: expected an integer, got 'many'", InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[trainer]\nrc = yes\n"),
                       "test.cfg:2: trainer.rc: expected true or false, got 'yes'", InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[experiment]\ngame = negotiation\n[seqguess]\nalphabet = 4\n"),
                       "test.cfg:4: seqguess.alphabet does not apply to game negotiation", InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[experiment]\ngame = seqguess\n[seqguess]\nmessage_kind = discrete\n"
                               "[trainer]\ninteragent_gradients = true\n"),
                       "trainer.interagent_gradients: not available with discrete messages", InvalidInput);
  CHECK_THROWS_WITH_AS(Resolve("[experiment]\nruns = 0\n"), "experiment.runs: must be at least 1",
                       InvalidInput);
  CHECK_THROWS_AS(Resolve("key = 1\n"), InvalidInput);
  CHECK_THROWS_AS(Resolve("[trainer\n"), InvalidInput);
  CHECK_THROWS_AS(Resolve("[cell a]\n[cell a]\n"), InvalidInput);
  CHECK_THROWS_AS(Resolve("[cell a]\n[trainer]\n"), InvalidInput);
  CHECK_THROWS_AS(ParseOverride("trainer.nope=1"), InvalidInput);
  CHECK_THROWS_AS(ParseOverride("trainer.lr"), InvalidInput);
}

TEST_CASE("resolved echo lists every gap-filled default and parses back") {
  for (const char* game : {"negotiation", "seqguess"}) {
    const auto c = Resolve(std::string("[experiment]\ngame = ") + game + "\n")[0];
    const std::string echo = RenderResolved(c);
    INFO(echo);
    CHECK(echo.find("initial message = 0") != std::string::npos);
    CHECK(echo.find("rc = true") != std::string::npos);
    if (c.game == GameId::kSeqGuess) {
      CHECK(echo.find("h_target = 0.10986122886681") != std::string::npos);
      CHECK(echo.find("max_turns = 3") != std::string::npos);
      CHECK(echo.find("shared_agent_params") == std::string::npos);
    } else {
      CHECK(echo.find("shared_agent_params = false") != std::string::npos);
      CHECK(echo.find("max_turns = 6") != std::string::npos);
      CHECK(echo.find("h_target") == std::string::npos);
    }
    ExperimentConfig expect = c;
    if (c.game == GameId::kSeqGuess) expect.trainer.h_target = c.resolved_h_target();
    const auto back = Resolve(echo);
    CHECK(ToJson(back[0]) == ToJson(expect));
  }
}

ExperimentConfig RandomConfig(Rng& rng) {
  ExperimentConfig c;
  c.cell = "cell" + std::to_string(rng.UniformInt(1000));
  c.game = rng.Bernoulli(0.5) ? GameId::kNegotiation : GameId::kSeqGuess;
  c.seqguess.message_kind = rng.Bernoulli(0.5) ? MessageKind::kDiscrete : MessageKind::kContinuous;
  c.seqguess.alphabet = 2 + rng.UniformInt(4);
  c.negotiation.items = 1 + rng.UniformInt(4);
  c.trainer = c.game == GameId::kNegotiation ? TrainerConfig::NegotiationDefaults()
                                             : TrainerConfig::SeqGuessDefaults(c.seqguess.message_kind);
  c.trainer.lr = rng.Uniform() * 1e-2 + 1e-6;
  c.trainer.lambda1 = 1.0 + 300.0 * rng.Uniform();
  c.trainer.rc_enabled = rng.Bernoulli(0.5);
  if (rng.Bernoulli(0.5)) c.trainer.h_target = rng.Uniform();
  c.n_runs = 1 + rng.UniformInt(40);
  c.seed_base = rng.NextU64();
  c.out_dir = "out/" + std::to_string(rng.UniformInt(100));
  return c;
}

TEST_CASE("experiment config json round trip") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const ExperimentConfig c = RandomConfig(rng);
    const nlohmann::json j = ToJson(c);
    const ExperimentConfig back = ExperimentConfigFromJson(nlohmann::json::parse(j.dump()));
    REQUIRE(ToJson(back) == j);
    CHECK(back.trainer.lr == c.trainer.lr);
    CHECK(back.seed_base == c.seed_base);
  }
}

TEST_CASE("mean interval estimator") {
  // 30 values with sample sd exactly 0.1: half-width 1.96 * 0.1 / sqrt(30).
  std::vector<double> v;
  const double a = 0.1 * std::sqrt(29.0 / 30.0);
  for (int i = 0; i < 30; ++i) v.push_back(0.8 + (i % 2 == 0 ? a : -a));
  const Interval iv = MeanInterval(v);
  CHECK(iv.mean == doctest::Approx(0.8).epsilon(1e-14));
  REQUIRE(iv.half_width);
  CHECK(*iv.half_width == doctest::Approx(1.96 * 0.1 / std::sqrt(30.0)).epsilon(1e-12));
  CHECK(*iv.half_width == doctest::Approx(0.0358).epsilon(1e-3));

  const std::vector<double> same(7, 0.25);
  CHECK(*MeanInterval(same).half_width == 0.0);
  const std::vector<double> one{0.4};
  CHECK_FALSE(MeanInterval(one).half_width.has_value());
  CHECK(MeanInterval(one).mean == 0.4);

  // Student t with 4 degrees of freedom: q = 2.7764451.
  const std::vector<double> five{1, 2, 3, 4, 5};
  CHECK(*MeanInterval(five, true).half_width ==
        doctest::Approx(2.7764451052 * std::sqrt(2.5) / std::sqrt(5.0)).epsilon(1e-9));
  CHECK(*MeanInterval(five).half_width == doctest::Approx(1.96 * std::sqrt(2.5) / std::sqrt(5.0)));

  // Brute-force comparison on random samples.
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.UniformInt(40);
    std::vector<double> x(n);
    for (double& e : x) e = rng.Normal();
    double m = 0.0;
    for (double e : x) m += e;
    m /= n;
    double ss = 0.0;
    for (double e : x) ss += (e - m) * (e - m);
    const Interval r = MeanInterval(x);
    CHECK(r.mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(*r.half_width == doctest::Approx(1.96 * std::sqrt(ss / (n - 1)) / std::sqrt(n)).epsilon(1e-12));
  }
}

RunRecord Synthetic(const ExperimentConfig& cfg, int run, const std::vector<double>& returns) {
  RunRecord r;
  r.experiment = cfg;
  r.run = run;
  r.seed = cfg.seed_base + run;
  for (size_t i = 0; i < returns.size(); ++i) {
    IterationStats s;
    s.iteration = static_cast<int64_t>(i);
    s.mean_return = returns[i];
    if (cfg.game == GameId::kSeqGuess) s.shifted = ShiftedReturn(returns[i], cfg.seqguess);
    s.total_loss = 1.0 / (i + 1);
    r.iterations.push_back(s);
    r.wall_clock.push_back(0.5 * i);
  }
  r.completed = true;
  return r;
}

ExperimentConfig Cell(const std::string& name, GameId game, bool rc, bool ps, bool ig) {
  ExperimentConfig c;
  c.cell = name;
  c.game = game;
  c.trainer = game == GameId::kNegotiation ? TrainerConfig::NegotiationDefaults()
                                           : TrainerConfig::SeqGuessDefaults(MessageKind::kContinuous);
  c.trainer.rc_enabled = rc;
  c.trainer.ps_enabled = ps;
  c.trainer.interagent_gradients = ig;
  return c;
}

TEST_CASE("summary table from synthetic records") {
  const ExperimentConfig rc = Cell("neg_rc", GameId::kNegotiation, true, false, false);
  const ExperimentConfig both = Cell("neg_rc_ps", GameId::kNegotiation, true, true, false);
  const ExperimentConfig sg = Cell("sg_ps", GameId::kSeqGuess, false, true, true);
  std::vector<RunRecord> recs{
      Synthetic(rc, 0, {0.1, 0.5, 0.3}),       // best 0.5
      Synthetic(rc, 1, {0.7, 0.2, 0.6}),       // best 0.7
      Synthetic(both, 0, {0.9, 0.95, 0.2}),    // best 0.95
      Synthetic(sg, 0, {0.2, 0.6, 0.4, 0.1}),  // best 0.6 raw
  };
  // A failed iteration never counts as the best.
  recs[1].iterations[2].failed = true;
  recs[1].iterations[2].mean_return = 5.0;

  const auto sum = Summarize(recs);
  REQUIRE(sum.size() == 3);
  CHECK(sum[0].best == std::vector<double>{0.5, 0.7});
  CHECK(sum[0].best_interval.mean == doctest::Approx(0.6));
  // sd of {0.5, 0.7} is sqrt(0.02); half-width 1.96 * sqrt(0.02) / sqrt(2) = 0.196.
  CHECK(*sum[0].best_interval.half_width == doctest::Approx(0.196));
  CHECK_FALSE(sum[1].best_interval.half_width.has_value());
  const double shift = ReportingShift(sg.seqguess);
  CHECK(shift == doctest::Approx(1.0 - (1.0 / 27.0 + 0.9 * 26.0 / 27.0)).epsilon(1e-12));
  CHECK(sum[2].best_interval.mean == doctest::Approx(0.6 + shift));
  CHECK(std::string(sum[2].scale()) == "shifted");
  CHECK(std::string(sum[0].scale()) == "raw");

  // Curves on the common grid of the cell's runs.
  CHECK(sum[0].grid == std::vector<int64_t>{0, 1, 2});
  CHECK(sum[0].curve_mean[0] == doctest::Approx(0.4));
  CHECK(sum[0].curve_mean[1] == doctest::Approx(0.35));
  CHECK(*sum[0].curve_half_width[1] == doctest::Approx(1.96 * std::sqrt(0.045) / std::sqrt(2.0)));

  const std::string csv = RenderSummaryCsv(sum);
  // Numbers are written in shortest round-trip form; their values are checked above.
  auto shortest = [](double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + 64, v);
    return std::string(buf, r.ptr);
  };
  const std::string expect =
      "ig,game,scale,RC,RC ci95,RC runs,PS,PS ci95,PS runs,RC and PS,RC and PS ci95,RC and PS runs\n"
      "IG,CM Sequence Guess,shifted,,,," + shortest(sum[2].best_interval.mean) + ",,1,,,\n"
      "No IG,Negotiation,raw," + shortest(sum[0].best_interval.mean) + "," +
      shortest(*sum[0].best_interval.half_width) + ",2,,,,0.95,,1\n";
  CHECK(csv == expect);

  const std::string text = RenderSummaryText(sum);
  INFO(text);
  CHECK(text.find("0.600 ± 0.196") != std::string::npos);
  CHECK(text.find("0.950 (no CI)") != std::string::npos);
  CHECK(text.find("IG     CM Sequence Guess") != std::string::npos);
  CHECK(text.find("No IG  Negotiation") != std::string::npos);
  CHECK(text.find("runs (1 to 2 per cell)") != std::string::npos);
  CHECK(text.find("Sequence Guess on the shifted scale") != std::string::npos);
}

TEST_CASE("summary grouping errors") {
  CHECK_THROWS_WITH_AS(Summarize({}), "summarize: no records", InvalidInput);
  const ExperimentConfig a = Cell("x", GameId::kNegotiation, true, false, false);
  ExperimentConfig b = a;
  b.trainer.lr = 0.5;
  CHECK_THROWS_AS(Summarize({Synthetic(a, 0, {0.1}), Synthetic(b, 1, {0.2})}), InvalidInput);
  CHECK_THROWS_AS(Summarize({Synthetic(a, 0, {0.1}), Synthetic(a, 0, {0.2})}), InvalidInput);
  // The same slot twice gets a labelled second row.
  ExperimentConfig c = a;
  c.cell = "y";
  const auto sum = Summarize({Synthetic(a, 0, {0.1}), Synthetic(c, 0, {0.2})});
  CHECK(RenderSummaryText(sum).find("Negotiation [y]") != std::string::npos);
}

TEST_CASE("curves subsample to the point budget") {
  const ExperimentConfig a = Cell("long", GameId::kNegotiation, true, true, false);
  std::vector<double> ret(5000);
  for (size_t i = 0; i < ret.size(); ++i) ret[i] = std::sin(0.01 * i);
  std::vector<double> shorter(ret.begin(), ret.begin() + 4500);
  const auto sum = Summarize({Synthetic(a, 0, ret), Synthetic(a, 1, shorter)});
  const auto& s = sum[0];
  REQUIRE(s.grid.size() == 2000);
  CHECK(s.grid.front() == 0);
  CHECK(s.grid.back() == 4499);
  for (size_t i = 1; i < s.grid.size(); ++i) CHECK(s.grid[i] > s.grid[i - 1]);
  // Bests use the full records.
  CHECK(s.best[0] == doctest::Approx(1.0).epsilon(1e-3));
  SummaryOptions few;
  few.max_points = 3;
  CHECK(Summarize({Synthetic(a, 0, ret)}, few)[0].grid == std::vector<int64_t>{0, 2500, 4999});
}

std::string Dump(const RunRecord& r) {
  std::ostringstream o;
  WriteRunRecord(o, r);
  return o.str();
}

TEST_CASE("record persistence round trip") {
  TempDir dir;
  const ExperimentConfig cfg = Cell("p", GameId::kSeqGuess, true, true, false);
  RunRecord r = Synthetic(cfg, 3, {0.1, -0.25, 1.0 / 3.0, 0.7});
  r.iterations[1].failed = true;
  r.iterations[1].failure = "non-finite loss";
  r.iterations[1].total_loss = std::nan("");
  r.completed = false;
  r.failure = "iteration 1: non-finite loss";
  const fs::path path = dir.path / RecordFileName(3);
  PersistRunRecord(r, path);
  const RunRecord back = LoadRunRecord(path);
  CHECK(Dump(back) == Dump(r));
  CHECK(std::isnan(back.iterations[1].total_loss));
  CHECK(back.iterations[2].mean_return == 1.0 / 3.0);
  CHECK(back.failure == r.failure);
  CHECK(back.run == 3);
  CHECK(ToJson(back.experiment) == ToJson(cfg));
  CHECK(LoadRecords(dir.path).size() == 1);
}

TEST_CASE("truncated final line is dropped with a warning") {
  const ExperimentConfig cfg = Cell("t", GameId::kNegotiation, true, true, false);
  RunRecord r = Synthetic(cfg, 0, {0.1, 0.2, 0.3, 0.4, 0.5});
  r.completed = false;
  const std::string full = Dump(r);
  const size_t last_start = full.rfind('\n', full.size() - 2) + 1;
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    // Cut strictly inside the final line.
    const size_t cut = last_start + 1 + rng.UniformInt(static_cast<int>(full.size() - last_start - 2));
    std::istringstream in(full.substr(0, cut));
    std::vector<std::string> warnings;
    const RunRecord back = ReadRunRecord(in, "rec", &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("truncated") != std::string::npos);
    CHECK(back.iterations.size() == 4);
  }
  // A cut exactly at a line boundary loses nothing silently.
  std::istringstream whole(full.substr(0, last_start));
  std::vector<std::string> warnings;
  CHECK(ReadRunRecord(whole, "rec", &warnings).iterations.size() == 4);
  CHECK(warnings.empty());
  // Corruption before the final line is an error.
  std::string bad = full;
  bad[last_start - 5] = '#';
  std::istringstream corrupt(bad);
  CHECK_THROWS_AS(ReadRunRecord(corrupt, "rec"), InvalidInput);
}

TEST_CASE("record schema mismatch is an error") {
  const ExperimentConfig cfg = Cell("s", GameId::kNegotiation, true, true, false);
  std::string text = Dump(Synthetic(cfg, 0, {0.1}));
  const std::string v1 = "\"version\":1";
  REQUIRE(text.find(v1) != std::string::npos);
  std::string v2 = text;
  v2.replace(v2.find(v1), v1.size(), "\"version\":2");
  std::istringstream in(v2);
  CHECK_THROWS_WITH_AS(ReadRunRecord(in, "rec"),
                       "rec: record schema version 2 does not match supported version 1", InvalidInput);
  std::istringstream foreign("{\"format\":\"other\"}\n");
  CHECK_THROWS_AS(ReadRunRecord(foreign, "rec"), InvalidInput);
  std::istringstream empty("");
  CHECK_THROWS_AS(ReadRunRecord(empty, "rec"), InvalidInput);
}

ExperimentConfig TinyCell(const std::string& name, const fs::path& out, int64_t iterations) {
  ExperimentConfig c;
  c.cell = name;
  c.game = GameId::kSeqGuess;
  c.trainer = TrainerConfig::SeqGuessDefaults(MessageKind::kContinuous);
  c.trainer.batch_size = 8;
  c.trainer.hidden = 4;
  c.trainer.iterations = iterations;
  c.n_runs = 3;
  c.seed_base = 40;
  c.out_dir = out.string();
  c.checkpoint_every = 2;
  c.progress_every = 1;
  return c;
}

std::string IterationsJson(const RunRecord& r) {
  std::string s;
  for (const auto& it : r.iterations) s += ToJson(it).dump() + "\n";
  return s;
}

TEST_CASE("grid runs, skips finished runs and resumes interrupted ones") {
  TempDir dir;
  std::vector<ExperimentConfig> cells{TinyCell("a", dir.path, 6), TinyCell("b", dir.path, 6)};
  cells[1].trainer.rc_enabled = false;
  const GridResult first = RunGrid(cells);
  CHECK(first.executed == 6);
  CHECK(first.skipped == 0);
  REQUIRE(first.records.size() == 6);
  const auto manifest = ReadManifest(dir.path);
  CHECK(manifest.at("a").size() == 3);
  for (const auto& [cell, runs] : manifest)
    for (const auto& [run, status] : runs) CHECK(status == "done");

  std::set<uint64_t> seeds;
  for (const auto& p : first.records) {
    const RunRecord r = LoadRunRecord(p);
    CHECK(r.completed);
    CHECK(r.iterations.size() == 6);
    CHECK(r.seed == 40 + static_cast<uint64_t>(r.run));
    seeds.insert(r.seed);
    CHECK(fs::exists(p.parent_path() / ("run_00" + std::to_string(r.run) + ".trace.jsonl")));
  }
  CHECK(seeds.size() == 3);  // disjoint across runs, shared across cells

  const auto before = fs::last_write_time(first.records[0]);
  const GridResult again = RunGrid(cells);
  CHECK(again.executed == 0);
  CHECK(again.skipped == 6);
  CHECK(fs::last_write_time(first.records[0]) == before);

  // More runs extend the cell.
  cells[0].n_runs = 4;
  const GridResult more = RunGrid(cells);
  CHECK(more.executed == 1);
  CHECK(more.skipped == 6);

  // A changed configuration under the same name is refused.
  std::vector<ExperimentConfig> changed{cells[0]};
  changed[0].trainer.lr = 0.5;
  CHECK_THROWS_AS(RunGrid(changed), InvalidInput);

  // Interrupt a run mid-way, then resume: identical to an uninterrupted run.
  TempDir other;
  std::vector<ExperimentConfig> solo{TinyCell("c", other.path, 6)};
  solo[0].n_runs = 1;
  std::atomic<bool> cancel{false};
  GridOptions opt;
  opt.cancel = &cancel;
  opt.progress = [&](const ProgressEvent& e) {
    if (e.kind == ProgressEvent::Kind::kIteration && e.stats->iteration == 2) cancel = true;
  };
  const GridResult cut = RunGrid(solo, opt);
  CHECK(cut.interrupted == 1);
  CHECK(ReadManifest(other.path).at("c").at(0) == "interrupted");
  CHECK(LoadRunRecord(other.path / "c" / RecordFileName(0)).iterations.size() == 3);
  const GridResult rest = RunGrid(solo);
  CHECK(rest.executed == 1);
  TempDir straight;
  std::vector<ExperimentConfig> ref{solo[0]};
  ref[0].out_dir = straight.path.string();
  RunGrid(ref);
  const RunRecord resumed = LoadRunRecord(other.path / "c" / RecordFileName(0));
  const RunRecord uncut = LoadRunRecord(straight.path / "c" / RecordFileName(0));
  CHECK(resumed.completed);
  CHECK(IterationsJson(resumed) == IterationsJson(uncut));
}

TEST_CASE("grid runs in parallel deterministically") {
  TempDir serial, parallel;
  std::vector<ExperimentConfig> a{TinyCell("a", serial.path, 4)};
  std::vector<ExperimentConfig> b{TinyCell("a", parallel.path, 4)};
  GridOptions opt;
  opt.jobs = 3;
  RunGrid(a);
  RunGrid(b, opt);
  for (int r = 0; r < 3; ++r)
    CHECK(IterationsJson(LoadRunRecord(serial.path / "a" / RecordFileName(r))) ==
          IterationsJson(LoadRunRecord(parallel.path / "a" / RecordFileName(r))));
}

}  // namespace
}  // namespace posig
