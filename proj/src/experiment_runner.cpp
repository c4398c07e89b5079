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

#include "posig/experiment_runner.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "posig/errors.hpp"

namespace posig {

namespace fs = std::filesystem;
using nlohmann::json;

double RunRecord::Reported(const IterationStats& s) const {
  return experiment.shifted_scale() ? s.shifted.value_or(ShiftedReturn(s.mean_return, experiment.seqguess))
                                    : s.mean_return;
}

std::string RecordFileName(int run) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%03d.records.jsonl", run);
  return buf;
}

namespace {

std::string RunStem(int run) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "run_%03d", run);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Records

json RecordHeader(const RunRecord& r) {
  return {{"type", "header"},
          {"format", kRecordFormat},
          {"version", kRecordVersion},
          {"experiment", ToJson(r.experiment)},
          {"run", r.run},
          {"seed", r.seed}};
}

json RecordLine(const IterationStats& s, double wall_clock) {
  json j = ToJson(s);
  j["type"] = "iteration";
  j["wall_clock"] = wall_clock;
  return j;
}

json RecordFooter(const RunRecord& r) {
  json j = {{"type", "end"}, {"completed", r.completed}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

void WriteRunRecord(std::ostream& out, const RunRecord& r) {
  out << RecordHeader(r).dump() << '\n';
  for (size_t i = 0; i < r.iterations.size(); ++i)
    out << RecordLine(r.iterations[i], r.wall_clock.at(i)).dump() << '\n';
  if (r.completed || !r.failure.empty()) out << RecordFooter(r).dump() << '\n';
}

void PersistRunRecord(const RunRecord& r, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    WriteRunRecord(out, r);
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

RunRecord ReadRunRecord(std::istream& in, const std::string& origin,
                        std::vector<std::string>* warnings) {
  std::vector<std::string> lines;
  std::string line;
  bool last_terminated = true;
  while (std::getline(in, line)) {
    last_terminated = !in.eof();
    lines.push_back(line);
  }
  if (lines.empty()) throw InvalidInput(origin + ": empty record file");

  RunRecord r;
  json header;
  try {
    header = json::parse(lines[0]);
  } catch (const json::exception&) {
    throw InvalidInput(origin + ": unreadable record header");
  }
  if (!header.is_object() || header.value("format", "") != kRecordFormat)
    throw InvalidInput(origin + ": not a run record (format mismatch)");
  if (header.value("version", -1) != kRecordVersion)
    throw InvalidInput(origin + ": record schema version " + header.value("version", json(-1)).dump() +
                       " does not match supported version " + std::to_string(kRecordVersion));
  try {
    r.experiment = ExperimentConfigFromJson(header.at("experiment"));
    r.run = header.at("run");
    r.seed = header.at("seed");
  } catch (const json::exception& e) {
    throw InvalidInput(origin + ": bad record header: " + e.what());
  }

  bool ended = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception&) {
      if (i + 1 == lines.size() && !last_terminated) {
        if (warnings != nullptr)
          warnings->push_back(origin + ": dropped truncated final line " + std::to_string(i + 1));
        break;
      }
      throw InvalidInput(origin + ":" + std::to_string(i + 1) + ": corrupt record line");
    }
    if (ended) throw InvalidInput(origin + ":" + std::to_string(i + 1) + ": data after end marker");
    try {
      const std::string type = j.at("type");
      if (type == "iteration") {
        const IterationStats s = IterationStatsFromJson(j);
        if (!r.iterations.empty() && s.iteration <= r.iterations.back().iteration)
          throw InvalidInput(origin + ":" + std::to_string(i + 1) + ": iterations not increasing");
        r.iterations.push_back(s);
        const json& w = j.at("wall_clock");
        r.wall_clock.push_back(w.is_null() ? std::nan("") : w.get<double>());
      } else if (type == "end") {
        r.completed = j.at("completed");
        r.failure = j.value("failure", "");
        ended = true;
      } else {
        throw InvalidInput(origin + ":" + std::to_string(i + 1) + ": unknown line type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw InvalidInput(origin + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return r;
}

RunRecord LoadRunRecord(const fs::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open record '" + path.string() + "'");
  return ReadRunRecord(in, path.string(), warnings);
}

namespace {

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<RunRecord> LoadRecords(const fs::path& dir, std::vector<std::string>* warnings) {
  if (!fs::is_directory(dir)) throw InvalidInput("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && EndsWith(e.path().filename().string(), ".records.jsonl"))
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) out.push_back(LoadRunRecord(f, warnings));
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

class Manifest {
 public:
  explicit Manifest(fs::path root) : path_(std::move(root) / "manifest.json") {
    if (!fs::exists(path_)) {
      doc_ = {{"format", kManifestFormat}, {"version", kManifestVersion}, {"cells", json::object()}};
      return;
    }
    std::ifstream in(path_);
    try {
      doc_ = json::parse(in);
    } catch (const json::exception&) {
      throw InvalidInput(path_.string() + ": unreadable manifest");
    }
    if (doc_.value("format", "") != kManifestFormat || doc_.value("version", -1) != kManifestVersion)
      throw InvalidInput(path_.string() + ": manifest format or version mismatch");
  }

  void Register(const ExperimentConfig& c) {
    json& cells = doc_["cells"];
    const json id = IdentityJson(c);
    if (cells.contains(c.cell)) {
      if (cells[c.cell]["config"] != id)
        throw InvalidInput("manifest: cell '" + c.cell +
                           "' already exists with a different configuration; use another name or output");
    } else {
      cells[c.cell] = {{"config", id}, {"runs", json::object()}};
    }
  }

  std::string Status(const std::string& cell, int run) const {
    const json& runs = doc_["cells"][cell]["runs"];
    const std::string key = std::to_string(run);
    return runs.contains(key) ? runs[key].value("status", "") : "";
  }

  void Set(const std::string& cell, int run, uint64_t seed, const std::string& status) {
    doc_["cells"][cell]["runs"][std::to_string(run)] = {{"status", status}, {"seed", seed}};
  }

  void Save() const {
    const fs::path tmp = path_.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << doc_.dump(2) << '\n';
      if (!out) throw std::runtime_error("cannot write manifest '" + tmp.string() + "'");
    }
    fs::rename(tmp, path_);
  }

  const json& doc() const { return doc_; }

 private:
  fs::path path_;
  json doc_;
};

struct Task {
  const ExperimentConfig* cfg;
  int run;
};

using Notify = std::function<void(ProgressEvent)>;

template <typename Trainer>
void WriteTrace(const Trainer& tr, const fs::path& path, uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  const auto trace = tr.PlayEpisode(seed);
  if constexpr (std::is_same_v<Trainer, NegotiationTrainer<float>>) {
    WriteNegotiationTrace(out, trace);
  } else {
    WriteSeqGuessTrace(out, trace);
  }
}

constexpr const char* kInterrupted = "interrupted";

// Returns the failure message, kInterrupted, or empty on success.
template <typename Trainer>
std::string Drive(Trainer& tr, const ExperimentConfig& cfg, int run, const fs::path& dir,
                  int traces, const std::atomic<bool>* cancel, const Notify& notify) {
  const fs::path rec_path = dir / RecordFileName(run);
  const fs::path ck_path = dir / (RunStem(run) + ".ckpt");
  RunRecord rec;
  rec.experiment = cfg;
  rec.run = run;
  rec.seed = cfg.seed_base + static_cast<uint64_t>(run);

  double wall_offset = 0.0;
  bool resumed = false;
  if (fs::exists(ck_path) && fs::exists(rec_path)) {
    std::vector<std::string> warnings;
    RunRecord old = LoadRunRecord(rec_path, &warnings);
    const Checkpoint ck = Checkpoint::ReadFile(ck_path);
    const auto keep = ck.meta.at("iteration").get<size_t>();
    if (old.iterations.size() >= keep) {
      tr.Load(ck);
      old.iterations.resize(keep);
      old.wall_clock.resize(keep);
      old.completed = false;
      old.failure.clear();
      old.experiment = cfg;
      rec = std::move(old);
      if (!rec.wall_clock.empty()) wall_offset = rec.wall_clock.back();
      resumed = true;
      for (const auto& w : warnings) notify({ProgressEvent::Kind::kResumed, cfg.cell, run, {}, w});
    }
  }
  PersistRunRecord(rec, rec_path);
  notify({resumed ? ProgressEvent::Kind::kResumed : ProgressEvent::Kind::kStarted, cfg.cell, run, {},
          resumed ? "from iteration " + std::to_string(tr.iteration()) : ""});

  std::ofstream out(rec_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to '" + rec_path.string() + "'");
  const auto t0 = std::chrono::steady_clock::now();
  std::string failure;
  while (tr.iteration() < cfg.trainer.iterations) {
    if (cancel != nullptr && cancel->load()) {
      out.close();
      tr.Save().WriteFile(ck_path.string());
      return kInterrupted;
    }
    const IterationStats s = tr.Step();
    const double wall =
        wall_offset + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << RecordLine(s, wall).dump() << '\n';
    if (s.failed) {
      failure = "iteration " + std::to_string(s.iteration) + ": " + s.failure;
      break;
    }
    if (cfg.progress_every > 0 && tr.iteration() % cfg.progress_every == 0)
      notify({ProgressEvent::Kind::kIteration, cfg.cell, run, s, ""});
    if (tr.iteration() % cfg.checkpoint_every == 0 && tr.iteration() < cfg.trainer.iterations) {
      out.flush();
      tr.Save().WriteFile(ck_path);
    }
  }
  rec.completed = failure.empty();
  rec.failure = failure;
  out << RecordFooter(rec).dump() << '\n';
  out.close();
  if (!out) throw std::runtime_error("write failed for '" + rec_path.string() + "'");
  tr.Save().WriteFile(ck_path);
  if (failure.empty())
    for (int i = 0; i < traces; ++i) {
      const std::string name = RunStem(run) + (i == 0 ? "" : "_" + std::to_string(i)) + ".trace.jsonl";
      WriteTrace(tr, dir / name, Rng::Derive(rec.seed, 0x7472616365ULL + i).NextU64());
    }
  return failure;
}

std::string RunTask(const Task& t, const fs::path& root, int traces, const std::atomic<bool>* cancel,
                    const Notify& notify) {
  const ExperimentConfig& c = *t.cfg;
  const fs::path dir = root / c.cell;
  fs::create_directories(dir);
  const uint64_t seed = c.seed_base + static_cast<uint64_t>(t.run);
  if (c.game == GameId::kNegotiation) {
    NegotiationTrainer<float> tr(c.negotiation, c.trainer, seed);
    return Drive(tr, c, t.run, dir, traces, cancel, notify);
  }
  SeqGuessTrainer<float> tr(c.seqguess, c.trainer, seed);
  return Drive(tr, c, t.run, dir, traces, cancel, notify);
}

}  // namespace

GridResult RunGrid(const std::vector<ExperimentConfig>& cells, const GridOptions& options) {
  if (cells.empty()) throw InvalidInput("run grid: no cells");
  const fs::path root = cells.front().out_dir;
  std::set<std::string> names;
  for (const auto& c : cells) {
    c.Validate();
    if (fs::path(c.out_dir) != root) throw InvalidInput("run grid: cells must share one output root");
    if (!names.insert(c.cell).second) throw InvalidInput("run grid: duplicate cell '" + c.cell + "'");
  }
  fs::create_directories(root);

  std::mutex mu;
  Manifest manifest(root);
  for (const auto& c : cells) manifest.Register(c);
  manifest.Save();

  auto emit = [&](ProgressEvent e) {
    if (options.progress) options.progress(e);
  };
  GridResult result;
  std::vector<Task> tasks;
  for (const auto& c : cells)
    for (int r = 0; r < c.n_runs; ++r) {
      const fs::path rec = root / c.cell / RecordFileName(r);
      if (manifest.Status(c.cell, r) == "done" && fs::exists(rec)) {
        ++result.skipped;
        emit({ProgressEvent::Kind::kSkipped, c.cell, r, {}, "already finished"});
      } else {
        tasks.push_back({&c, r});
      }
    }

  std::atomic<size_t> next{0};
  std::exception_ptr error;
  const Notify locked = [&](ProgressEvent e) {
    std::lock_guard<std::mutex> lock(mu);
    emit(std::move(e));
  };
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      if (options.cancel != nullptr && options.cancel->load()) return;
      const Task& t = tasks[i];
      const uint64_t seed = t.cfg->seed_base + static_cast<uint64_t>(t.run);
      {
        std::lock_guard<std::mutex> lock(mu);
        manifest.Set(t.cfg->cell, t.run, seed, "running");
        manifest.Save();
      }
      std::string failure;
      try {
        failure = RunTask(t, root, options.traces, options.cancel, locked);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        failure = "aborted";
      }
      std::lock_guard<std::mutex> lock(mu);
      const bool interrupted = failure == kInterrupted;
      manifest.Set(t.cfg->cell, t.run, seed,
                   failure.empty() ? "done" : interrupted ? kInterrupted : "failed");
      manifest.Save();
      if (interrupted) {
        ++result.interrupted;
        emit({ProgressEvent::Kind::kInterrupted, t.cfg->cell, t.run, {}, ""});
        continue;
      }
      ++result.executed;
      if (!failure.empty()) ++result.failed;
      emit({failure.empty() ? ProgressEvent::Kind::kFinished : ProgressEvent::Kind::kFailed, t.cfg->cell,
            t.run, {}, failure});
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  // Runs a cancel kept from starting count as interrupted too.
  result.interrupted = static_cast<int>(tasks.size()) - result.executed;

  for (const auto& c : cells)
    for (int r = 0; r < c.n_runs; ++r) result.records.push_back(root / c.cell / RecordFileName(r));
  return result;
}

std::map<std::string, std::map<int, std::string>> ReadManifest(const fs::path& root) {
  if (!fs::exists(root / "manifest.json")) throw InvalidInput("no manifest in '" + root.string() + "'");
  const Manifest m(root);
  std::map<std::string, std::map<int, std::string>> out;
  for (const auto& [cell, entry] : m.doc()["cells"].items())
    for (const auto& [run, status] : entry["runs"].items())
      out[cell][std::stoi(run)] = status.value("status", "");
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

Interval MeanInterval(std::span<const double> values, bool student_t) {
  if (values.empty()) throw InvalidInput("mean interval: no values");
  Interval out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  double q = 1.96;
  if (student_t) {
    const boost::math::students_t dist(n - 1.0);
    q = boost::math::quantile(dist, 0.975);
  }
  out.half_width = q * sd / std::sqrt(n);
  return out;
}

double BestMinibatch(const RunRecord& r) {
  double best = std::nan("");
  for (const auto& s : r.iterations) {
    if (s.failed) continue;
    const double v = r.Reported(s);
    if (std::isfinite(v) && !(v <= best)) best = v;
  }
  return best;
}

std::vector<CellSummary> Summarize(const std::vector<RunRecord>& records, const SummaryOptions& options) {
  if (records.empty()) throw InvalidInput("summarize: no records");
  if (options.max_points < 2) throw InvalidInput("summarize: max_points must be at least 2");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    auto& g = groups[r.experiment.cell];
    if (g.empty()) {
      order.push_back(r.experiment.cell);
    } else if (IdentityJson(g.front()->experiment) != IdentityJson(r.experiment)) {
      throw InvalidInput("summarize: records of cell '" + r.experiment.cell +
                         "' have different configurations");
    }
    for (const RunRecord* o : g)
      if (o->run == r.run) throw InvalidInput("summarize: cell '" + r.experiment.cell +
                                              "' has run " + std::to_string(r.run) + " twice");
    g.push_back(&r);
  }

  std::vector<CellSummary> out;
  for (const auto& name : order) {
    auto& g = groups[name];
    std::sort(g.begin(), g.end(), [](const RunRecord* a, const RunRecord* b) { return a->run < b->run; });
    CellSummary s;
    s.experiment = g.front()->experiment;
    s.runs = static_cast<int>(g.size());
    size_t length = std::numeric_limits<size_t>::max();
    for (const RunRecord* r : g) {
      s.seeds.push_back(r->seed);
      const double b = BestMinibatch(*r);
      if (std::isfinite(b)) s.best.push_back(b);
      length = std::min(length, r->iterations.size());
    }
    if (!s.best.empty()) {
      s.best_interval = MeanInterval(s.best, options.student_t);
    } else {
      s.best_interval.mean = std::nan("");
    }

    const size_t points = std::min<size_t>(length, static_cast<size_t>(options.max_points));
    for (size_t p = 0; p < points; ++p) {
      const size_t idx =
          points == length ? p
                           : static_cast<size_t>(std::llround(static_cast<double>(p) * (length - 1) /
                                                              static_cast<double>(points - 1)));
      std::vector<double> vals;
      for (const RunRecord* r : g) {
        const double v = r->Reported(r->iterations[idx]);
        if (std::isfinite(v)) vals.push_back(v);
      }
      s.grid.push_back(g.front()->iterations[idx].iteration);
      if (vals.empty()) {
        s.curve_mean.push_back(std::nan(""));
        s.curve_half_width.push_back(std::nullopt);
      } else {
        const Interval iv = MeanInterval(vals, options.student_t);
        s.curve_mean.push_back(iv.mean);
        s.curve_half_width.push_back(iv.half_width);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Table

std::string TableColumn(const ExperimentConfig& c) {
  if (c.trainer.channel_ablated) return "No channel";
  if (c.trainer.rc_enabled && c.trainer.ps_enabled) return "RC and PS";
  if (c.trainer.rc_enabled) return "RC";
  if (c.trainer.ps_enabled) return "PS";
  return "No loss";
}

std::string TableGame(const ExperimentConfig& c) {
  if (c.game == GameId::kNegotiation) return "Negotiation";
  return c.seqguess.message_kind == MessageKind::kContinuous ? "CM Sequence Guess" : "DM Sequence Guess";
}

namespace {

struct TableRow {
  std::string group;  // "IG" / "No IG"
  std::string game;
  std::string scale;
  std::map<std::string, const CellSummary*> slots;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<TableRow> rows;
};

Table BuildTable(const std::vector<CellSummary>& cells) {
  static const std::vector<std::string> kColumns{"RC", "PS", "RC and PS", "No loss", "No channel"};
  static const std::vector<std::string> kGames{"Negotiation", "CM Sequence Guess", "DM Sequence Guess"};
  Table t;
  std::set<std::string> used;
  for (const auto& c : cells) used.insert(TableColumn(c.experiment));
  for (const auto& col : kColumns)
    if (col == "RC" || col == "PS" || col == "RC and PS" || used.count(col)) t.columns.push_back(col);

  // Rows in the fixed game order; a second cell for an occupied slot opens a new row
  // labelled with its cell name.
  struct Key {
    int group, game;
    std::string label;
  };
  std::vector<std::pair<Key, TableRow>> rows;
  for (const auto& c : cells) {
    const int group = c.experiment.trainer.interagent_gradients ? 0 : 1;
    const std::string game = TableGame(c.experiment);
    const int game_idx = static_cast<int>(std::find(kGames.begin(), kGames.end(), game) - kGames.begin());
    const std::string col = TableColumn(c.experiment);
    TableRow* target = nullptr;
    for (auto& [k, row] : rows)
      if (k.group == group && k.game == game_idx && !row.slots.count(col) && row.game.find('[') == std::string::npos) {
        target = &row;
        break;
      }
    if (target == nullptr) {
      bool taken = false;
      for (auto& [k, row] : rows) taken |= k.group == group && k.game == game_idx;
      TableRow row;
      row.group = group == 0 ? "IG" : "No IG";
      row.game = taken ? game + " [" + c.experiment.cell + "]" : game;
      row.scale = c.scale();
      rows.push_back({Key{group, game_idx, row.game}, row});
      target = &rows.back().second;
    }
    target->slots[col] = &c;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.group, a.first.game) < std::tie(b.first.group, b.first.game);
  });
  for (auto& [k, row] : rows) t.rows.push_back(std::move(row));
  return t;
}

std::string Shortest(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string Fixed3(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << v;
  return o.str();
}

// Display width of UTF-8 text.
size_t Width(const std::string& s) {
  size_t w = 0;
  for (unsigned char c : s) w += (c & 0xC0) != 0x80;
  return w;
}

}  // namespace

std::string RenderSummaryCsv(const std::vector<CellSummary>& cells) {
  const Table t = BuildTable(cells);
  std::ostringstream out;
  out << "ig,game,scale";
  for (const auto& c : t.columns) out << ',' << CsvField(c) << ',' << CsvField(c + " ci95") << ',' << CsvField(c + " runs");
  out << '\n';
  for (const auto& row : t.rows) {
    out << row.group << ',' << CsvField(row.game) << ',' << row.scale;
    for (const auto& col : t.columns) {
      auto it = row.slots.find(col);
      if (it == row.slots.end()) {
        out << ",,,";
        continue;
      }
      const CellSummary& s = *it->second;
      out << ',' << Shortest(s.best_interval.mean) << ','
          << (s.best_interval.half_width ? Shortest(*s.best_interval.half_width) : "") << ',' << s.runs;
    }
    out << '\n';
  }
  return out.str();
}

std::string RenderSummaryText(const std::vector<CellSummary>& cells) {
  const Table t = BuildTable(cells);
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{"", "", "scale"};
  for (const auto& c : t.columns) head.push_back(c);
  grid.push_back(head);
  std::set<int> run_counts;
  for (const auto& row : t.rows) {
    std::vector<std::string> line{row.group, row.game, row.scale};
    for (const auto& col : t.columns) {
      auto it = row.slots.find(col);
      if (it == row.slots.end()) {
        line.push_back("-");
        continue;
      }
      const CellSummary& s = *it->second;
      run_counts.insert(s.runs);
      std::string cell = Fixed3(s.best_interval.mean);
      cell += s.best_interval.half_width ? " ± " + Fixed3(*s.best_interval.half_width) : " (no CI)";
      line.push_back(cell);
    }
    grid.push_back(line);
  }
  std::vector<size_t> width(grid.front().size(), 0);
  for (const auto& line : grid)
    for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], Width(line[i]));

  std::ostringstream out;
  std::string last_group;
  for (size_t r = 0; r < grid.size(); ++r) {
    std::vector<std::string> line = grid[r];
    if (r > 0) {
      if (line[0] == last_group) line[0] = "";
      else last_group = line[0];
    }
    std::string text;
    for (size_t i = 0; i < line.size(); ++i) {
      text += line[i];
      if (i + 1 < line.size()) text += std::string(width[i] - Width(line[i]) + 2, ' ');
    }
    while (!text.empty() && text.back() == ' ') text.pop_back();
    out << text << '\n';
  }
  out << "best mini-batch return per run, mean ± 95% CI half-width over ";
  if (run_counts.size() == 1) {
    out << *run_counts.begin() << " runs";
  } else {
    out << "runs (" << *run_counts.begin() << " to " << *run_counts.rbegin() << " per cell)";
  }
  out << "; Sequence Guess on the shifted scale, Negotiation raw\n";
  return out.str();
}

}  // namespace posig
