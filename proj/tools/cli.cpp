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

#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "posig/errors.hpp"
#include "posig/experiment_config.hpp"
#include "posig/experiment_runner.hpp"
#include "report.hpp"

namespace posig {

namespace fs = std::filesystem;

namespace {

struct TrainArgs {
  std::string config;
  std::optional<int> runs;
  std::optional<uint64_t> seed;
  int jobs = 1;
  std::string out;
  bool dry_run = false;
  std::vector<std::string> set;
};

struct ReportArgs {
  std::string records;
  std::string out;
  bool student_t = false;
  int max_points = 2000;
};

std::string DefaultRoot() {
  const char* env = std::getenv(kOutputRootEnv);
  return env != nullptr && *env != '\0' ? env : "runs";
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string Num(double v, const char* f = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string ProgressLine(const ProgressEvent& e) {
  std::string head = "[" + e.cell + " run " + std::to_string(e.run) + "] ";
  switch (e.kind) {
    case ProgressEvent::Kind::kStarted: return head + "started";
    case ProgressEvent::Kind::kResumed: return head + "resumed " + e.message;
    case ProgressEvent::Kind::kSkipped: return head + "skipped (" + e.message + ")";
    case ProgressEvent::Kind::kFinished: return head + "finished";
    case ProgressEvent::Kind::kFailed: return head + "FAILED: " + e.message;
    case ProgressEvent::Kind::kInterrupted: return head + "interrupted; rerun to resume";
    case ProgressEvent::Kind::kIteration: break;
  }
  const IterationStats& s = *e.stats;
  std::string line = head + "it " + std::to_string(s.iteration + 1) + "  return " + Num(s.mean_return);
  if (s.shifted) line += " (shifted " + Num(*s.shifted) + ")";
  line += "  loss " + Num(s.total_loss) + " [action " + Num(s.action_loss) + ", rc " + Num(s.rc_loss) +
          ", ps " + Num(s.ps_loss);
  if (s.baseline_loss != 0.0) line += ", baseline " + Num(s.baseline_loss);
  line += "]  lr " + Num(s.lr, "%.0e");
  return line;
}

int Train(const TrainArgs& a, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  std::ifstream in(a.config);
  if (!in) throw InvalidInput("cannot open config '" + a.config + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const ConfigText text = ParseConfigText(buf.str(), a.config);

  std::vector<ConfigEntry> overrides;
  for (const auto& s : a.set) overrides.push_back(ParseOverride(s));
  bool file_sets_out = false;
  for (const auto& e : text.shared) file_sets_out |= e.key == "experiment.out";
  for (const auto& [name, entries] : text.cells)
    for (const auto& e : entries) file_sets_out |= e.key == "experiment.out";
  if (!a.out.empty()) {
    overrides.push_back({"experiment.out", a.out, "--out"});
  } else if (!file_sets_out) {
    overrides.push_back({"experiment.out", DefaultRoot(), kOutputRootEnv});
  }
  if (a.runs) overrides.push_back({"experiment.runs", std::to_string(*a.runs), "--runs"});
  if (a.seed) overrides.push_back({"experiment.seed", std::to_string(*a.seed), "--seed"});
  if (a.jobs < 1) throw InvalidInput("--jobs: must be at least 1");

  const std::vector<ExperimentConfig> cells = ResolveExperiments(text, overrides);
  for (const auto& c : cells) out << RenderResolved(c) << "\n";
  if (a.dry_run) return kExitOk;

  GridOptions opt;
  opt.jobs = a.jobs;
  opt.cancel = cancel;
  opt.progress = [&](const ProgressEvent& e) { out << ProgressLine(e) << std::endl; };
  const GridResult r = RunGrid(cells, opt);
  out << "runs executed " << r.executed << ", skipped " << r.skipped << ", failed " << r.failed;
  if (r.interrupted > 0) out << ", interrupted " << r.interrupted;
  out << "\nrecords under " << cells.front().out_dir << "\n";
  if (r.failed > 0) {
    err << "error: " << r.failed << " run(s) aborted on a numerical failure\n";
    return kExitRuntime;
  }
  if (r.interrupted > 0) {
    err << "interrupted: rerun the same command to resume\n";
    return kExitRuntime;
  }
  return kExitOk;
}

std::vector<CellSummary> LoadSummaries(const ReportArgs& a, std::ostream& err) {
  const fs::path dir = a.records.empty() ? fs::path(DefaultRoot()) : fs::path(a.records);
  if (!fs::is_directory(dir)) throw InvalidInput("records directory '" + dir.string() + "' does not exist");
  std::vector<std::string> warnings;
  const std::vector<RunRecord> recs = LoadRecords(dir, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  if (recs.empty()) throw InvalidInput("no records found under '" + dir.string() + "'");
  if (a.max_points < 2) throw InvalidInput("--max-points: must be at least 2");
  SummaryOptions opt;
  opt.student_t = a.student_t;
  opt.max_points = a.max_points;
  return Summarize(recs, opt);
}

fs::path OutputDir(const ReportArgs& a) {
  fs::path dir = !a.out.empty() ? fs::path(a.out)
                 : a.records.empty() ? fs::path(DefaultRoot())
                                     : fs::path(a.records);
  fs::create_directories(dir);
  return dir;
}

int Summarize(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const auto cells = LoadSummaries(a, err);
  const fs::path dir = OutputDir(a);
  const std::string text = RenderSummaryText(cells);
  WriteText(dir / "summary.csv", RenderSummaryCsv(cells));
  WriteText(dir / "summary.txt", text);
  out << text;
  if (a.student_t) out << "(half-widths use the Student t quantile)\n";
  out << "wrote " << (dir / "summary.csv").string() << " and " << (dir / "summary.txt").string() << "\n";
  return kExitOk;
}

int Plot(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const auto cells = LoadSummaries(a, err);
  const fs::path dir = OutputDir(a);
  for (const auto& c : cells) {
    const fs::path svg = dir / (c.experiment.cell + ".svg");
    const fs::path data = dir / (c.experiment.cell + ".csv");
    WriteText(svg, RenderCurveSvg(c));
    WriteText(data, RenderCurveData(c));
    out << "wrote " << svg.string() << " and " << data.string() << "\n";
  }
  return kExitOk;
}

int Replay(const std::string& path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open trace '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  if (content.find_first_not_of(" \t\r\n") == std::string::npos) throw InvalidInput("trace '" + path + "' is empty");
  std::istringstream peek(content);
  const std::string game = PeekTraceGame(peek);
  std::istringstream body(content);
  if (game == "negotiation") {
    out << RenderNegotiationTranscript(ReadNegotiationTrace(body));
  } else if (game == "seqguess") {
    out << RenderSeqGuessTranscript(ReadSeqGuessTrace(body));
  } else {
    throw InvalidInput("trace '" + path + "': unknown game '" + game + "'");
  }
  return kExitOk;
}

void AddReportOptions(CLI::App* cmd, ReportArgs& a) {
  cmd->add_option("records", a.records, "records directory (default $" + std::string(kOutputRootEnv) + " or ./runs)");
  cmd->add_option("--out", a.out, "where to write the outputs (default: the records directory)");
  cmd->add_flag("--t", a.student_t, "Student t half-widths instead of the normal 1.96");
  cmd->add_option("--max-points", a.max_points, "curve points per cell")->capture_default_str();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           const std::atomic<bool>* cancel) {
  CLI::App app{"Positive-signaling experiments: train, summarize, plot and replay.", "posig"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 ok, 1 invalid input, 2 runtime failure. $" + std::string(kOutputRootEnv) +
             " sets the default output root.");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "run every cell of a configuration for several seeds");
  train_cmd->add_option("--config", train.config, "configuration file")->required();
  train_cmd->add_option("--runs", train.runs, "runs per cell (overrides experiment.runs)");
  train_cmd->add_option("--seed", train.seed, "seed of run 0 (overrides experiment.seed)");
  train_cmd->add_option("--jobs", train.jobs, "runs trained concurrently")->capture_default_str();
  train_cmd->add_option("--out", train.out, "output root (overrides experiment.out)");
  train_cmd->add_flag("--dry-run", train.dry_run, "print the resolved configuration and exit");
  train_cmd->add_option("--set", train.set, "extra override section.key=value (repeatable)");
  train_cmd->footer("Configuration keys:\n" + ConfigKeyHelp());

  ReportArgs summarize, plot;
  CLI::App* sum_cmd = app.add_subcommand("summarize", "best mini-batch table of every cell");
  AddReportOptions(sum_cmd, summarize);
  CLI::App* plot_cmd = app.add_subcommand("plot", "learning curve image and data file per cell");
  AddReportOptions(plot_cmd, plot);

  std::string trace;
  CLI::App* replay_cmd = app.add_subcommand("replay", "print an episode trace turn by turn");
  replay_cmd->add_option("trace", trace, "trace file (.jsonl)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (train_cmd->parsed()) return Train(train, out, err, cancel);
    if (sum_cmd->parsed()) return Summarize(summarize, out, err);
    if (plot_cmd->parsed()) return Plot(plot, out, err);
    if (replay_cmd->parsed()) return Replay(trace, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace posig
