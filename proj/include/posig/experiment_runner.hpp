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

// Grid execution, run records and summary statistics.
//
// Layout under an output root:
//   manifest.json                     cell -> run status
//   <cell>/run_003.records.jsonl      header line + one line per iteration
//   <cell>/run_003.ckpt               latest checkpoint (final weights when done)
//   <cell>/run_003.trace.jsonl        one sampled episode of the final policy

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "posig/experiment_config.hpp"
#include "posig/reinforce_trainer.hpp"

namespace posig {

inline constexpr const char* kRecordFormat = "posig-records";
inline constexpr int kRecordVersion = 1;
inline constexpr const char* kManifestFormat = "posig-manifest";
inline constexpr int kManifestVersion = 1;

struct RunRecord {
  ExperimentConfig experiment;
  int run = 0;
  uint64_t seed = 0;
  std::vector<IterationStats> iterations;
  std::vector<double> wall_clock;  // seconds since the run started, per iteration
  bool completed = false;
  std::string failure;  // set when training aborted

  // Reported per-iteration return: shifted for Sequence Guess, raw otherwise.
  double Reported(const IterationStats& s) const;
};

std::string RecordFileName(int run);  // "run_003.records.jsonl"

nlohmann::json RecordHeader(const RunRecord& r);
nlohmann::json RecordLine(const IterationStats& s, double wall_clock);
nlohmann::json RecordFooter(const RunRecord& r);

void WriteRunRecord(std::ostream& out, const RunRecord& r);
void PersistRunRecord(const RunRecord& r, const std::filesystem::path& path);

// Throws InvalidInput on a missing or foreign header, a schema version
// mismatch, or a corrupt line before the last. A partial final line is
// dropped and reported through `warnings`.
RunRecord ReadRunRecord(std::istream& in, const std::string& origin,
                        std::vector<std::string>* warnings = nullptr);
RunRecord LoadRunRecord(const std::filesystem::path& path,
                        std::vector<std::string>* warnings = nullptr);
// Every *.records.jsonl below `dir`, in path order.
std::vector<RunRecord> LoadRecords(const std::filesystem::path& dir,
                                   std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Grid execution

struct ProgressEvent {
  enum class Kind { kStarted, kResumed, kSkipped, kIteration, kFinished, kFailed, kInterrupted };
  Kind kind = Kind::kStarted;
  std::string cell;
  int run = 0;
  std::optional<IterationStats> stats;
  std::string message;
};

struct GridOptions {
  int jobs = 1;
  // Called under a lock, so callbacks may write to shared streams.
  std::function<void(const ProgressEvent&)> progress;
  // Number of episode traces written per finished run.
  int traces = 1;
  // When set, running runs checkpoint and stop after their current iteration
  // and no further runs start; they resume on the next call.
  const std::atomic<bool>* cancel = nullptr;
};

struct GridResult {
  int executed = 0;
  int skipped = 0;
  int failed = 0;
  int interrupted = 0;  // stopped by cancel, including runs never started
  std::vector<std::filesystem::path> records;
};

// Runs every cell for experiment.runs seeds (seed = base + run index). Runs the
// manifest lists as finished are skipped; interrupted runs continue from their
// last checkpoint. All cells must share one output root. Throws InvalidInput
// if the manifest describes a cell with a different configuration.
GridResult RunGrid(const std::vector<ExperimentConfig>& cells, const GridOptions& options = {});

// Status of every run in a manifest: cell -> run index ->
// "done" | "failed" | "running" | "interrupted".
std::map<std::string, std::map<int, std::string>> ReadManifest(const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Statistics

struct Interval {
  double mean = 0.0;
  std::optional<double> half_width;  // absent for a single value
};

// Normal approximation 1.96 sd / sqrt(R) with the sample sd, or the
// Student-t quantile with R - 1 degrees of freedom when `student_t` is set.
Interval MeanInterval(std::span<const double> values, bool student_t = false);

struct SummaryOptions {
  bool student_t = false;
  int max_points = 2000;
};

struct CellSummary {
  ExperimentConfig experiment;
  int runs = 0;
  std::vector<uint64_t> seeds;
  std::vector<double> best;  // best mini-batch per run
  Interval best_interval;
  std::vector<int64_t> grid;  // curve iterations
  std::vector<double> curve_mean;
  std::vector<std::optional<double>> curve_half_width;

  const char* scale() const { return experiment.shifted_scale() ? "shifted" : "raw"; }
};

// Max over iterations of the reported mini-batch mean; failed iterations do
// not count. NaN for a run without a valid iteration.
double BestMinibatch(const RunRecord& r);

// Groups records by cell. The curve grid covers the iterations every run of
// the cell reached, subsampled uniformly to at most max_points.
std::vector<CellSummary> Summarize(const std::vector<RunRecord>& records,
                                   const SummaryOptions& options = {});

// Column of the summary table for a cell: "RC", "PS", "RC and PS", "No loss"
// or "No channel".
std::string TableColumn(const ExperimentConfig& c);
// Row label within an IG block: "Negotiation", "CM Sequence Guess", ...
std::string TableGame(const ExperimentConfig& c);

std::string RenderSummaryCsv(const std::vector<CellSummary>& cells);
std::string RenderSummaryText(const std::vector<CellSummary>& cells);

}  // namespace posig
