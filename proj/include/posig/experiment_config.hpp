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

// Experiment configuration and its text form.
//
// The file format is flat `key = value` lines under `[section]` headers:
//
//   [experiment]
//   game = seqguess
//   runs = 5
//   [seqguess]
//   message_kind = continuous
//   [trainer]
//   batch_size = 256
//   [cell rc_ps]
//   trainer.rc = true
//
// `[cell NAME]` sections declare grid cells; their keys are qualified
// (`section.key`) and override the shared sections. Without any cell section
// the file describes a single cell named by `experiment.name`. Unknown keys,
// duplicate keys and keys that do not apply to the cell's game are errors.
// `#` starts a comment.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "posig/negotiation_env.hpp"
#include "posig/reinforce_trainer.hpp"
#include "posig/seqguess_env.hpp"

namespace posig {

enum class GameId { kNegotiation, kSeqGuess };
const char* GameName(GameId g);
GameId ParseGameId(const std::string& s);

struct ExperimentConfig {
  std::string cell = "main";
  GameId game = GameId::kNegotiation;
  NegotiationConfig negotiation;
  SeqGuessConfig seqguess;
  TrainerConfig trainer = TrainerConfig::NegotiationDefaults();
  int n_runs = 30;
  uint64_t seed_base = 0;
  std::string out_dir = "runs";
  int64_t checkpoint_every = 1000;
  int64_t progress_every = 100;

  // Throws InvalidInput naming the offending key.
  void Validate() const;
  bool continuous_messages() const {
    return game == GameId::kNegotiation || seqguess.message_kind == MessageKind::kContinuous;
  }
  // Sequence Guess returns are reported shifted, Negotiation returns raw.
  bool shifted_scale() const { return game == GameId::kSeqGuess; }
  // 0.1 ln A unless set explicitly.
  double resolved_h_target() const;
};

nlohmann::json ToJson(const ExperimentConfig& c);
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
// The part of the configuration that determines results: everything except
// the run count, output location and logging cadence.
nlohmann::json IdentityJson(const ExperimentConfig& c);

struct ConfigEntry {
  std::string key;  // qualified, "section.key"
  std::string value;
  std::string origin;  // "file:line" for messages
};

struct ConfigText {
  std::vector<ConfigEntry> shared;
  std::vector<std::pair<std::string, std::vector<ConfigEntry>>> cells;
};

// Throws InvalidInput with "origin:line: ..." on syntax errors.
ConfigText ParseConfigText(const std::string& text, const std::string& origin);

// Resolves every cell: game defaults first, then shared keys, cell keys and
// finally `overrides` (applied to every cell). Each result is validated.
std::vector<ExperimentConfig> ResolveExperiments(const ConfigText& text,
                                                 const std::vector<ConfigEntry>& overrides = {});
std::vector<ExperimentConfig> LoadExperimentFile(const std::filesystem::path& path,
                                                 const std::vector<ConfigEntry>& overrides = {});

// Parses "section.key=value".
ConfigEntry ParseOverride(const std::string& s);

// Fully resolved configuration of one cell in the file format, including
// every default that was not written in the file.
std::string RenderResolved(const ExperimentConfig& c);

// One line per accepted key with its documentation.
std::string ConfigKeyHelp();

}  // namespace posig
