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

#include "posig/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "posig/errors.hpp"

namespace posig {

const char* GameName(GameId g) {
  return g == GameId::kNegotiation ? "negotiation" : "seqguess";
}

GameId ParseGameId(const std::string& s) {
  if (s == "negotiation") return GameId::kNegotiation;
  if (s == "seqguess") return GameId::kSeqGuess;
  throw InvalidInput("unknown game '" + s + "' (expected negotiation or seqguess)");
}

double ExperimentConfig::resolved_h_target() const {
  return trainer.h_target.value_or(0.1 * std::log(static_cast<double>(seqguess.alphabet)));
}

void ExperimentConfig::Validate() const {
  if (cell.empty()) throw InvalidInput("experiment.name: must not be empty");
  for (char c : cell)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      throw InvalidInput("experiment.name: '" + cell + "' may only use letters, digits, '_', '-', '.'");
  if (n_runs < 1) throw InvalidInput("experiment.runs: must be at least 1");
  if (checkpoint_every < 1) throw InvalidInput("experiment.checkpoint_every: must be at least 1");
  if (progress_every < 0) throw InvalidInput("experiment.progress_every: must be nonnegative");
  if (game == GameId::kNegotiation) {
    negotiation.Validate();
  } else {
    seqguess.Validate();
    if (trainer.interagent_gradients && seqguess.message_kind == MessageKind::kDiscrete)
      throw InvalidInput(
          "trainer.interagent_gradients: not available with discrete messages");
    if (trainer.shared_agent_params)
      throw InvalidInput("trainer.shared_agent_params: Negotiation only");
  }
  trainer.Validate(continuous_messages());
}

// ---------------------------------------------------------------------------
// Key registry

namespace {

enum class Scope { kAll, kNegotiation, kSeqGuess };

struct KeySpec {
  std::string key;
  Scope scope;
  std::string doc;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

[[noreturn]] void BadValue(const std::string& key, const std::string& want, const std::string& v) {
  throw InvalidInput(key + ": expected " + want + ", got '" + v + "'");
}

template <typename I>
I ParseInt(const std::string& key, const std::string& v) {
  I out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) BadValue(key, "an integer", v);
  return out;
}

double ParseDouble(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    BadValue(key, "a finite number", v);
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  BadValue(key, "true or false", v);
}

std::string Bool(bool b) { return b ? "true" : "false"; }

template <typename F>
KeySpec Int(std::string key, Scope scope, std::string doc, F field) {
  return {key, scope, doc,
          [key, field](ExperimentConfig& c, const std::string& v) {
            auto& f = field(c);
            f = ParseInt<std::remove_reference_t<decltype(f)>>(key, v);
          },
          [field](const ExperimentConfig& c) {
            return std::to_string(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename F>
KeySpec Real(std::string key, Scope scope, std::string doc, F field) {
  return {key, scope, doc,
          [key, field](ExperimentConfig& c, const std::string& v) { field(c) = ParseDouble(key, v); },
          [field](const ExperimentConfig& c) {
            return FormatDouble(field(const_cast<ExperimentConfig&>(c)));
          }};
}

template <typename F>
KeySpec Flag(std::string key, Scope scope, std::string doc, F field) {
  return {key, scope, doc,
          [key, field](ExperimentConfig& c, const std::string& v) { field(c) = ParseBool(key, v); },
          [field](const ExperimentConfig& c) { return Bool(field(const_cast<ExperimentConfig&>(c))); }};
}

#define POSIG_FIELD(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const std::vector<KeySpec>& Keys() {
  static const std::vector<KeySpec> keys = [] {
    const Scope all = Scope::kAll, neg = Scope::kNegotiation, sg = Scope::kSeqGuess;
    std::vector<KeySpec> k;
    // Resolution reads these two before everything else.
    k.push_back({"experiment.game", all, "negotiation | seqguess",
                 [](ExperimentConfig& c, const std::string& v) { c.game = ParseGameId(v); },
                 [](const ExperimentConfig& c) { return std::string(GameName(c.game)); }});
    k.push_back({"seqguess.message_kind", sg, "continuous | discrete",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.seqguess.message_kind = ParseMessageKind(v);
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(MessageKindName(c.seqguess.message_kind));
                 }});
    k.push_back({"experiment.name", all, "cell name when the file has no [cell] sections",
                 [](ExperimentConfig& c, const std::string& v) { c.cell = v; },
                 [](const ExperimentConfig& c) { return c.cell; }});
    k.push_back(Int("experiment.runs", all, "independent runs per cell", POSIG_FIELD(c.n_runs)));
    k.push_back(Int("experiment.seed", all, "seed of run 0; run i uses seed + i",
                    POSIG_FIELD(c.seed_base)));
    k.push_back({"experiment.out", all, "output root (default $POSIG_OUT or ./runs)",
                 [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const ExperimentConfig& c) { return c.out_dir; }});
    k.push_back(Int("experiment.checkpoint_every", all, "iterations between checkpoints",
                    POSIG_FIELD(c.checkpoint_every)));
    k.push_back(Int("experiment.progress_every", all, "iterations between progress lines (0: off)",
                    POSIG_FIELD(c.progress_every)));

    k.push_back(Int("negotiation.items", neg, "items k", POSIG_FIELD(c.negotiation.items)));
    k.push_back(Int("negotiation.message_dim", neg, "message components n",
                    POSIG_FIELD(c.negotiation.message_dim)));
    k.push_back(Int("negotiation.max_turns", neg, "move limit T", POSIG_FIELD(c.negotiation.max_turns)));
    k.push_back(Real("negotiation.punishment", neg, "reward when no deal is reached",
                     POSIG_FIELD(c.negotiation.punishment)));

    k.push_back(Int("seqguess.alphabet", sg, "alphabet size A", POSIG_FIELD(c.seqguess.alphabet)));
    k.push_back(Int("seqguess.length", sg, "target length k", POSIG_FIELD(c.seqguess.length)));
    k.push_back(Int("seqguess.max_turns", sg, "guess limit T", POSIG_FIELD(c.seqguess.max_turns)));
    k.push_back(Int("seqguess.message_length", sg, "symbols per discrete message P",
                    POSIG_FIELD(c.seqguess.message_length)));
    k.push_back(Int("seqguess.message_dim", sg, "components per continuous message n",
                    POSIG_FIELD(c.seqguess.message_dim)));
    k.push_back(Real("seqguess.time_penalty", sg, "reward lost per extra guess",
                     POSIG_FIELD(c.seqguess.time_penalty)));

    k.push_back(Flag("trainer.rc", all, "reinforce the message log-probabilities",
                     POSIG_FIELD(c.trainer.rc_enabled)));
    k.push_back(Flag("trainer.ps", all, "positive signaling loss", POSIG_FIELD(c.trainer.ps_enabled)));
    k.push_back(Flag("trainer.interagent_gradients", all,
                     "differentiate through continuous messages",
                     POSIG_FIELD(c.trainer.interagent_gradients)));
    k.push_back(Flag("trainer.channel_ablated", all, "receivers only ever see the initial message",
                     POSIG_FIELD(c.trainer.channel_ablated)));
    k.push_back(Flag("trainer.shared_agent_params", neg, "both negotiators use one network",
                     POSIG_FIELD(c.trainer.shared_agent_params)));
    k.push_back(Int("trainer.batch_size", all, "episodes per iteration",
                    POSIG_FIELD(c.trainer.batch_size)));
    k.push_back(Int("trainer.iterations", all, "iterations per run", POSIG_FIELD(c.trainer.iterations)));
    k.push_back(Int("trainer.hidden", all, "LSTM and dense width", POSIG_FIELD(c.trainer.hidden)));
    k.push_back(Real("trainer.lr", all, "Adam learning rate", POSIG_FIELD(c.trainer.lr)));
    k.push_back(Flag("trainer.lr_drop", neg, "latch lr_after_threshold once the return reaches lr_threshold",
                     POSIG_FIELD(c.trainer.lr_drop)));
    k.push_back(Real("trainer.lr_after_threshold", neg, "learning rate after the drop",
                     POSIG_FIELD(c.trainer.lr_after_threshold)));
    k.push_back(Real("trainer.lr_threshold", neg, "mean return that triggers the drop",
                     POSIG_FIELD(c.trainer.lr_threshold)));
    k.push_back(Real("trainer.clip_norm", all, "global gradient norm clip (0: off)",
                     POSIG_FIELD(c.trainer.clip_norm)));
    k.push_back(Real("trainer.weight_decay", all, "decoupled weight decay",
                     POSIG_FIELD(c.trainer.weight_decay)));
    k.push_back(Real("trainer.beta1", all, "Adam beta1", POSIG_FIELD(c.trainer.beta1)));
    k.push_back(Real("trainer.beta2", all, "Adam beta2", POSIG_FIELD(c.trainer.beta2)));
    k.push_back(Real("trainer.lambda1", all, "repulsion slope", POSIG_FIELD(c.trainer.lambda1)));
    k.push_back(Real("trainer.lambda2", all, "repulsion height", POSIG_FIELD(c.trainer.lambda2)));
    k.push_back(Real("trainer.lambda_ib", all, "weight of the PS term against RC",
                     POSIG_FIELD(c.trainer.lambda_ib)));
    k.push_back(Real("trainer.lambda_ps", sg, "weight of the per-state entropy target (discrete)",
                     POSIG_FIELD(c.trainer.lambda_ps)));
    k.push_back({"trainer.h_target", sg, "per-state entropy target (discrete; default 0.1 ln A)",
                 [](ExperimentConfig& c, const std::string& v) {
                   c.trainer.h_target = ParseDouble("trainer.h_target", v);
                 },
                 [](const ExperimentConfig& c) { return FormatDouble(c.resolved_h_target()); }});
    k.push_back(Real("trainer.baseline_momentum", sg, "moving-average baseline momentum",
                     POSIG_FIELD(c.trainer.baseline_momentum)));
    return k;
  }();
  return keys;
}

#undef POSIG_FIELD

const KeySpec* FindKey(const std::string& key) {
  for (const auto& k : Keys())
    if (k.key == key) return &k;
  return nullptr;
}

bool Applies(Scope s, GameId g) {
  return s == Scope::kAll || (s == Scope::kNegotiation) == (g == GameId::kNegotiation);
}

std::string Trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Text form

ConfigText ParseConfigText(const std::string& text, const std::string& origin) {
  ConfigText out;
  std::istringstream in(text);
  std::string line, section;
  std::vector<ConfigEntry>* target = &out.shared;
  std::set<std::string> cell_names;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InvalidInput(where + ": unterminated section header");
      const std::string name = Trim(line.substr(1, line.size() - 2));
      if (name.rfind("cell", 0) == 0 && (name.size() == 4 || name[4] == ' ')) {
        const std::string cell = Trim(name.substr(4));
        if (cell.empty()) throw InvalidInput(where + ": [cell] needs a name");
        if (!cell_names.insert(cell).second)
          throw InvalidInput(where + ": duplicate cell '" + cell + "'");
        out.cells.push_back({cell, {}});
        target = &out.cells.back().second;
        section.clear();
      } else if (name == "experiment" || name == "negotiation" || name == "seqguess" ||
                 name == "trainer") {
        if (!out.cells.empty())
          throw InvalidInput(where + ": shared section [" + name + "] after a [cell] section");
        section = name;
        target = &out.shared;
      } else {
        throw InvalidInput(where + ": unknown section [" + name + "]");
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw InvalidInput(where + ": expected 'key = value'");
    std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidInput(where + ": missing key");
    if (target == &out.shared) {
      if (section.empty()) throw InvalidInput(where + ": key '" + key + "' outside any section");
      if (key.find('.') != std::string::npos)
        throw InvalidInput(where + ": unknown key '" + section + "." + key + "'");
      key = section + "." + key;
    }
    if (FindKey(key) == nullptr) throw InvalidInput(where + ": unknown key '" + key + "'");
    for (const auto& e : *target)
      if (e.key == key) throw InvalidInput(where + ": duplicate key '" + key + "' (first at " + e.origin + ")");
    target->push_back({key, value, where});
  }
  return out;
}

ConfigEntry ParseOverride(const std::string& s) {
  const size_t eq = s.find('=');
  if (eq == std::string::npos) throw InvalidInput("override '" + s + "': expected section.key=value");
  ConfigEntry e{Trim(s.substr(0, eq)), Trim(s.substr(eq + 1)), "override"};
  if (FindKey(e.key) == nullptr) throw InvalidInput("override: unknown key '" + e.key + "'");
  return e;
}

namespace {

ExperimentConfig ResolveCell(const std::string& name, const std::vector<const ConfigEntry*>& entries) {
  // Later entries win; the game and message kind pick the defaults.
  std::map<std::string, const ConfigEntry*> last;
  for (const ConfigEntry* e : entries) last[e->key] = e;
  ExperimentConfig c;
  auto apply = [&](const ConfigEntry& e) {
    const KeySpec* k = FindKey(e.key);
    if (k == nullptr) throw InvalidInput(e.origin + ": unknown key '" + e.key + "'");
    if (!Applies(k->scope, c.game))
      throw InvalidInput(e.origin + ": " + e.key + " does not apply to game " + GameName(c.game));
    try {
      k->set(c, e.value);
    } catch (const InvalidInput& err) {
      throw InvalidInput(e.origin + ": " + err.what());
    }
  };
  if (auto it = last.find("experiment.game"); it != last.end()) apply(*it->second);
  if (c.game == GameId::kSeqGuess)
    if (auto it = last.find("seqguess.message_kind"); it != last.end()) apply(*it->second);
  c.trainer = c.game == GameId::kNegotiation ? TrainerConfig::NegotiationDefaults()
                                             : TrainerConfig::SeqGuessDefaults(c.seqguess.message_kind);
  for (const auto& [key, e] : last)
    if (key != "experiment.game" && key != "seqguess.message_kind") apply(*e);
  if (!name.empty()) c.cell = name;
  c.Validate();
  return c;
}

}  // namespace

std::vector<ExperimentConfig> ResolveExperiments(const ConfigText& text,
                                                 const std::vector<ConfigEntry>& overrides) {
  std::vector<ExperimentConfig> out;
  auto gather = [&](const std::vector<ConfigEntry>* cell) {
    std::vector<const ConfigEntry*> all;
    for (const auto& e : text.shared) all.push_back(&e);
    if (cell != nullptr)
      for (const auto& e : *cell) all.push_back(&e);
    for (const auto& e : overrides) all.push_back(&e);
    return all;
  };
  if (text.cells.empty()) {
    out.push_back(ResolveCell("", gather(nullptr)));
  } else {
    for (const auto& [name, entries] : text.cells) out.push_back(ResolveCell(name, gather(&entries)));
  }
  return out;
}

std::vector<ExperimentConfig> LoadExperimentFile(const std::filesystem::path& path,
                                                 const std::vector<ConfigEntry>& overrides) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ResolveExperiments(ParseConfigText(buf.str(), path.string()), overrides);
}

std::string RenderResolved(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "# resolved configuration of cell '" << c.cell << "'\n";
  std::string section;
  for (const auto& k : Keys()) {
    if (!Applies(k.scope, c.game)) continue;
    const std::string sec = k.key.substr(0, k.key.find('.'));
    if (sec != section) {
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << k.key.substr(sec.size() + 1) << " = " << k.get(c) << "\n";
  }
  out << "# fixed: initial message = 0 in every component\n";
  if (c.game == GameId::kSeqGuess) out << "# fixed: reported returns are shifted\n";
  return out.str();
}

std::string ConfigKeyHelp() {
  std::ostringstream out;
  for (const auto& k : Keys()) {
    out << "  " << k.key;
    for (size_t i = k.key.size(); i < 32; ++i) out << ' ';
    out << k.doc;
    if (k.scope == Scope::kNegotiation) out << " [negotiation]";
    if (k.scope == Scope::kSeqGuess) out << " [seqguess]";
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

NegotiationConfig NegotiationFromJson(const nlohmann::json& j) {
  NegotiationConfig c;
  c.items = j.at("items");
  c.message_dim = j.at("message_dim");
  c.max_turns = j.at("max_turns");
  c.punishment = j.at("punishment");
  return c;
}

SeqGuessConfig SeqGuessFromJson(const nlohmann::json& j) {
  SeqGuessConfig c;
  c.alphabet = j.at("alphabet");
  c.length = j.at("length");
  c.max_turns = j.at("max_turns");
  c.message_kind = ParseMessageKind(j.at("message_kind"));
  c.message_length = j.at("message_length");
  c.message_dim = j.at("message_dim");
  c.time_penalty = j.at("time_penalty");
  return c;
}

TrainerConfig TrainerFromJson(const nlohmann::json& j) {
  TrainerConfig c;
  c.rc_enabled = j.at("rc");
  c.ps_enabled = j.at("ps");
  c.interagent_gradients = j.at("interagent_gradients");
  c.channel_ablated = j.at("channel_ablated");
  c.shared_agent_params = j.at("shared_agent_params");
  c.batch_size = j.at("batch_size");
  c.iterations = j.at("iterations");
  c.hidden = j.at("hidden");
  c.lr = j.at("lr");
  c.lr_drop = j.at("lr_drop");
  c.lr_after_threshold = j.at("lr_after_threshold");
  c.lr_threshold = j.at("lr_threshold");
  c.clip_norm = j.at("clip_norm");
  c.weight_decay = j.at("weight_decay");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.lambda1 = j.at("lambda1");
  c.lambda2 = j.at("lambda2");
  c.lambda_ib = j.at("lambda_ib");
  c.lambda_ps = j.at("lambda_ps");
  c.baseline_momentum = j.at("baseline_momentum");
  if (!j.at("h_target").is_null()) c.h_target = j.at("h_target").get<double>();
  return c;
}

}  // namespace

nlohmann::json IdentityJson(const ExperimentConfig& c) {
  nlohmann::json j = {{"cell", c.cell},
                      {"game", GameName(c.game)},
                      {"trainer", ToJson(c.trainer)},
                      {"seed", c.seed_base}};
  if (c.game == GameId::kNegotiation) {
    j["negotiation"] = ToJson(c.negotiation);
  } else {
    j["seqguess"] = ToJson(c.seqguess);
  }
  return j;
}

nlohmann::json ToJson(const ExperimentConfig& c) {
  nlohmann::json j = IdentityJson(c);
  j["runs"] = c.n_runs;
  j["out"] = c.out_dir;
  j["checkpoint_every"] = c.checkpoint_every;
  j["progress_every"] = c.progress_every;
  return j;
}

ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    c.cell = j.at("cell");
    c.game = ParseGameId(j.at("game"));
    c.trainer = TrainerFromJson(j.at("trainer"));
    c.seed_base = j.at("seed");
    if (c.game == GameId::kNegotiation) {
      c.negotiation = NegotiationFromJson(j.at("negotiation"));
    } else {
      c.seqguess = SeqGuessFromJson(j.at("seqguess"));
    }
    c.n_runs = j.at("runs");
    c.out_dir = j.at("out");
    c.checkpoint_every = j.at("checkpoint_every");
    c.progress_every = j.at("progress_every");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
}

}  // namespace posig
