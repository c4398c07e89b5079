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

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "posig/errors.hpp"

namespace posig::trace_io {

inline constexpr const char* kFormat = "posig-trace";
inline constexpr int kVersion = 1;

inline void WriteHeader(std::ostream& out, nlohmann::json fields) {
  fields["format"] = kFormat;
  fields["version"] = kVersion;
  out << fields.dump() << '\n';
}

struct Lines {
  nlohmann::json header;
  std::vector<nlohmann::json> body;
};

inline Lines ReadLines(std::istream& in, const std::string& game) {
  Lines out;
  std::string line;
  bool have_header = false;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object())
      throw InvalidInput("trace line " + std::to_string(number) + " is not a JSON object");
    if (!have_header) {
      if (j.value("format", "") != kFormat)
        throw InvalidInput("trace: missing header");
      if (j.value("version", -1) != kVersion)
        throw InvalidInput("trace: unsupported version " + j.value("version", nlohmann::json()).dump());
      if (j.value("game", "") != game)
        throw InvalidInput("trace: expected game " + game + ", got " + j.value("game", std::string("?")));
      out.header = std::move(j);
      have_header = true;
    } else {
      out.body.push_back(std::move(j));
    }
  }
  if (!have_header) throw InvalidInput("trace: empty input");
  return out;
}

// Reads only the game name from a header line, for dispatch.
inline std::string PeekGame(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != kFormat)
      throw InvalidInput("trace: missing header");
    return j.value("game", "");
  }
  throw InvalidInput("trace: empty input");
}

}  // namespace posig::trace_io
