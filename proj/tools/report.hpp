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

// Learning-curve plots and episode transcripts.

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "posig/experiment_runner.hpp"
#include "posig/negotiation_env.hpp"
#include "posig/seqguess_env.hpp"

namespace posig {

// Mean line with a 95% band over the cell's curve grid.
std::string RenderCurveSvg(const CellSummary& s);

// The plotted numbers: `#` comment lines, then
// iteration,mean,ci95_half_width,lower,upper with shortest round-trip numbers.
std::string RenderCurveData(const CellSummary& s);

struct CurveData {
  std::vector<int64_t> iteration;
  std::vector<double> mean;
  std::vector<std::optional<double>> half_width;
};
CurveData ParseCurveData(std::istream& in);

std::string RenderNegotiationTranscript(const NegotiationTrace& t);
std::string RenderSeqGuessTranscript(const SeqGuessTrace& t);

}  // namespace posig
