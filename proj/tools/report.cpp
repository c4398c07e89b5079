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

#include "report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "posig/errors.hpp"

namespace posig {

namespace {

std::string Shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string Fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step for about `target` ticks over [lo, hi].
double TickStep(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  if (!(raw > 0.0)) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

std::string Vec(const std::vector<double>& v, const char* f = "%.2f") {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + Fmt(f, v[i]);
  return s + "]";
}

}  // namespace

// ---------------------------------------------------------------------------
// Curves

std::string RenderCurveSvg(const CellSummary& s) {
  const double W = 720, H = 440, L = 70, R = 20, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;

  double ylo = INFINITY, yhi = -INFINITY;
  for (size_t i = 0; i < s.grid.size(); ++i) {
    if (!std::isfinite(s.curve_mean[i])) continue;
    const double hw = s.curve_half_width[i].value_or(0.0);
    ylo = std::min(ylo, s.curve_mean[i] - hw);
    yhi = std::max(yhi, s.curve_mean[i] + hw);
  }
  if (!std::isfinite(ylo)) {
    ylo = 0.0;
    yhi = 1.0;
  }
  if (yhi - ylo < 1e-9) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double ystep = TickStep(ylo, yhi, 6);
  ylo = std::floor(ylo / ystep) * ystep;
  yhi = std::ceil(yhi / ystep) * ystep;
  const double xlo = s.grid.empty() ? 0.0 : static_cast<double>(s.grid.front());
  double xhi = s.grid.empty() ? 1.0 : static_cast<double>(s.grid.back());
  if (xhi <= xlo) xhi = xlo + 1.0;
  auto X = [&](double x) { return L + (x - xlo) / (xhi - xlo) * pw; };
  auto Y = [&](double y) { return T + (yhi - y) / (yhi - ylo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << Escape(s.experiment.cell + " (" + TableGame(s.experiment) + ", " + TableColumn(s.experiment) +
              (s.experiment.trainer.interagent_gradients ? ", IG" : ", no IG") + ")")
    << "</text>\n";

  // Grid and ticks.
  for (double y = ylo; y <= yhi + ystep * 1e-6; y += ystep) {
    o << "<line x1=\"" << L << "\" x2=\"" << L + pw << "\" y1=\"" << Fmt("%.2f", Y(y)) << "\" y2=\""
      << Fmt("%.2f", Y(y)) << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << L - 6 << "\" y=\"" << Fmt("%.2f", Y(y) + 4) << "\" text-anchor=\"end\">"
      << Fmt("%.2f", std::fabs(y) < ystep * 1e-6 ? 0.0 : y) << "</text>\n";
  }
  const double xstep = TickStep(xlo, xhi, 6);
  for (double x = std::ceil(xlo / xstep) * xstep; x <= xhi + xstep * 1e-6; x += xstep) {
    o << "<line x1=\"" << Fmt("%.2f", X(x)) << "\" x2=\"" << Fmt("%.2f", X(x)) << "\" y1=\"" << T
      << "\" y2=\"" << T + ph << "\" stroke=\"#f0f0f0\"/>\n";
    o << "<text x=\"" << Fmt("%.2f", X(x)) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
      << Fmt("%.0f", x) << "</text>\n";
  }
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Band, then mean.
  std::string upper, lower;
  for (size_t i = 0; i < s.grid.size(); ++i) {
    if (!std::isfinite(s.curve_mean[i]) || !s.curve_half_width[i]) continue;
    const double x = X(static_cast<double>(s.grid[i]));
    upper += Fmt("%.2f", x) + "," + Fmt("%.2f", Y(s.curve_mean[i] + *s.curve_half_width[i])) + " ";
    lower = Fmt("%.2f", x) + "," + Fmt("%.2f", Y(s.curve_mean[i] - *s.curve_half_width[i])) + " " + lower;
  }
  if (!upper.empty())
    o << "<polygon points=\"" << upper << lower << "\" fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
  std::string line;
  for (size_t i = 0; i < s.grid.size(); ++i) {
    if (!std::isfinite(s.curve_mean[i])) continue;
    line += Fmt("%.2f", X(static_cast<double>(s.grid[i]))) + "," + Fmt("%.2f", Y(s.curve_mean[i])) + " ";
  }
  o << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";

  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 22 << "\" text-anchor=\"middle\">iteration</text>\n";
  o << "<text transform=\"translate(18," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << (s.experiment.shifted_scale() ? "shifted mean return" : "mean return") << "</text>\n";
  o << "<text x=\"" << L << "\" y=\"" << H - 6 << "\" font-size=\"10\">line: mean of the mini-batch return over "
    << s.runs << (s.runs == 1 ? " run" : " runs")
    << "; band: 95% CI across runs of the per-iteration means</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::string RenderCurveData(const CellSummary& s) {
  std::ostringstream o;
  o << "# cell " << s.experiment.cell << "\n";
  o << "# game " << TableGame(s.experiment) << ", column " << TableColumn(s.experiment)
    << (s.experiment.trainer.interagent_gradients ? ", IG" : ", no IG") << "\n";
  o << "# scale " << s.scale() << ", runs " << s.runs << "\n";
  o << "iteration,mean,ci95_half_width,lower,upper\n";
  for (size_t i = 0; i < s.grid.size(); ++i) {
    o << s.grid[i] << ',' << Shortest(s.curve_mean[i]) << ',';
    if (s.curve_half_width[i]) {
      const double hw = *s.curve_half_width[i];
      o << Shortest(hw) << ',' << Shortest(s.curve_mean[i] - hw) << ',' << Shortest(s.curve_mean[i] + hw);
    } else {
      o << ",,";
    }
    o << '\n';
  }
  return o.str();
}

CurveData ParseCurveData(std::istream& in) {
  CurveData d;
  std::string line;
  bool header = false;
  auto number = [](const std::string& f) {
    double v = 0.0;
    const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
    if (r.ec != std::errc() || r.ptr != f.data() + f.size()) throw InvalidInput("curve data: bad number '" + f + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "iteration,mean,ci95_half_width,lower,upper") throw InvalidInput("curve data: bad header");
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ',')) f.push_back(part);
    if (line.back() == ',') f.push_back("");
    if (f.size() != 5) throw InvalidInput("curve data: expected 5 fields");
    d.iteration.push_back(static_cast<int64_t>(number(f[0])));
    d.mean.push_back(number(f[1]));
    d.half_width.push_back(f[2].empty() ? std::nullopt : std::optional<double>(number(f[2])));
  }
  if (!header) throw InvalidInput("curve data: missing header");
  return d;
}

// ---------------------------------------------------------------------------
// Transcripts

std::string RenderNegotiationTranscript(const NegotiationTrace& t) {
  if (t.turns.empty()) throw InvalidInput("negotiation trace: no turns");
  std::ostringstream o;
  o << "Negotiation: " << t.config.items << " items, message dim " << t.config.message_dim
    << ", turn limit " << t.config.max_turns << "\n";
  o << "utilities A " << Vec(t.u_a) << "\n";
  o << "utilities B " << Vec(t.u_b) << "\n";
  const std::vector<double>* last = nullptr;
  Agent proposer = Agent::kA;
  for (const auto& m : t.turns) {
    o << "turn " << m.turn << "  " << AgentName(m.agent) << "  ";
    if (m.accept && m.turn > 0 && last != nullptr) {
      o << "accepts " << AgentName(proposer) << "'s proposal\n";
      const Agent acceptor = m.agent;
      const auto& up = proposer == Agent::kA ? t.u_a : t.u_b;
      const auto& ua = acceptor == Agent::kA ? t.u_a : t.u_b;
      std::vector<double> rest(last->size());
      for (size_t i = 0; i < rest.size(); ++i) rest[i] = 1.0 - (*last)[i];
      const double rp = IndividualReward(*last, up);
      const double ra = IndividualReward(rest, ua);
      double denom = 0.0;
      for (size_t i = 0; i < up.size(); ++i) denom += std::max(up[i], ua[i]);
      o << "  " << AgentName(proposer) << " keeps " << Vec(*last) << " -> " << Fmt("%.4g", rp) << "\n";
      o << "  " << AgentName(acceptor) << " gets  " << Vec(rest) << " -> " << Fmt("%.4g", ra) << "\n";
      o << "  shared reward = (" << Fmt("%.4g", rp) << " + " << Fmt("%.4g", ra) << ") / "
        << Fmt("%.4g", denom) << " = " << Fmt("%.4f", (rp + ra) / denom) << "\n";
      break;
    }
    o << "proposes to keep " << Vec(m.proposal) << "  message " << Vec(m.message, "%+.2f");
    if (m.accept && m.turn == 0) o << "  (acceptance at the first move is ignored)";
    o << "\n";
    last = &m.proposal;
    proposer = m.agent;
    if (m.reward && !m.accept) o << "  no agreement within " << t.config.max_turns << " moves\n";
  }
  const double replayed = ReplayNegotiationReward(t);
  o << "final reward " << Fmt("%.4f", replayed);
  const auto& fin = t.turns.back();
  if (fin.reward) {
    o << (std::fabs(*fin.reward - replayed) <= 1e-9 ? " (matches the recorded reward)"
                                                    : " (recorded " + Fmt("%.6f", *fin.reward) + ")");
  }
  o << "\n";
  return o.str();
}

std::string RenderSeqGuessTranscript(const SeqGuessTrace& t) {
  if (t.turns.empty()) throw InvalidInput("seqguess trace: no turns");
  std::ostringstream o;
  const SeqGuessConfig& c = t.config;
  o << "Sequence Guess: alphabet " << c.alphabet << ", length " << c.length << ", guess limit " << c.max_turns
    << ", " << MessageKindName(c.message_kind) << " messages\n";
  auto seq = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += std::to_string(x) + " ";
    if (!s.empty()) s.pop_back();
    return s;
  };
  o << "target " << seq(t.target) << "\n";
  std::optional<double> recorded;
  for (const auto& m : t.turns) {
    if (m.is_guess) {
      int hits = 0;
      for (size_t i = 0; i < m.guess.size() && i < t.target.size(); ++i) hits += m.guess[i] == t.target[i];
      o << "turn " << m.turn << "  guesser   " << seq(m.guess) << "  (" << hits << "/" << t.target.size()
        << " correct)\n";
      if (m.reward) recorded = m.reward;
    } else {
      o << "turn " << m.turn << "  mastermind ";
      if (c.message_kind == MessageKind::kDiscrete) {
        std::vector<int> sym(m.message.begin(), m.message.end());
        o << "symbols " << seq(sym) << "\n";
      } else {
        o << "message " << Vec(m.message, "%+.3f") << "\n";
      }
    }
  }
  const double replayed = ReplaySeqGuessReward(t);
  o << "final reward " << Fmt("%.4f", replayed) << " (shifted " << Fmt("%.4f", ShiftedReturn(replayed, c)) << ")";
  if (recorded)
    o << (std::fabs(*recorded - replayed) <= 1e-9 ? " matches the recorded reward"
                                                  : " recorded " + Fmt("%.6f", *recorded));
  o << "\n";
  return o.str();
}

}  // namespace posig
