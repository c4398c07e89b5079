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

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "posig/errors.hpp"
#include "posig/signaling_losses.hpp"
#include "signaling_oracles.hpp"
#include "test_util.hpp"

namespace posig {
namespace {

using testing::RelativeError;

const RepulsionParams kNeg{250.0, 10.0};
const RepulsionParams kSeq{100.0, 10.0};

Matrix<double> Rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows.begin()->size());
  Matrix<double> m(r, c);
  int i = 0;
  for (auto row : rows) {
    int j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

TEST_CASE("repulsion examples") {
  CHECK(RepulsionAtDistance(0.0, kNeg) == 10.0);
  CHECK(RepulsionAtDistance(0.04, kNeg) == 0.0);
  CHECK(RepulsionAtDistance(0.02, kNeg) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(Repulsion(TorusMessage::Wrap({0.5}), TorusMessage::Wrap({0.5}), kNeg) == 10.0);
  CHECK(Repulsion(TorusMessage::Wrap({0.0}), TorusMessage::Wrap({0.02}), kNeg) ==
        doctest::Approx(5.0).epsilon(1e-9));
  // Cutoff across the wrap point.
  CHECK(Repulsion(TorusMessage::Wrap({0.99}), TorusMessage::Wrap({-0.99}), kNeg) ==
        doctest::Approx(5.0).epsilon(1e-9));
  CHECK_THROWS_AS(Repulsion(TorusMessage::Wrap({0.0}), TorusMessage::Wrap({0.0, 0.0}), kNeg),
                  InvalidInput);
  CHECK_THROWS_AS((RepulsionParams{0.0, 1.0}.Validate()), InvalidInput);
  CHECK_THROWS_AS((RepulsionParams{1.0, -1.0}.Validate()), InvalidInput);
}

TEST_CASE("continuous PS loss examples") {
  CHECK(ContinuousPsLoss(Rows({{0.3, 0.1}, {0.3, 0.1}}), kSeq).value == doctest::Approx(2.5));
  CHECK(ContinuousPsLoss(Rows({{0.0}, {0.1}}), kSeq).value == 0.0);
  CHECK(ContinuousPsLoss(Rows({{0.0, 0.0}, {0.5, -0.3}}), kSeq).value == 0.0);
  CHECK(ContinuousPsLoss(Rows({{0.7, 0.2}}), kSeq).value == 0.0);
  CHECK_THROWS_AS(ContinuousPsLoss(Matrix<double>(0, 3), kSeq), InvalidInput);
  Matrix<double> bad = Rows({{0.0}, {std::nan("")}});
  CHECK_THROWS_AS(ContinuousPsLoss(bad, kSeq), InvalidInput);
}

TEST_CASE("split PS loss examples") {
  CHECK(ContinuousPsLossSplit(Rows({{0.2}, {0.2}}), kSeq).value == doctest::Approx(10.0));
  CHECK(ContinuousPsLossSplit(Rows({{-0.8}, {-0.3}, {0.2}, {0.7}}), kSeq).value == 0.0);
  CHECK(ContinuousPsLossSplit(Rows({{0.0}, {0.05}}), kSeq).value ==
        doctest::Approx(5.0).epsilon(1e-9));
  CHECK_THROWS_AS(ContinuousPsLossSplit(Rows({{0.0}, {0.1}, {0.2}}), kSeq), InvalidInput);
}

TEST_CASE("pair accounting matches the naive broadcast oracle") {
  std::mt19937_64 rng(2024);
  for (int b : {1, 2, 3, 8, 17, 31, 64}) {
    for (int n : {1, 3}) {
      // Concentrated batches so many pairs sit inside the cutoff.
      const Matrix<double> m = testing::RandomMatrix(rng, b, n, -0.15, 0.15);
      const double oracle = oracles::BroadcastPsLoss(m, kSeq);
      CHECK(std::fabs(ContinuousPsLoss(m, kSeq).value - oracle) < 1e-9);
      const Matrix<float> mf = m.Cast<float>();
      CHECK(std::fabs(ContinuousPsLoss(mf, kSeq).value - oracles::BroadcastPsLoss(mf.Cast<double>(), kSeq)) < 1e-6);
    }
  }
}

// Random points whose pairwise distances avoid 0 and the cutoff by >= margin.
Matrix<double> SmoothPoints(std::mt19937_64& rng, int b, int n,
                            const RepulsionParams& p, double margin) {
  for (;;) {
    Matrix<double> m = testing::RandomMatrix(rng, b, n, -0.2, 0.2);
    const auto d = ComputePairwiseDistances(m);
    bool ok = true;
    for (int i = 0; i < b && ok; ++i)
      for (int j = i + 1; j < b && ok; ++j)
        ok = d(i, j) > margin && std::fabs(d(i, j) - p.Cutoff()) > margin;
    if (ok) return m;
  }
}

TEST_CASE("continuous PS gradient matches central differences") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const int b = 2 + trial;
    const Matrix<double> m = SmoothPoints(rng, b, 3, kSeq, 1e-3);
    const auto lg = ContinuousPsLoss(m, kSeq);
    // Finite differences of the detached-operand loss: perturb row i only in
    // the pairs where it is the first operand.
    for (size_t i = 0; i < m.size(); ++i) {
      const double fd = testing::CentralDifference(
          [&](const Matrix<double>& x) { return oracles::DetachedPsLoss(x, m, kSeq); }, m, i);
      CHECK(RelativeError(lg.grad[i], fd, 1e-6) < 1e-4);
    }
  }
}

TEST_CASE("detachment contract") {
  std::mt19937_64 rng(7);
  const Matrix<double> m = SmoothPoints(rng, 6, 2, kSeq, 1e-3);
  const auto detached = ContinuousPsLoss(m, kSeq);
  const auto both = oracles::BothSidesPsLoss(m, kSeq);
  CHECK(detached.value == doctest::Approx(both.value).epsilon(1e-12));
  double diff = 0.0;
  for (size_t i = 0; i < m.size(); ++i) diff += std::fabs(detached.grad[i] - both.grad[i]);
  CHECK(diff > 1e-6);
  // The last row is never a first operand, so it receives no gradient.
  for (int c = 0; c < m.cols(); ++c) CHECK(detached.grad(m.rows() - 1, c) == 0.0);
  // Gradient of row i equals the sum over its own pairs (i, j>i).
  for (int i = 0; i < m.rows(); ++i)
    for (int c = 0; c < m.cols(); ++c)
      CHECK(detached.grad(i, c) == doctest::Approx(oracles::FirstOperandGrad(m, kSeq, i, c)).epsilon(1e-10));
}

TEST_CASE("PS loss against a frozen reference") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const int b = 3 + trial;
    const Matrix<double> m = SmoothPoints(rng, b, 2, kSeq, 1e-3);
    const auto self = ContinuousPsLoss(m, kSeq);
    const auto against = ContinuousPsLossAgainst(m, m, kSeq);
    CHECK(against.value == doctest::Approx(self.value).epsilon(1e-12));
    for (size_t i = 0; i < m.size(); ++i)
      CHECK(against.grad[i] == doctest::Approx(self.grad[i]).epsilon(1e-10));
    // With the reference held fixed the value is smooth in the first operand
    // and its true gradient is the detached one.
    Matrix<double> x = m;
    for (size_t i = 0; i < x.size(); ++i) x[i] += 1e-4 * ((i % 3) - 1.0);
    const auto moved = ContinuousPsLossAgainst(x, m, kSeq);
    CHECK(moved.value == doctest::Approx(oracles::DetachedPsLoss(x, m, kSeq)).epsilon(1e-12));
    for (size_t i = 0; i < x.size(); ++i) {
      const double fd = testing::CentralDifference(
          [&](const Matrix<double>& y) { return ContinuousPsLossAgainst(y, m, kSeq).value; }, x, i);
      CHECK(RelativeError(moved.grad[i], fd, 1e-6) < 1e-4);
    }
  }
  CHECK_THROWS_AS(ContinuousPsLossAgainst(Matrix<double>(2, 2), Matrix<double>(3, 2), kSeq),
                  InvalidInput);
}

TEST_CASE("split PS gradient flows into the first half only") {
  std::mt19937_64 rng(8);
  const Matrix<double> m = SmoothPoints(rng, 6, 2, kSeq, 1e-3);
  const auto l = ContinuousPsLossSplit(m, kSeq);
  for (int i = 3; i < 6; ++i)
    for (int c = 0; c < 2; ++c) CHECK(l.grad(i, c) == 0.0);
  for (size_t i = 0; i < 3 * 2; ++i) {
    const double fd = testing::CentralDifference(
        [&](const Matrix<double>& x) {
          Matrix<double> y = m;
          for (size_t k = 0; k < 6; ++k) y[k] = x[k];
          return ContinuousPsLossSplit(y, kSeq).value;
        },
        m, i);
    CHECK(RelativeError(l.grad[i], fd, 1e-6) < 1e-4);
  }
}

TEST_CASE("one-sided repulsion has force-balanced traps") {
  // Row 0 sits between two later rows that are out of range of each other.
  // Each pair pushes row 0 with the same constant magnitude, so the detached
  // gradient vanishes while the loss stays positive.
  const Matrix<double> m = Rows({{0.0}, {0.06}, {-0.06}});
  const auto l = ContinuousPsLoss(m, kSeq);
  CHECK(l.value > 0.0);
  for (size_t i = 0; i < m.size(); ++i) CHECK(l.grad[i] == 0.0);
}

TEST_CASE("two-sided descent spreads eight points past the cutoff") {
  // Geometry check for the 1-d torus: 8 points fit with spacing 0.25 > 0.1.
  std::mt19937_64 rng(12);
  Matrix<double> m = testing::RandomMatrix(rng, 8, 1, 0.0, 0.05);
  double loss = 1.0;
  int steps = 0;
  for (; steps < 5000 && loss != 0.0; ++steps) {
    const auto l = oracles::BothSidesPsLoss(m, kSeq);
    loss = l.value;
    for (size_t i = 0; i < m.size(); ++i) m[i] -= 1e-2 * l.grad[i];
  }
  CHECK(loss == 0.0);
  CHECK(ContinuousPsLoss(m, kSeq).value == 0.0);
  const auto d = ComputePairwiseDistances(m);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) CHECK(d(i, j) >= 0.1);
}

Matrix<double> Probs(int b, int p, int a, std::initializer_list<double> values) {
  Matrix<double> m(b, p * a);
  size_t i = 0;
  for (double v : values) m[i++] = v;
  return m;
}

TEST_CASE("average policy and entropy") {
  const Matrix<double> same = Probs(2, 1, 3, {0.2, 0.3, 0.5, 0.2, 0.3, 0.5});
  const auto avg_same = AveragePolicy(CategoricalPolicyBatch<double>(same, 1, 3));
  CHECK(avg_same(0, 0) == doctest::Approx(0.2));
  CHECK(avg_same(0, 2) == doctest::Approx(0.5));

  const Matrix<double> two = Probs(2, 1, 3, {1, 0, 0, 0, 1, 0});
  const auto avg = AveragePolicy(CategoricalPolicyBatch<double>(two, 1, 3));
  CHECK(avg(0, 0) == 0.5);
  CHECK(avg(0, 1) == 0.5);
  CHECK(avg(0, 2) == 0.0);

  std::mt19937_64 rng(4);
  Matrix<double> logits = testing::RandomMatrix(rng, 9, 4 * 3, -3, 3);
  Matrix<double> probs = oracles::Softmax(logits, 3);
  const auto got = AveragePolicy(CategoricalPolicyBatch<double>(probs, 4, 3));
  for (int p = 0; p < 4; ++p) {
    double row = 0.0;
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (int b = 0; b < 9; ++b) s += probs(b, p * 3 + a);
      CHECK(got(p, a) == doctest::Approx(s / 9.0).epsilon(1e-14));
      row += got(p, a);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
  }

  const std::vector<double> uniform = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const std::vector<double> onehot = {0.0, 1.0, 0.0};
  const std::vector<double> mixed = {0.5, 0.25, 0.25};
  CHECK(Entropy<double>(uniform) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(Entropy<double>(onehot) == 0.0);
  CHECK(Entropy<double>(mixed) == doctest::Approx(1.5 * std::numbers::ln2).epsilon(1e-12));

  CHECK_THROWS_AS(CategoricalPolicyBatch<double>(Probs(1, 1, 3, {0.5, 0.4, 0.2}), 1, 3),
                  InvalidInput);
  CHECK_THROWS_AS(CategoricalPolicyBatch<double>(Probs(1, 1, 3, {1.2, -0.2, 0.0}), 1, 3),
                  InvalidInput);
}

TEST_CASE("discrete PS loss examples") {
  const double ln3 = std::log(3.0);
  const Matrix<double> uniform(4, 2 * 3, 1.0 / 3);
  CategoricalPolicyBatch<double> ub(uniform, 2, 3);
  CHECK(DiscretePsLoss(ub, {1.0, ln3}).value == doctest::Approx(-ln3).epsilon(1e-12));
  CHECK(NaiveDiscretePsLoss(ub, 1.0).value == doctest::Approx(0.0).scale(1.0));

  const Matrix<double> onehot = Probs(3, 1, 3, {0, 1, 0, 0, 1, 0, 0, 1, 0});
  CategoricalPolicyBatch<double> ob(onehot, 1, 3);
  const double h = 0.4;
  CHECK(DiscretePsLoss(ob, {1.0, h}).value == doctest::Approx(h * h).epsilon(1e-12));
  CHECK(NaiveDiscretePsLoss(ob, 1.0).value == 0.0);

  const Matrix<double> split = Probs(2, 1, 3, {1, 0, 0, 0, 1, 0});
  CHECK(NaiveDiscretePsLoss(CategoricalPolicyBatch<double>(split, 1, 3), 1.0).value ==
        doctest::Approx(-std::numbers::ln2).epsilon(1e-12));

  // B = 1: pi_bar = pi.
  const Matrix<double> single = Probs(1, 1, 3, {0.6, 0.3, 0.1});
  const double hs = Entropy<double>(single.row(0));
  CHECK(DiscretePsLoss(CategoricalPolicyBatch<double>(single, 1, 3), {1.0, 0.2}).value ==
        doctest::Approx(-hs + (hs - 0.2) * (hs - 0.2)).epsilon(1e-12));

  CHECK(DiscretePsParams::WithDefaultTarget(1.0, 3).h_target == doctest::Approx(0.1 * ln3));
  CHECK_THROWS_AS(DiscretePsLoss(ub, {1.0, ln3 + 0.01}), InvalidInput);
  CHECK_THROWS_AS(DiscretePsLoss(ub, {0.0, 0.1}), InvalidInput);
}

TEST_CASE("discrete PS gradients match central differences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const int b = 1 + trial * 2, p = 1 + trial % 3, a = 3;
    const Matrix<double> probs = oracles::Softmax(testing::RandomMatrix(rng, b, p * a, -2, 2), a);
    const DiscretePsParams params{0.7, 0.3};
    const auto l = DiscretePsLoss(CategoricalPolicyBatch<double>(probs, p, a), params);
    const auto n = NaiveDiscretePsLoss(CategoricalPolicyBatch<double>(probs, p, a), 0.7);
    for (size_t i = 0; i < probs.size(); ++i) {
      // Perturbations leave the simplex, so evaluate the raw formula.
      const double fd = testing::CentralDifference(
          [&](const Matrix<double>& x) { return oracles::DiscretePsFormula(x, p, a, 0.7, 0.3, true); },
          probs, i);
      CHECK(RelativeError(l.grad[i], fd, 1e-6) < 1e-4);
      const double fdn = testing::CentralDifference(
          [&](const Matrix<double>& x) { return oracles::DiscretePsFormula(x, p, a, 0.7, 0.0, false); },
          probs, i);
      CHECK(RelativeError(n.grad[i], fdn, 1e-6) < 1e-4);
    }
  }
}

// Gradient descent on softmax logits of a free batch.
std::vector<double> DescendDiscrete(int b, int a, const DiscretePsParams& params,
                                    uint64_t seed, Matrix<double>* avg_out) {
  std::mt19937_64 rng(seed);
  Matrix<double> logits = testing::RandomMatrix(rng, b, a, -1, 1);
  // Spread the initial modes evenly so the batch can reach a uniform mean.
  for (int r = 0; r < b; ++r) logits(r, r % a) += 2.0;
  for (int step = 0; step < 20000; ++step) {
    const Matrix<double> probs = oracles::Softmax(logits, a);
    const auto l = DiscretePsLoss(CategoricalPolicyBatch<double>(probs, 1, a), params);
    for (int r = 0; r < b; ++r) {
      double dot = 0.0;
      for (int k = 0; k < a; ++k) dot += l.grad(r, k) * probs(r, k);
      for (int k = 0; k < a; ++k) logits(r, k) -= 0.5 * b * probs(r, k) * (l.grad(r, k) - dot);
    }
  }
  const Matrix<double> probs = oracles::Softmax(logits, a);
  if (avg_out) *avg_out = AveragePolicy(CategoricalPolicyBatch<double>(probs, 1, a));
  std::vector<double> ent;
  for (int r = 0; r < b; ++r) ent.push_back(Entropy<double>(probs.row(r)));
  return ent;
}

TEST_CASE("discrete PS minimizers") {
  const DiscretePsParams params{1.0, 0.3};
  SUBCASE("diverse batch: every member settles at the target entropy") {
    Matrix<double> avg;
    const auto ent = DescendDiscrete(6, 3, params, 31, &avg);
    for (double h : ent) CHECK(std::fabs(h - params.h_target) < 1e-3);
    CHECK(Entropy<double>(avg.row(0)) == doctest::Approx(std::log(3.0)).epsilon(1e-3));
  }
  SUBCASE("single member: stationary point of -H + l*(H - Ht)^2") {
    // With B = 1 the batch-entropy term acts on the member itself, shifting
    // the optimum to Ht + 1/(2 l) (capped by ln A).
    const double expected = std::min(params.h_target + 0.5 / params.lambda_ps, std::log(3.0));
    const auto ent = DescendDiscrete(1, 3, params, 32, nullptr);
    CHECK(std::fabs(ent[0] - expected) < 1e-3);
  }
}

TEST_CASE("compose comm loss") {
  CHECK(ComposeCommLoss(0.4, 0.2, {1.0, true, true}) == doctest::Approx(0.6));
  CHECK(ComposeCommLoss(0.4, 0.2, {1.5, false, true}) == doctest::Approx(0.3));
  CHECK(ComposeCommLoss(0.4, 0.2, {1.0, true, false}) == doctest::Approx(0.4));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const CommLossWeights w{std::fabs(u(rng)), i % 2 == 0, i % 3 != 0};
    const double r1 = u(rng), r2 = u(rng), b1 = u(rng), b2 = u(rng), s = u(rng);
    CHECK(ComposeCommLoss(r1 + s * r2, b1, w) ==
          doctest::Approx(ComposeCommLoss(r1, b1, w) + s * ComposeCommLoss(r2, 0.0, w)));
    CHECK(ComposeCommLoss(r1, b1 + s * b2, w) ==
          doctest::Approx(ComposeCommLoss(r1, b1, w) + s * ComposeCommLoss(0.0, b2, w)));
  }
}

TEST_CASE("tape wrappers reproduce the direct values and gradients") {
  std::mt19937_64 rng(77);
  const Matrix<double> m = SmoothPoints(rng, 5, 3, kSeq, 1e-3);
  Tape<double> tape;
  Var x = tape.Input(m);
  Var l = ContinuousPsLoss(tape, x, kSeq);
  Var rc = tape.Constant(Matrix<double>(1, 1, 0.25));
  auto total = ComposeCommLoss(tape, rc, l, {2.0, true, true});
  REQUIRE(total.has_value());
  tape.Backward(*total);
  const auto direct = ContinuousPsLoss(m, kSeq);
  CHECK(tape.Value(*total)[0] == doctest::Approx(0.25 + 2.0 * direct.value));
  for (size_t i = 0; i < m.size(); ++i)
    CHECK(tape.Grad(x)[i] == doctest::Approx(2.0 * direct.grad[i]));
  CHECK_FALSE(ComposeCommLoss<double>(tape, std::nullopt, std::nullopt, {1.0, true, true}).has_value());
}

}  // namespace
}  // namespace posig
