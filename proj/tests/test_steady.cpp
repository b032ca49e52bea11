// Copyright 2026 The obe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using namespace obe;
using obe::testing::ladder_reference;
using obe::testing::max_abs;

TEST(Steady, LadderByLinearEquations) {
  const auto [sys, f] = obe::testing::ladder_model();
  const auto r = steady_linear(build(sys, f));
  EXPECT_LT(max_abs(r.values() - ladder_reference()), 1e-5);
  for (int j = 1; j <= 3; ++j)
    EXPECT_LT(max_abs(steady_linear(build(sys, f), j).values() - r.values()), 1e-12);
}

TEST(Steady, LadderByNullVector) {
  const auto [sys, f] = obe::testing::ladder_model();
  const auto r = steady_eigen(build(sys, f));
  EXPECT_LT(max_abs(r.values() - ladder_reference()), 1e-5);
}

TEST(Steady, LadderByLongTimeIntegration) {
  const auto [sys, f] = obe::testing::ladder_model();
  const auto l = build(sys, f);
  const auto tr = integrate_rk4(constant_provider(l.matrix), init_rho({1.0, 0.0, 0.0}).values(),
                                0.0, 20.0, 20000);
  EXPECT_LT(max_abs(tr.states.back() - ladder_reference()), 1e-5);
}

// Closed form for a two-state atom: rho_22 = (W^2 g / 2G) / (D^2 + g^2 + W^2 g / G),
// g = G/2 + dephasing, everything in angular units.
TEST(Steady, TwoStateClosedForm) {
  for (double det : {-7.0, 0.0, 2.5})
    for (double deph : {0.0, 1.5}) {
      TwoStateParams p;
      p.detuning = det;
      p.rabi = 4.0;
      p.decay = 6.0;
      p.dephasing = deph;
      const auto r = steady_2state(p);
      const double tp = 2.0 * constants::pi;
      const double w = tp * p.rabi, gg = tp * p.decay, d = tp * det, g = 0.5 * gg + tp * deph;
      const double rho22 = (w * w * g / (2.0 * gg)) / (d * d + g * g + w * w * g / gg);
      EXPECT_NEAR(r.population(2), rho22, 1e-12);
      EXPECT_NEAR(r.trace(), 1.0, 1e-12);
    }
}

TEST(Steady, DegenerateNullSpaceUsesInitialState) {
  // State 1 is isolated; the 2-3 pair has its own steady state.
  auto sys = SystemSpec::make(3);
  sys.decay_rates(1, 2) = 6.0;
  sys.dephasing_rates(0, 1) = 0.3;
  sys.dephasing_rates(0, 2) = 0.3;
  CMatrix r = CMatrix::Zero(3, 3);
  r(2, 1) = 4.0;
  Vector a(3);
  a << 0.0, 0.0, -1.0;
  const std::vector<FieldSpec> f{FieldSpec::from_rabi(r, 2.5, a)};
  const auto l = build(sys, f);
  EXPECT_THROW(steady_linear(l), SolverError);
  EXPECT_THROW(steady_eigen(l), SolverError);
  const auto rho = steady_eigen(l, init_rho({0.4, 0.6, 0.0}));
  TwoStateParams p;
  p.detuning = 2.5;
  p.rabi = 4.0;
  p.decay = 6.0;
  const auto two = steady_2state(p);
  EXPECT_NEAR(rho.population(1), 0.4, 1e-10);
  EXPECT_NEAR(rho.population(3), 0.6 * two.population(2), 1e-10);
  EXPECT_NEAR(std::abs(rho.coherence(2, 3) - 0.6 * two.coherence(1, 2)), 0.0, 1e-10);
}

TEST(Steady, VelocityFactorisationReproducesDirectSolves) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = obe::testing::random_model(rng, 3 + trial % 2, 2);
    const auto split = split_velocity(m.system, m.fields);
    const auto form = factor_steady(split);
    for (double v : {-700.0, -35.0, 0.0, 240.0})
      EXPECT_LT(max_abs(form.at(v).values() - steady_linear(split.at(v)).values()), 1e-9)
          << "trial " << trial << " v " << v;
  }
}

TEST(Steady, DetuningSweepReproducesDirectSolves) {
  std::mt19937 rng(8);
  auto m = obe::testing::random_model(rng, 4, 2);
  const auto form = factor_steady(split_detuning(m.system, m.fields, 0));
  const std::vector<double> dets{-40.0, -3.0, 0.0, 1.0, 25.0};
  const auto sweep = steady_sweep_detuning(form, dets);
  for (std::size_t k = 0; k < dets.size(); ++k) {
    auto f = m.fields;
    f[0].detuning = dets[k];
    EXPECT_LT(max_abs(sweep[k].values() - steady_linear(build(m.system, f)).values()), 1e-9);
  }
  EXPECT_THROW(steady_doppler_semianalytic(form, 100.0), ValidationError);
}

TEST(Steady, UndampedSystemHasNoAverage) {
  auto sys = SystemSpec::make(2);
  CMatrix r = CMatrix::Zero(2, 2);
  r(1, 0) = 1.0;
  Vector a(2);
  a << 0.0, -1.0;
  const std::vector<FieldSpec> f{FieldSpec::from_rabi(r, 0.0, a, 780.0)};
  EXPECT_THROW(factor_steady(split_velocity(sys, f)), SolverError);
}

TEST(Steady, WeakProbeLadderMatchesLinearSolve) {
  const auto [sys, f] = obe::testing::ladder_model();
  const auto init = init_rho({1.0, 0.0, 0.0});
  const auto red = weak_probe_reduce(sys, f, init);
  const auto lad = steady_ladder_weakprobe(red.reduced, init);
  const auto lin = steady_linear(red.reduced);
  EXPECT_LT(max_abs(lad.values() - lin.values()), 1e-9);
  EXPECT_DOUBLE_EQ(lad.population(1), 1.0);
  EXPECT_DOUBLE_EQ(lad.population(2), 0.0);
}

TEST(Steady, WeakProbeLadderDopplerMatchesQuadrature) {
  const auto [sys, f] = obe::testing::ladder_model();
  const auto init = init_rho({1.0, 0.0, 0.0});
  const double u = 240.0;
  const auto sa = steady_ladder_weakprobe(sys, f, init, u);
  // Lines are ~2 m/s wide in velocity: a fine grid is needed.
  const auto grid = make_grid(GridKind::trapezoid, 40001, 5.0, u);
  const auto num = average_steady_numerical(
      [&](double v) {
        return steady_ladder_weakprobe(weak_probe_reduce(sys, f, init, v).reduced, init);
      },
      grid, u);
  EXPECT_LT(max_abs(sa.values() - num.values()), 1e-6);
}

TEST(Steady, LadderRejectsNonStationaryPopulations) {
  const auto [sys, f] = obe::testing::ladder_model();
  const auto init = init_rho({0.5, 0.5, 0.0});
  EXPECT_THROW(steady_ladder_weakprobe(weak_probe_reduce(sys, f, init).reduced, init),
               ValidationError);
}

TEST(Steady, PowerBroadenedSingleFieldOnTwoStates) {
  auto sys = SystemSpec::make(2);
  sys.decay_rates(0, 1) = 6.0;
  sys.dephasing_rates(0, 1) = 0.5;
  CMatrix d = CMatrix::Zero(2, 2);
  d(1, 0) = Complex(0.0, 2e-29);
  Vector a(2);
  a << 0.0, -1.0;
  const auto field = FieldSpec::from_dipoles(d, 500.0, 3.0, a, 780.0);
  const auto pb = steady_onefield_powerbroadened(sys, field, init_rho({1.0, 0.0}));
  const auto full = steady_linear(build(sys, std::vector<FieldSpec>{field}));
  EXPECT_NEAR(std::abs(pb.coherence(2, 1) - full.coherence(2, 1)), 0.0, 1e-12);
}

TEST(Steady, RateEquationPopulations) {
  auto sys = SystemSpec::make(3);
  sys.decay_rates(0, 1) = 5.0;
  sys.decay_rates(1, 2) = 1.0;
  sys.dephasing_rates(0, 1) = 200.0;
  sys.dephasing_rates(1, 2) = 200.0;
  sys.dephasing_rates(0, 2) = 200.0;
  CMatrix r1 = CMatrix::Zero(3, 3), r2 = CMatrix::Zero(3, 3);
  r1(1, 0) = 1.0;
  r2(2, 1) = 1.5;
  Vector a1(3), a2(3);
  a1 << 0.0, -1.0, -1.0;
  a2 << 0.0, 0.0, -1.0;
  const std::vector<FieldSpec> f{FieldSpec::from_rabi(r1, 0.0, a1),
                                 FieldSpec::from_rabi(r2, 0.0, a2)};
  const auto l = build(sys, f);
  const auto part = RatePartition::populations(3);
  const Vector pops = steady_rate(rate_reduce(l, part));
  const auto full = steady_linear(l);
  for (int j = 1; j <= 3; ++j) EXPECT_NEAR(pops[j - 1], full.population(j), 1e-3);
  // The slaved coherences follow from the populations.
  const Vector r = expand_rate_solution(l, part, pops);
  EXPECT_LT(max_abs(l.apply(r)) , 1e-2);
}

}  // namespace
