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

#include <unsupported/Eigen/MatrixFunctions>

#include "test_util.hpp"

namespace {

using namespace obe;

struct LadderRun : ::testing::Test {
  Liouvillian l;
  Vector r0;
  void SetUp() override {
    const auto [sys, f] = obe::testing::ladder_model();
    l = build(sys, f);
    r0 = init_rho({1.0, 0.0, 0.0}).values();
  }
  Vector exact(double t) const { return (l.matrix * t).exp() * r0; }
};

TEST_F(LadderRun, EigenMatchesMatrixExponential) {
  const std::vector<double> times{0.0, 0.1, 0.5, 2.0};
  const auto tr = integrate_eigen(l, r0, 0.0, times);
  for (std::size_t k = 0; k < times.size(); ++k)
    EXPECT_LT((tr.states[k] - exact(times[k])).cwiseAbs().maxCoeff(), 1e-10);
}

TEST_F(LadderRun, Rk4IsFourthOrder) {
  auto err = [&](int n) {
    const auto tr = integrate_rk4(constant_provider(l.matrix), r0, 0.0, 0.5, n);
    return (tr.states.back() - exact(0.5)).norm();
  };
  const double ratio = err(100) / err(200);
  EXPECT_NEAR(std::log2(ratio), 4.0, 0.3);
}

TEST_F(LadderRun, Rk5IsFifthOrder) {
  auto err = [&](int n) {
    const auto tr = integrate_rk5(constant_provider(l.matrix), r0, 0.0, 0.5, n);
    return (tr.states.back() - exact(0.5)).norm();
  };
  const double ratio = err(50) / err(100);
  EXPECT_NEAR(std::log2(ratio), 5.0, 0.4);
}

TEST_F(LadderRun, MethodsAgreeAndPreserveTrace) {
  const auto times = obe::detail::uniform_mesh(0.0, 2.0, 2000);
  std::vector<Trajectory> runs;
  for (Method m : {Method::rk4, Method::rk5, Method::adaptive, Method::eigen}) {
    IntegratorOptions o;
    o.method = m;
    o.rtol = o.atol = 1e-10;
    runs.push_back(integrate(constant_provider(l.matrix), r0, times, o));
    ASSERT_EQ(runs.back().size(), times.size());
  }
  for (std::size_t k = 0; k < times.size(); k += 100)
    for (std::size_t m = 1; m < runs.size(); ++m)
      EXPECT_LT((runs[m].states[k] - runs[0].states[k]).cwiseAbs().maxCoeff(), 1e-6);
  for (std::size_t k = 0; k < times.size(); ++k)
    EXPECT_NEAR(runs[0].density(k, 3).trace(), 1.0, 1e-10 * (1.0 + k / 1000.0));
}

TEST_F(LadderRun, ObserverSeesEveryOutputTime) {
  std::vector<double> seen;
  integrate_rk4(constant_provider(l.matrix), r0, 0.0, 1.0, 10, 3,
                [&](double t, const Vector&) { seen.push_back(t); });
  ASSERT_EQ(seen.size(), 11u);
  EXPECT_DOUBLE_EQ(seen.back(), 1.0);
}

TEST_F(LadderRun, AdaptiveHitsRequestedTimes) {
  const std::vector<double> times{0.0, 0.25, 1.0};
  const auto tr = integrate_adaptive(constant_provider(l.matrix), r0, 0.0, 1.0, 1e-10, 1e-12, times);
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_DOUBLE_EQ(tr.times[1], 0.25);
  EXPECT_LT((tr.states[2] - exact(1.0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Dynamics, TimeDependentProviderMatchesExponentialProduct) {
  // L(t) = A + cos(3t) (B - A); the reference is a fine product of
  // exponential midpoint steps.
  const auto [sys, f] = obe::testing::ladder_model();
  const Matrix a = build(sys, f).matrix;
  const Matrix b = build(sys, std::vector<FieldSpec>{f[0]}).matrix;
  Matrix cur;
  auto lp = [&](double t) -> const Matrix& {
    cur = a + std::cos(3.0 * t) * (b - a);
    return cur;
  };
  const Vector r0 = init_rho({1.0, 0.0, 0.0}).values();
  const auto tr = integrate_rk4(lp, r0, 0.0, 1.0, 400, 2);
  Vector ref = r0;
  const int n = 20000;
  const double h = 1.0 / n;
  for (int k = 0; k < n; ++k) ref = (lp((k + 0.5) * h) * h).exp() * ref;
  EXPECT_LT((tr.states.back() - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Dynamics, DefectiveGeneratorIsRejectedByEigen) {
  Matrix j = Matrix::Zero(4, 4);
  j(0, 1) = 1.0;
  const Liouvillian l{2, j};
  EXPECT_THROW(integrate_eigen(l, Vector::Ones(4), 0.0, std::vector<double>{1.0}), SolverError);
}

TEST(Dynamics, OverflowIsReported) {
  const Matrix l = 1e200 * Matrix::Identity(4, 4);
  EXPECT_THROW(integrate_rk4(constant_provider(l), Vector::Ones(4), 0.0, 1.0, 10), SolverError);
}

TEST(Dynamics, InvalidMeshesAreRejected) {
  const Matrix l = Matrix::Zero(4, 4);
  EXPECT_THROW(integrate_rk4(constant_provider(l), Vector::Ones(4), 1.0, 0.0, 10), ValidationError);
  EXPECT_THROW(integrate_rk4(constant_provider(l), Vector::Ones(4), 0.0, 1.0, 0), ValidationError);
  EXPECT_THROW(integrate_adaptive(constant_provider(l), Vector::Ones(4), 0.0, 1.0, 0.0, 1e-8),
               ValidationError);
}

}  // namespace
