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

#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include "obe/liouvillian.hpp"

namespace obe {

struct Trajectory {
  std::vector<double> times;  // us
  std::vector<Vector> states;

  std::size_t size() const { return times.size(); }
  DensityVector density(std::size_t k, int n_states) const { return {n_states, states[k]}; }
};

/// Called after every output step with (t, r).
using StepObserver = std::function<void(double, const Vector&)>;

enum class Method { rk4, rk5, adaptive, eigen };

struct IntegratorOptions {
  Method method = Method::rk4;
  int n_substeps = 1;
  double rtol = 1e-8;
  double atol = 1e-8;
};

/// Provider that always returns the same generator.
inline auto constant_provider(const Matrix& l) {
  return [&l](double) -> const Matrix& { return l; };
}

namespace detail {

inline void check_finite(const Vector& r, double t) {
  if (!r.allFinite())
    throw SolverError("non-finite density-matrix component at t = " + std::to_string(t) + " us");
}

template <class Provider>
void rk4_step(Provider& lp, double t, double h, Vector& r) {
  const Vector k1 = lp(t) * r;
  const Vector k2 = lp(t + 0.5 * h) * (r + 0.5 * h * k1);
  const Vector k3 = lp(t + 0.5 * h) * (r + 0.5 * h * k2);
  const Vector k4 = lp(t + h) * (r + h * k3);
  r += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Butcher's six-stage fifth-order scheme.
template <class Provider>
void rk5_step(Provider& lp, double t, double h, Vector& r) {
  const Vector k1 = lp(t) * r;
  const Vector k2 = lp(t + 0.25 * h) * (r + (0.25 * h) * k1);
  const Vector k3 = lp(t + 0.25 * h) * (r + (h / 8.0) * (k1 + k2));
  const Vector k4 = lp(t + 0.5 * h) * (r + h * (-0.5 * k2 + k3));
  const Vector k5 = lp(t + 0.75 * h) * (r + (h / 16.0) * (3.0 * k1 + 9.0 * k4));
  const Vector k6 =
      lp(t + h) * (r + (h / 7.0) * (-3.0 * k1 + 2.0 * k2 + 12.0 * k3 - 12.0 * k4 + 8.0 * k5));
  r += (h / 90.0) * (7.0 * k1 + 32.0 * k3 + 12.0 * k4 + 32.0 * k5 + 7.0 * k6);
}

template <class Provider>
Trajectory fixed_step_mesh(Provider& lp, const Vector& r0, std::span<const double> times,
                           int n_substeps, bool fifth_order, const StepObserver& observer) {
  if (times.empty()) throw ValidationError("empty output mesh");
  if (n_substeps < 1) throw ValidationError("n_substeps must be at least 1");
  Trajectory out;
  out.times.reserve(times.size());
  out.states.reserve(times.size());
  Vector r = r0;
  out.times.push_back(times[0]);
  out.states.push_back(r);
  if (observer) observer(times[0], r);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = (times[k] - times[k - 1]) / n_substeps;
    if (!(h > 0.0)) throw ValidationError("output times must be strictly increasing");
    for (int s = 0; s < n_substeps; ++s) {
      const double t = times[k - 1] + s * h;
      if (fifth_order)
        rk5_step(lp, t, h, r);
      else
        rk4_step(lp, t, h, r);
    }
    check_finite(r, times[k]);
    out.times.push_back(times[k]);
    out.states.push_back(r);
    if (observer) observer(times[k], r);
  }
  return out;
}

inline std::vector<double> uniform_mesh(double t0, double t1, int n_steps) {
  if (n_steps < 1) throw ValidationError("n_steps must be at least 1");
  if (!(t1 > t0)) throw ValidationError("t1 must exceed t0");
  std::vector<double> t(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) t[k] = t0 + (t1 - t0) * k / n_steps;
  return t;
}

}  // namespace detail

/// Classic fourth-order Runge-Kutta with n_substeps steps per output step.
template <class Provider>
Trajectory integrate_rk4(Provider&& lp, const Vector& r0, double t0, double t1, int n_steps,
                         int n_substeps = 1, const StepObserver& observer = {}) {
  const auto mesh = detail::uniform_mesh(t0, t1, n_steps);
  return detail::fixed_step_mesh(lp, r0, mesh, n_substeps, false, observer);
}

/// Butcher's fifth-order Runge-Kutta.
template <class Provider>
Trajectory integrate_rk5(Provider&& lp, const Vector& r0, double t0, double t1, int n_steps,
                         int n_substeps = 1, const StepObserver& observer = {}) {
  const auto mesh = detail::uniform_mesh(t0, t1, n_steps);
  return detail::fixed_step_mesh(lp, r0, mesh, n_substeps, true, observer);
}

/// Embedded 7(8) Runge-Kutta-Fehlberg pair with step-size control, sampled
/// at output_times (which must lie in [t0, t1]); t0 is always included.
template <class Provider>
Trajectory integrate_adaptive(Provider&& lp, const Vector& r0, double t0, double t1, double rtol,
                              double atol, std::span<const double> output_times = {},
                              const StepObserver& observer = {}) {
  namespace odeint = boost::numeric::odeint;
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ValidationError("tolerances must be positive");
  if (!(t1 > t0)) throw ValidationError("t1 must exceed t0");
  std::vector<double> times{t0};
  for (double t : output_times) {
    if (t < t0 || t > t1) throw ValidationError("output time outside [t0, t1]");
    if (t > times.back()) times.push_back(t);
    else if (t < times.back()) throw ValidationError("output times must be increasing");
  }
  if (output_times.empty()) times.push_back(t1);

  using State = std::vector<double>;
  const auto dim = r0.size();
  State x(r0.data(), r0.data() + dim);
  auto rhs = [&](const State& y, State& dydt, double t) {
    Eigen::Map<const Vector> ym(y.data(), dim);
    Eigen::Map<Vector> dm(dydt.data(), dim);
    dm.noalias() = lp(t) * ym;
  };
  Trajectory out;
  auto obs = [&](const State& y, double t) {
    Vector v = Eigen::Map<const Vector>(y.data(), dim);
    detail::check_finite(v, t);
    if (observer) observer(t, v);
    out.times.push_back(t);
    out.states.push_back(std::move(v));
  };
  auto stepper = odeint::make_controlled(atol, rtol, odeint::runge_kutta_fehlberg78<State>());
  const double dt0 = (times.size() > 1 ? times[1] - times[0] : t1 - t0) * 1e-3;
  try {
    odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, obs,
                            odeint::max_step_checker(1000000));
  } catch (const odeint::step_adjustment_error& e) {
    throw SolverError(std::string("adaptive integrator: step size underflow (stiff system?): ") +
                      e.what());
  } catch (const odeint::no_progress_error& e) {
    throw SolverError(std::string("adaptive integrator made no progress (stiff system?): ") +
                      e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigen-decomposition propagation for constant L.
// ---------------------------------------------------------------------------

struct EigenDecomposition {
  CVector eigenvalues;  // rad/us
  CMatrix right;        // columns v_j
  CMatrix left;         // columns u_j, normalised so that u_j^H v_j = 1

  /// c_j = u_j^H r0 / (u_j^H v_j).
  CVector coefficients(const Vector& r0) const { return left.adjoint() * r0.cast<Complex>(); }
};

inline EigenDecomposition decompose(const Liouvillian& l) {
  Eigen::EigenSolver<Matrix> es(l.matrix, true);
  if (es.info() != Eigen::Success) throw SolverError("eigen-decomposition of L failed");
  EigenDecomposition d;
  d.eigenvalues = es.eigenvalues();
  d.right = es.eigenvectors();
  Eigen::PartialPivLU<CMatrix> lu(d.right);
  if (!detail::nonsingular(lu, 1e-14))
    throw SolverError("L is defective (singular eigenvector matrix); use a Runge-Kutta method");
  d.left = lu.inverse().adjoint();
  return d;
}

/// r(t) = sum_j c_j exp(lambda_j (t - t0)) v_j.
inline Trajectory integrate_eigen(const Liouvillian& l, const Vector& r0, double t0,
                                  std::span<const double> output_times,
                                  const EigenDecomposition* decomposition = nullptr) {
  EigenDecomposition local;
  if (!decomposition) {
    local = decompose(l);
    decomposition = &local;
  }
  const auto& d = *decomposition;
  const CVector c = d.coefficients(r0);
  const double scale = std::max(r0.norm(), 1e-300);
  if ((d.right * c - r0.cast<Complex>()).norm() > 1e-8 * scale)
    throw SolverError("initial state is not spanned by the eigenvectors of L "
                      "(defective or ill-conditioned); use a Runge-Kutta method");
  Trajectory out;
  for (double t : output_times) {
    const CVector e = (d.eigenvalues * (t - t0)).array().exp() * c.array();
    Vector r = (d.right * e).real();
    detail::check_finite(r, t);
    out.times.push_back(t);
    out.states.push_back(std::move(r));
  }
  return out;
}

/// Uniform front end over the four methods on an arbitrary output mesh.
/// The eigen method requires a time-independent provider.
template <class Provider>
Trajectory integrate(Provider&& lp, const Vector& r0, std::span<const double> times,
                     const IntegratorOptions& opt = {}, const StepObserver& observer = {}) {
  switch (opt.method) {
    case Method::rk4:
      return detail::fixed_step_mesh(lp, r0, times, opt.n_substeps, false, observer);
    case Method::rk5:
      return detail::fixed_step_mesh(lp, r0, times, opt.n_substeps, true, observer);
    case Method::adaptive:
      return integrate_adaptive(lp, r0, times.front(), times.back(), opt.rtol, opt.atol, times,
                                observer);
    case Method::eigen:
    default: {
      const Liouvillian l{static_cast<int>(std::lround(std::sqrt(double(r0.size())))),
                          Matrix(lp(times.front()))};
      auto traj = integrate_eigen(l, r0, times.front(), times);
      if (observer)
        for (std::size_t k = 0; k < traj.size(); ++k) observer(traj.times[k], traj.states[k]);
      return traj;
    }
  }
}

}  // namespace obe
