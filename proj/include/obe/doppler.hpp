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
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "obe/dynamics.hpp"
#include "obe/steady.hpp"

namespace obe {

/// Abscissas v_k (m/s) and weights w_k such that the Maxwellian average of g
/// is sum_k w_k f(v_k) g(v_k), f being the velocity distribution.
struct VelocityGrid {
  std::vector<double> velocities;
  std::vector<double> weights;

  std::size_t size() const { return velocities.size(); }
};

enum class GridKind { trapezoid, clenshaw_curtis, gauss_hermite };

/// One-dimensional Maxwellian exp(-v^2/u^2) / (u sqrt(pi)).
inline double maxwellian(double v, double u) {
  return std::exp(-(v * v) / (u * u)) / (u * std::sqrt(constants::pi));
}

using WeightFunction = std::function<double(double)>;

inline WeightFunction maxwellian_weight(double u) {
  if (!(u > 0.0)) throw ValidationError("rms speed u must be positive");
  return [u](double v) { return maxwellian(v, u); };
}

namespace detail {

inline VelocityGrid trapezoid_grid(int n, double half_width) {
  VelocityGrid g;
  const double h = 2.0 * half_width / (n - 1);
  for (int k = 0; k < n; ++k) {
    g.velocities.push_back(-half_width + h * k);
    g.weights.push_back((k == 0 || k == n - 1) ? 0.5 * h : h);
  }
  return g;
}

// Clenshaw-Curtis nodes cos(k pi / (n-1)) and weights, scaled to the interval.
inline VelocityGrid clenshaw_curtis_grid(int n, double half_width) {
  const int m = n - 1;
  VelocityGrid g;
  for (int k = 0; k <= m; ++k) {
    const double theta = constants::pi * (m - k) / m;
    double w = 1.0;
    for (int j = 1; j <= m / 2; ++j) {
      const double b = (2 * j == m) ? 1.0 : 2.0;
      w -= b * std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
    }
    w *= (k == 0 || k == m) ? 1.0 / m : 2.0 / m;
    g.velocities.push_back(half_width * std::cos(theta));
    g.weights.push_back(half_width * w);
  }
  return g;
}

// Golub-Welsch; nodes x_k of exp(-x^2), converted to v = u x and weights
// divided by the Maxwellian.
inline VelocityGrid gauss_hermite_grid(int n, double u) {
  Matrix jac = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
  VelocityGrid g;
  for (int k = 0; k < n; ++k) {
    const double x = es.eigenvalues()[k];
    const double v0 = es.eigenvectors()(0, k);
    const double wh = std::sqrt(constants::pi) * v0 * v0;
    g.velocities.push_back(u * x);
    g.weights.push_back(wh * u * std::exp(x * x));
  }
  return g;
}

}  // namespace detail

/// Quadrature grid over [-span u, span u] (trapezoid, Clenshaw-Curtis), or
/// Gauss-Hermite nodes for the Maxwellian of rms speed u (span unused).
inline VelocityGrid make_grid(GridKind kind, int n_points, double span, double u) {
  if (n_points < 3) throw ValidationError("velocity grid needs at least 3 points");
  if (!(u > 0.0)) throw ValidationError("rms speed u must be positive");
  if (kind != GridKind::gauss_hermite && !(span > 0.0))
    throw ValidationError("velocity grid span must be positive");
  switch (kind) {
    case GridKind::trapezoid: return detail::trapezoid_grid(n_points, span * u);
    case GridKind::clenshaw_curtis: return detail::clenshaw_curtis_grid(n_points, span * u);
    case GridKind::gauss_hermite: return detail::gauss_hermite_grid(n_points, u);
  }
  throw ValidationError("unknown grid kind");
}

inline VelocityGrid default_grid(double u) { return make_grid(GridKind::trapezoid, 501, 5.0, u); }

/// Two columns: abscissa (m/s) and weight. Lines starting with '#' are skipped.
inline VelocityGrid read_grid(std::istream& in) {
  VelocityGrid g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double v = 0.0, w = 0.0;
    if (!(ls >> v >> w))
      throw ParseError("velocity grid line " + std::to_string(lineno) + ": expected two numbers");
    g.velocities.push_back(v);
    g.weights.push_back(w);
  }
  if (g.size() == 0) throw ParseError("velocity grid file is empty");
  return g;
}

inline VelocityGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open velocity grid file '" + path + "'");
  return read_grid(in);
}

/// Combined weights w_k f(v_k).
inline std::vector<double> class_weights(const VelocityGrid& grid, const WeightFunction& f) {
  std::vector<double> w(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) w[k] = grid.weights[k] * f(grid.velocities[k]);
  return w;
}

namespace detail {

/// Evaluates fn(k) for every class, possibly on several threads; results are
/// returned in class order so that later reductions are deterministic.
template <class T, class Fn>
std::vector<T> map_classes(std::size_t n, Fn&& fn, unsigned n_threads) {
  std::vector<T> out(n);
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(n)));
  if (n_threads == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
    return out;
  }
  std::vector<std::exception_ptr> errors(n_threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t k = t; k < n; k += n_threads) out[k] = fn(k);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::string velocity_context(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "velocity class v = %.6g m/s: ", v);
  return buf;
}

}  // namespace detail

struct AveragingOptions {
  unsigned n_threads = 1;
};

using SteadySolver = std::function<DensityVector(double)>;

/// sum_k w_k f(v_k) r(v_k) with a caller-supplied per-class solver.
inline DensityVector average_steady_numerical(const SteadySolver& solver, const VelocityGrid& grid,
                                              const WeightFunction& weight,
                                              const AveragingOptions& opt = {}) {
  const auto w = class_weights(grid, weight);
  auto per_class = detail::map_classes<DensityVector>(
      grid.size(),
      [&](std::size_t k) {
        const double v = grid.velocities[k];
        try {
          return solver(v);
        } catch (const SolverError& e) {
          throw SolverError(detail::velocity_context(v) + e.what());
        }
      },
      opt.n_threads);
  DensityVector acc(per_class.front().n_states());
  for (std::size_t k = 0; k < grid.size(); ++k) acc.values() += w[k] * per_class[k].values();
  return acc;
}

inline DensityVector average_steady_numerical(const SteadySolver& solver, const VelocityGrid& grid,
                                              double u, const AveragingOptions& opt = {}) {
  return average_steady_numerical(solver, grid, maxwellian_weight(u), opt);
}

/// Per-class steady states of L0 + v L1 by the linear-equations method.
inline DensityVector average_steady_numerical(const VelocitySplit& split, const VelocityGrid& grid,
                                              double u, const AveragingOptions& opt = {}) {
  return average_steady_numerical([&](double v) { return steady_linear(split.at(v)); }, grid, u,
                                  opt);
}

enum class MemoryMode { precompute_all, streaming };

/// A per-class time integration: v -> Trajectory on a fixed mesh.
using ClassIntegrator = std::function<Trajectory(double)>;

/// Maxwellian-weighted sum of class trajectories at each output time.
inline Trajectory average_td(const ClassIntegrator& integrate_class, const VelocityGrid& grid,
                             const WeightFunction& weight, MemoryMode mode,
                             const AveragingOptions& opt = {}) {
  const auto w = class_weights(grid, weight);
  auto guarded = [&](std::size_t k) {
    const double v = grid.velocities[k];
    try {
      return integrate_class(v);
    } catch (const SolverError& e) {
      throw SolverError(detail::velocity_context(v) + e.what());
    }
  };
  Trajectory acc;
  auto add = [&](std::size_t k, const Trajectory& tr) {
    if (acc.size() == 0) {
      acc.times = tr.times;
      acc.states.assign(tr.size(), Vector::Zero(tr.states.front().size()));
    }
    for (std::size_t i = 0; i < tr.size(); ++i) acc.states[i] += w[k] * tr.states[i];
  };
  if (mode == MemoryMode::precompute_all) {
    const auto all = detail::map_classes<Trajectory>(grid.size(), guarded, opt.n_threads);
    for (std::size_t k = 0; k < all.size(); ++k) add(k, all[k]);
  } else {
    for (std::size_t k = 0; k < grid.size(); ++k) add(k, guarded(k));
  }
  return acc;
}

/// CW fields: each class evolves under the constant generator L0 + v L1.
inline Trajectory average_td(const VelocitySplit& split, const Vector& r0, const VelocityGrid& grid,
                             double u, std::span<const double> times,
                             const IntegratorOptions& integ, MemoryMode mode,
                             const AveragingOptions& opt = {}) {
  return average_td(
      [&](double v) {
        const Matrix l = split.at(v).matrix;
        return integrate(constant_provider(l), r0, times, integ);
      },
      grid, maxwellian_weight(u), mode, opt);
}

}  // namespace obe
