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

#include <algorithm>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "obe/detail/lapack.hpp"
#include "obe/dynamics.hpp"
#include "obe/faddeeva.hpp"
#include "obe/liouvillian.hpp"

namespace obe {

inline constexpr double null_space_tolerance = 1e-9;

// ---------------------------------------------------------------------------
// Null-space (eigenvector) method.
// ---------------------------------------------------------------------------

/// Steady state as the zero-eigenvalue eigenvector(s) of L. When the null
/// space is degenerate, r_init selects the solution through the left
/// eigenvectors.
inline DensityVector steady_eigen(const Liouvillian& l,
                                  const std::optional<DensityVector>& r_init = std::nullopt) {
  const int n = l.n_states;
  Eigen::EigenSolver<Matrix> es(l.matrix, true);
  if (es.info() != Eigen::Success) throw SolverError("eigen-decomposition of L failed");
  const CVector lambda = es.eigenvalues();
  const double radius = lambda.cwiseAbs().maxCoeff();
  std::vector<int> null;
  for (int j = 0; j < lambda.size(); ++j)
    if (std::abs(lambda[j]) <= null_space_tolerance * radius) null.push_back(j);
  if (null.empty())
    throw SolverError("L has no zero eigenvalue: the optical Bloch equations have no steady state");

  Vector r;
  const auto pops = population_slots(n);
  if (null.size() == 1) {
    const CVector v = es.eigenvectors().col(null[0]);
    Complex tr = 0.0;
    for (int s : pops) tr += v[s];
    if (std::abs(tr) < 1e-300) throw SolverError("null vector of L has zero trace");
    r = (v / tr).real();
  } else {
    if (!r_init)
      throw SolverError("steady state is not unique (" + std::to_string(null.size()) +
                        " zero eigenvalues); an initial density matrix is required");
    if (radius == 0.0) {
      r = r_init->values();
    } else {
      const auto d = decompose(l);
      CVector acc = CVector::Zero(l.dim());
      for (int j : null)
        acc += (d.left.col(j).adjoint() * r_init->values().cast<Complex>())(0) * d.right.col(j);
      r = acc.real();
    }
    double tr = 0.0;
    for (int s : pops) tr += r[s];
    if (std::abs(tr) > 1e-300) r /= tr;
  }
  return {n, std::move(r)};
}

// ---------------------------------------------------------------------------
// Trace-elimination (linear equations) method.
// ---------------------------------------------------------------------------

struct ReducedSystem {
  int n_states = 0;
  int eliminated_slot = 0;  // 0-based position of r_J in r
  Matrix l_prime;           // (N^2-1) x (N^2-1)
  Vector b;                 // N^2-1
};

namespace detail {

inline int eliminated_slot_for(int n_states, int eliminated_state) {
  if (eliminated_state <= 0) eliminated_state = n_states;
  return pop_slot(eliminated_state, n_states);
}

/// Columns of L with r_J replaced by 1 - sum of the other populations,
/// row and column J dropped. Linear in L.
inline Matrix trace_eliminated(const Matrix& l, int n_states, int jslot) {
  const int dim = n_states * n_states;
  std::vector<char> is_pop(dim, 0);
  for (int s : population_slots(n_states)) is_pop[s] = 1;
  Matrix out(dim - 1, dim - 1);
  for (int i = 0, ri = 0; i < dim; ++i) {
    if (i == jslot) continue;
    for (int j = 0, cj = 0; j < dim; ++j) {
      if (j == jslot) continue;
      out(ri, cj) = is_pop[j] ? l(i, j) - l(i, jslot) : l(i, j);
      ++cj;
    }
    ++ri;
  }
  return out;
}

inline Vector trace_rhs(const Matrix& l, int jslot) {
  const auto dim = l.rows();
  Vector b(dim - 1);
  for (Eigen::Index i = 0, ri = 0; i < dim; ++i)
    if (i != jslot) b[ri++] = -l(i, jslot);
  return b;
}

}  // namespace detail

/// L' r' = b with r_J eliminated through the unit trace. eliminated_state is
/// 1-based and defaults to N.
inline ReducedSystem reduce_trace(const Liouvillian& l, int eliminated_state = 0) {
  ReducedSystem rs;
  rs.n_states = l.n_states;
  rs.eliminated_slot = detail::eliminated_slot_for(l.n_states, eliminated_state);
  rs.l_prime = detail::trace_eliminated(l.matrix, l.n_states, rs.eliminated_slot);
  rs.b = detail::trace_rhs(l.matrix, rs.eliminated_slot);
  return rs;
}

/// Reinserts r_J = 1 - sum_{j in P'} r_j.
inline DensityVector reassemble(int n_states, int eliminated_slot, const Vector& r_prime) {
  const int dim = n_states * n_states;
  Vector r(dim);
  for (int i = 0, k = 0; i < dim; ++i)
    if (i != eliminated_slot) r[i] = r_prime[k++];
  double others = 0.0;
  for (int s : population_slots(n_states))
    if (s != eliminated_slot) others += r[s];
  r[eliminated_slot] = 1.0 - others;
  return {n_states, std::move(r)};
}

inline DensityVector reassemble(const ReducedSystem& rs, const Vector& r_prime) {
  return reassemble(rs.n_states, rs.eliminated_slot, r_prime);
}

inline DensityVector steady_linear(const Liouvillian& l, int eliminated_state = 0) {
  const auto rs = reduce_trace(l, eliminated_state);
  Eigen::PartialPivLU<Matrix> lu(rs.l_prime);
  if (!detail::nonsingular(lu, 1e-13))
    throw SolverError("L' is singular: the steady state is not unique; "
                      "use steady_eigen with an initial density matrix");
  return reassemble(rs, lu.solve(rs.b));
}

// ---------------------------------------------------------------------------
// Partial-fraction form r'(x) = r0' + sum_j alpha_j / (x + mu_j).
// ---------------------------------------------------------------------------

struct PartialFractionForm {
  LinearSplit::Parameter parameter = LinearSplit::Parameter::velocity;
  CVector poles;       // mu_j
  CMatrix numerators;  // alpha_ij
  CVector constant;    // r0'

  Vector evaluate(double x) const {
    CVector r = constant;
    for (Eigen::Index j = 0; j < poles.size(); ++j) r += numerators.col(j) / (x + poles[j]);
    return r.real();
  }

  /// Average over a Maxwellian of rms speed u (same units as x).
  Vector maxwell_average(double u) const {
    CVector r = constant;
    for (Eigen::Index j = 0; j < poles.size(); ++j)
      r += numerators.col(j) * maxwell_average_pole(poles[j], u);
    return r.real();
  }
};

/// Factorises (l0 + x l1)^-1 b through the generalized eigenproblem
/// l0 x_j = mu_j l1 x_j with left vectors normalised to y_i^H l1 x_j = delta_ij.
inline PartialFractionForm factor_parameter(const Matrix& l0, const Matrix& l1, const Vector& b,
                                            LinearSplit::Parameter parameter) {
  const auto n = l0.rows();
  PartialFractionForm form;
  form.parameter = parameter;

  Eigen::FullPivLU<Matrix> rank_lu(l1);
  const auto rank = rank_lu.rank();
  const CMatrix a = l0.cast<Complex>();
  const CMatrix bm = l1.cast<Complex>();
  const CVector bc = b.cast<Complex>();
  // Poles much further out than l0/l1 sets the scale for are taken as
  // infinite eigenvalues (perturbed Jordan blocks at infinity).
  const double scale = l1.norm() > 0.0 ? l0.norm() / l1.norm() : 0.0;
  const double finite_bound = 1e5 * scale;

  std::vector<Eigen::Index> finite;
  detail::GeneralizedEigen ge;
  if (rank > 0) {
    ge = detail::ggev(a, bm);
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(ge.alpha[j]) <= finite_bound * std::abs(ge.beta[j])) finite.push_back(j);
    if (static_cast<Eigen::Index>(finite.size()) > rank)
      throw SolverError("more finite generalized eigenvalues than rank of L1'");
  }
  const auto m = static_cast<Eigen::Index>(finite.size());
  CMatrix x(n, m), y(n, m);
  CVector mu(m);
  if (m > 0) {
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto j = finite[static_cast<std::size_t>(k)];
      mu[k] = ge.alpha[j] / ge.beta[j];
      x.col(k) = ge.right.col(j);
      y.col(k) = ge.left.col(j);
      if (std::abs(mu[k].imag()) <= 1e-12 * (1.0 + std::abs(mu[k])))
        throw SolverError("generalized eigenvalue with vanishing imaginary part: "
                          "undamped coherence, no Maxwellian average");
    }
    // Biorthonormalise: Y^H L1 X = I (block-diagonal G handles repeated poles).
    const CMatrix g = y.adjoint() * bm * x;
    Eigen::PartialPivLU<CMatrix> glu(g);
    if (!detail::nonsingular(glu, 1e-13))
      throw SolverError("left and right generalized eigenvectors are not biorthogonal "
                        "(defective pencil)");
    y = (glu.inverse() * y.adjoint()).adjoint();
  }
  const CVector yb = y.adjoint() * bc;
  form.poles = mu;
  form.numerators = x * yb.asDiagonal();
  const CVector b0 = bc - bm * (x * yb);
  Eigen::PartialPivLU<CMatrix> lu0(a);
  if (!detail::nonsingular(lu0, 1e-13))
    throw SolverError("L0' is singular: no unique steady state at zero parameter");
  form.constant = lu0.solve(b0);

  // The expansion must reproduce direct solves; a failure means the
  // parameter dependence is not a proper rational function of the assumed form.
  for (double xs : {0.0, scale, -2.0 * scale}) {
    Eigen::PartialPivLU<CMatrix> lux(a + xs * bm);
    const CVector direct = lux.solve(bc);
    CVector r = form.constant;
    for (Eigen::Index j = 0; j < m; ++j) r += form.numerators.col(j) / (xs + mu[j]);
    if ((r - direct).norm() > 1e-7 * (1.0 + direct.norm()))
      throw SolverError("partial-fraction expansion does not reproduce the direct solution "
                        "(pencil of index > 1 with unbounded parameter dependence?)");
  }
  return form;
}

/// Partial-fraction form of the whole steady state, with the information
/// needed to reinsert the eliminated population.
struct SteadyStateForm {
  PartialFractionForm form;
  int n_states = 0;
  int eliminated_slot = 0;

  DensityVector at(double x) const { return reassemble(n_states, eliminated_slot, form.evaluate(x)); }
};

/// Steady state of L0 + x L1 as a rational function of x.
inline SteadyStateForm factor_steady(const LinearSplit& split, int eliminated_state = 0) {
  const int n = split.l0.n_states;
  const int jslot = detail::eliminated_slot_for(n, eliminated_state);
  const Vector b = detail::trace_rhs(split.l0.matrix, jslot);
  if (detail::trace_rhs(split.l1.matrix, jslot).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("the eliminated population column depends on the split parameter");
  SteadyStateForm s;
  s.n_states = n;
  s.eliminated_slot = jslot;
  s.form = factor_parameter(detail::trace_eliminated(split.l0.matrix, n, jslot),
                            detail::trace_eliminated(split.l1.matrix, n, jslot), b,
                            split.parameter);
  return s;
}

/// Maxwellian-averaged steady state, semi-analytically via the Faddeeva function.
inline DensityVector steady_doppler_semianalytic(const SteadyStateForm& s, double u) {
  if (s.form.parameter != LinearSplit::Parameter::velocity)
    throw ValidationError("Doppler averaging needs a velocity factorisation");
  return reassemble(s.n_states, s.eliminated_slot, s.form.maxwell_average(u));
}

/// Steady states at several values of one detuning (MHz) from a single
/// factorisation.
inline std::vector<DensityVector> steady_sweep_detuning(const SteadyStateForm& s,
                                                        std::span<const double> detunings) {
  if (s.form.parameter != LinearSplit::Parameter::detuning)
    throw ValidationError("detuning sweep needs a detuning factorisation");
  std::vector<DensityVector> out;
  out.reserve(detunings.size());
  for (double d : detunings) out.push_back(s.at(d));
  return out;
}

// ---------------------------------------------------------------------------
// Specialised solvers.
// ---------------------------------------------------------------------------

/// Two-state system driven by one field. All rates in MHz (f = omega/2pi).
struct TwoStateParams {
  double detuning = 0.0;
  double rabi = 0.0;
  double decay = 0.0;      // Gamma of state 2 into state 1
  double dephasing = 0.0;  // extra gamma_12
  std::optional<double> u;  // rms speed (m/s) for Doppler averaging
  double wavelength_nm = 780.0;
  int direction = +1;
};

inline std::pair<SystemSpec, std::vector<FieldSpec>> two_state_model(const TwoStateParams& p) {
  auto sys = SystemSpec::make(2);
  sys.decay_rates(0, 1) = p.decay;
  sys.dephasing_rates(0, 1) = p.dephasing;
  CMatrix rabi = CMatrix::Zero(2, 2);
  rabi(1, 0) = p.rabi;
  Vector a(2);
  a << 0.0, -1.0;
  std::vector<FieldSpec> fields{
      FieldSpec::from_rabi(rabi, p.detuning, a, p.wavelength_nm, p.direction)};
  return {sys, fields};
}

inline DensityVector steady_2state(const TwoStateParams& p) {
  const auto [sys, fields] = two_state_model(p);
  if (p.u) return steady_doppler_semianalytic(factor_steady(split_velocity(sys, fields)), *p.u);
  return steady_linear(build(sys, fields));
}

namespace detail {

struct LadderBlocks {
  RatePartition part;
  Vector r_s;
};

inline LadderBlocks ladder_blocks(const DensityVector& frozen) {
  const int n = frozen.n_states();
  LadderBlocks lb{RatePartition::populations(n), Vector(n)};
  for (int j = 1; j <= n; ++j) lb.r_s[j - 1] = frozen.population(j);
  return lb;
}

inline DensityVector ladder_assemble(int n, const LadderBlocks& lb, const Vector& r_r) {
  DensityVector r(n);
  for (std::size_t k = 0; k < lb.part.set_s.size(); ++k)
    r[lb.part.set_s[k]] = lb.r_s[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < lb.part.set_r.size(); ++k)
    r[lb.part.set_r[k]] = r_r[static_cast<Eigen::Index>(k)];
  return r;
}

inline void check_ladder(const Liouvillian& l, const DensityVector& r) {
  const Vector dr = l.matrix * r.values();
  double flow = 0.0;
  for (int s : population_slots(l.n_states)) flow = std::max(flow, std::abs(dr[s]));
  const double scale = l.matrix.cwiseAbs().maxCoeff() * std::max(1.0, r.values().cwiseAbs().maxCoeff());
  if (flow > 1e-9 * scale)
    throw ValidationError("not a ladder system: the frozen populations are not stationary "
                          "at zeroth order in the probe");
}

}  // namespace detail

/// Weak-probe steady coherences of a ladder system: populations frozen at
/// `frozen`, coherences from (R L R^T) r_R = -(R L S^T) r_S with R = all
/// coherences. `l` must be the weak-probe generator (see weak_probe_reduce).
inline DensityVector steady_ladder_weakprobe(const Liouvillian& l, const DensityVector& frozen) {
  const auto lb = detail::ladder_blocks(frozen);
  const auto r = detail::ladder_assemble(l.n_states, lb, reconstruct_fast(l, lb.part, lb.r_s));
  detail::check_ladder(l, r);
  return r;
}

/// Doppler-averaged variant on a velocity split of the weak-probe generator.
inline DensityVector steady_ladder_weakprobe(const LinearSplit& split, const DensityVector& frozen,
                                             double u) {
  const auto lb = detail::ladder_blocks(frozen);
  const auto& part = lb.part;
  const Matrix a0 = block(split.l0.matrix, part.set_r, part.set_r);
  const Matrix a1 = block(split.l1.matrix, part.set_r, part.set_r);
  if (block(split.l1.matrix, part.set_r, part.set_s).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("population couplings depend on velocity");
  const Vector b = -(block(split.l0.matrix, part.set_r, part.set_s) * lb.r_s);
  const auto form = factor_parameter(a0, a1, b, LinearSplit::Parameter::velocity);
  const auto r = detail::ladder_assemble(split.l0.n_states, lb, form.maxwell_average(u));
  detail::check_ladder(split.l0, detail::ladder_assemble(
                                     split.l0.n_states, lb, reconstruct_fast(split.l0, part, lb.r_s)));
  return r;
}

inline DensityVector steady_ladder_weakprobe(const SystemSpec& system,
                                             std::span<const FieldSpec> fields,
                                             const DensityVector& frozen,
                                             std::optional<double> u = std::nullopt) {
  if (u) {
    const auto split = weak_probe_reduce(system, fields, frozen, split_velocity(system, fields));
    return steady_ladder_weakprobe(split, frozen, *u);
  }
  return steady_ladder_weakprobe(weak_probe_reduce(system, fields, frozen).reduced, frozen);
}

/// Stationary populations of a rate-equation generator L_S (S = populations).
inline Vector steady_rate(const Matrix& l_s) {
  const auto n = l_s.rows();
  // Replace the last equation by the trace condition.
  Matrix a = l_s;
  Vector rhs = Vector::Zero(n);
  a.row(n - 1).setOnes();
  rhs[n - 1] = 1.0;
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!detail::nonsingular(lu, 1e-13))
    throw SolverError("rate equations have no unique stationary state");
  return lu.solve(rhs);
}

/// Experimental: single-field steady coherences with power broadening but no
/// optical pumping. Each dipole-coupled pair (upper i, lower j) is solved as
/// an isolated two-state system holding the frozen population of j, using
/// the total decay rate of i; populations are returned unchanged.
inline DensityVector steady_onefield_powerbroadened(const SystemSpec& system,
                                                    const FieldSpec& field,
                                                    const DensityVector& frozen) {
  const int n = system.n_states;
  DensityVector r = frozen;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      const Complex om = field.rabi(i - 1, j - 1);
      if (om == Complex(0.0) || field.detuning_factors[i - 1] >= field.detuning_factors[j - 1])
        continue;  // keep (upper i, lower j) only
      double gamma_i = 0.0;
      for (int k = 1; k <= n; ++k) gamma_i += system.decay_rates(k - 1, i - 1);
      TwoStateParams p;
      p.detuning = field.detuning * (field.detuning_factors[j - 1] - field.detuning_factors[i - 1]) +
                   system.energy_offsets[j - 1] - system.energy_offsets[i - 1];
      p.rabi = std::abs(om);
      p.decay = gamma_i;
      p.dephasing = system.dephasing(i, j);
      const auto two = steady_2state(p);
      const Complex phase = om / std::abs(om);
      r.set_coherence(i, j, frozen.population(j) * two.coherence(2, 1) * phase);
    }
  return r;
}

}  // namespace obe
