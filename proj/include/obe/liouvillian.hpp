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
#include <deque>
#include <span>
#include <vector>

#include "obe/system.hpp"

namespace obe {

/// Real N^2 x N^2 generator of dr/dt = L r, in rad/us.
struct Liouvillian {
  int n_states = 0;
  Matrix matrix;

  Vector apply(const Vector& r) const { return matrix * r; }
  int dim() const { return n_states * n_states; }
};

/// L(x) = l0 + x l1 for a scalar parameter x. For a velocity split x is in
/// m/s; for a detuning split x = Delta_alpha/2pi in MHz.
struct LinearSplit {
  enum class Parameter { velocity, detuning };
  Parameter parameter = Parameter::velocity;
  int field = -1;  // detuning splits: 0-based field index
  Liouvillian l0;
  Liouvillian l1;

  Liouvillian at(double x) const { return {l0.n_states, l0.matrix + x * l1.matrix}; }
};

using VelocitySplit = LinearSplit;
using DetuningSplit = LinearSplit;

namespace detail {

// Eigen's rcond estimate can miss an exactly zero pivot, so check the pivots too.
template <class Lu>
bool nonsingular(const Lu& lu, double tol) {
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (pivots.size() == 0) return true;
  return lu.rcond() > tol && pivots.minCoeff() > tol * pivots.maxCoeff();
}

struct MatrixEntry {
  int row;
  int col;
  Complex value;
};

inline std::vector<MatrixEntry> nonzeros(const CMatrix& c) {
  std::vector<MatrixEntry> out;
  for (int q = 0; q < c.cols(); ++q)
    for (int p = 0; p < c.rows(); ++p)
      if (c(p, q) != Complex(0.0)) out.push_back({p, q, c(p, q)});
  return out;
}

/// Terms of the basis matrix multiplying component `slot` of r:
/// population E_jj, Re part E_ij + E_ji, Im part i(E_ij - E_ji).
inline std::vector<MatrixEntry> basis_terms(int slot, int n) {
  const auto info = slot_info(slot, n);
  const int i = info.i - 1;
  const int j = info.j - 1;
  switch (info.kind) {
    case SlotInfo::Kind::population:
      return {{j, j, 1.0}};
    case SlotInfo::Kind::real_part:
      return {{i, j, 1.0}, {j, i, 1.0}};
    case SlotInfo::Kind::imag_part:
    default:
      return {{i, j, Complex(0.0, 1.0)}, {j, i, Complex(0.0, -1.0)}};
  }
}

/// Real form of the linear map
///   rho -> -i[H, rho] + sum_n (C rho C+ - (C+C rho + rho C+C)/2)
///          - gamma_pq rho_pq (p != q).
/// All inputs in rad/us (jump operators in (rad/us)^(1/2)).
inline Matrix real_superoperator(const CMatrix& h, std::span<const CMatrix> jumps,
                                 const Matrix& dephasing) {
  const int n = static_cast<int>(h.rows());
  const int dim = n * n;

  CMatrix k = CMatrix::Zero(n, n);
  // jump(p + n a, q + n b) = sum_n C_pa conj(C_qb)
  CMatrix jump = CMatrix::Zero(dim, dim);
  for (const auto& c : jumps) {
    k.noalias() += c.adjoint() * c;
    const auto nz = nonzeros(c);
    for (const auto& x : nz)
      for (const auto& y : nz) jump(x.row + n * x.col, y.row + n * y.col) += x.value * std::conj(y.value);
  }
  const Complex minus_i(0.0, -1.0);

  // Element (p, q) of the image of E_ab.
  auto image = [&](int p, int q, int a, int b) {
    Complex s = 0.0;
    if (b == q) s += minus_i * h(p, a) - 0.5 * k(p, a);
    if (p == a) s += -minus_i * h(b, q) - 0.5 * k(b, q);
    s += jump(p + n * a, q + n * b);
    if (p == a && q == b && p != q) s -= dephasing(p, q);
    return s;
  };

  Matrix l = Matrix::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const auto terms = basis_terms(col, n);
    for (int row = 0; row < dim; ++row) {
      const auto info = slot_info(row, n);
      const int p = info.i - 1;
      const int q = info.j - 1;
      Complex x = 0.0;
      for (const auto& t : terms) x += t.value * image(p, q, t.row, t.col);
      l(row, col) = info.kind == SlotInfo::Kind::imag_part ? x.imag() : x.real();
    }
  }
  return l;
}

inline Matrix commutator_superoperator(const CMatrix& h) {
  const int n = static_cast<int>(h.rows());
  return real_superoperator(h, {}, Matrix::Zero(n, n));
}

inline void check_fields(const SystemSpec& system, std::span<const FieldSpec> fields) {
  system.validate();
  for (const auto& f : fields) {
    f.validate();
    if (f.n_states() != system.n_states)
      throw ValidationError("field and system disagree on the number of states");
  }
}

inline bool doppler_active(const FieldSpec& f) {
  return (f.detuning_factors.array() != 0.0).any();
}

/// Doppler shift k v of a field in rad/us for v in m/s (0 if v == 0).
inline double doppler_shift(const FieldSpec& f, double velocity) {
  if (velocity == 0.0) return 0.0;
  if (!(f.wavelength_nm > 0.0) && doppler_active(f))
    throw ValidationError("a field has no wavelength but a nonzero velocity was requested");
  if (!(f.wavelength_nm > 0.0)) return 0.0;
  return wave_number(f.wavelength_nm) * velocity * constants::rad_per_s_to_rad_per_us;
}

/// H'/hbar in rad/us for atoms moving at `velocity` (m/s).
inline CMatrix hamiltonian(const SystemSpec& system, std::span<const FieldSpec> fields,
                           double velocity) {
  const int n = system.n_states;
  CMatrix h = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double d = constants::two_pi * system.energy_offsets[i];
    for (const auto& f : fields) {
      const double delta_v =
          constants::two_pi * f.detuning - f.direction * doppler_shift(f, velocity);
      d += f.detuning_factors[i] * delta_v;
    }
    h(i, i) = d;
  }
  for (const auto& f : fields) h -= (0.5 * constants::two_pi) * f.rabi;
  return h;
}

inline std::vector<CMatrix> jump_operators(const SystemSpec& system) {
  const int n = system.n_states;
  std::vector<CMatrix> ops;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double g = system.decay_rates(i, j);
      if (g == 0.0) continue;
      CMatrix c = CMatrix::Zero(n, n);
      c(i, j) = std::sqrt(constants::two_pi * g);
      ops.push_back(std::move(c));
    }
  for (const auto& c : system.extra_collapse_ops) ops.push_back(std::sqrt(constants::two_pi) * c);
  return ops;
}

inline Matrix dephasing_matrix(const SystemSpec& system) {
  const int n = system.n_states;
  Matrix g = Matrix::Zero(n, n);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double v = constants::two_pi * system.dephasing(i, j);
      g(i - 1, j - 1) = v;
      g(j - 1, i - 1) = v;
    }
  return g;
}

}  // namespace detail

/// L for atoms moving at `velocity` (m/s) along z.
inline Liouvillian build(const SystemSpec& system, std::span<const FieldSpec> fields,
                         double velocity = 0.0) {
  detail::check_fields(system, fields);
  const auto jumps = detail::jump_operators(system);
  return {system.n_states,
          detail::real_superoperator(detail::hamiltonian(system, fields, velocity), jumps,
                                     detail::dephasing_matrix(system))};
}

/// L(v) = L0 + v L1 with v in m/s.
inline VelocitySplit split_velocity(const SystemSpec& system, std::span<const FieldSpec> fields) {
  detail::check_fields(system, fields);
  const int n = system.n_states;
  CMatrix h1 = CMatrix::Zero(n, n);
  for (const auto& f : fields) {
    if (!detail::doppler_active(f)) continue;
    const double k = detail::doppler_shift(f, 1.0);
    for (int i = 0; i < n; ++i) h1(i, i) += -f.direction * k * f.detuning_factors[i];
  }
  LinearSplit s;
  s.parameter = LinearSplit::Parameter::velocity;
  s.l0 = build(system, fields, 0.0);
  s.l1 = {n, detail::commutator_superoperator(h1)};
  return s;
}

/// L(Delta) = L~0 + (Delta/2pi) L~1 for the detuning of field `alpha`
/// (0-based), Delta/2pi in MHz, at atom velocity `velocity`.
inline DetuningSplit split_detuning(const SystemSpec& system, std::span<const FieldSpec> fields,
                                    int alpha, double velocity = 0.0) {
  detail::check_fields(system, fields);
  if (alpha < 0 || alpha >= static_cast<int>(fields.size()))
    throw ValidationError("split_detuning: no field " + std::to_string(alpha + 1));
  const int n = system.n_states;
  std::vector<FieldSpec> shifted(fields.begin(), fields.end());
  shifted[alpha].detuning = 0.0;
  CMatrix h1 = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) h1(i, i) = constants::two_pi * fields[alpha].detuning_factors[i];
  LinearSplit s;
  s.parameter = LinearSplit::Parameter::detuning;
  s.field = alpha;
  s.l0 = build(system, shifted, velocity);
  s.l1 = {n, detail::commutator_superoperator(h1)};
  return s;
}

// ---------------------------------------------------------------------------
// Partitions of the components of r.
// ---------------------------------------------------------------------------

/// Selector matrix R with R(i, j) = 1 if j == set[i] (0-based slots).
inline Matrix selector(const std::vector<int>& set, int dim) {
  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(set.size()), dim);
  for (std::size_t i = 0; i < set.size(); ++i) r(static_cast<Eigen::Index>(i), set[i]) = 1.0;
  return r;
}

inline Matrix block(const Matrix& l, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b)
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = l(rows[a], cols[b]);
  return out;
}

/// Weak-probe classes (0-based slots): A holds the populations and every
/// component coupled to them when the probe is off; B holds the rest.
struct ClassPartition {
  std::vector<int> set_a;
  std::vector<int> set_b;
};

/// Rate-equation classes: S is propagated, R is adiabatically eliminated.
struct RatePartition {
  std::vector<int> set_s;
  std::vector<int> set_r;

  /// S = all populations, R = all coherences.
  static RatePartition populations(int n_states) {
    return {population_slots(n_states), coherence_slots(n_states)};
  }
};

struct WeakProbeReduction {
  Liouvillian reduced;
  ClassPartition partition;
  bool probe_vanishes = false;  // class B is then uncoupled from class A
};

/// Classes by breadth-first closure over the nonzero pattern of the
/// probe-free Liouvillian, seeded with the populations and the nonzero
/// components of the initial state.
inline ClassPartition weak_probe_classes(const Matrix& coupling, int n_states,
                                         const DensityVector& initial) {
  const int dim = n_states * n_states;
  std::vector<char> in_a(dim, 0);
  std::deque<int> queue;
  auto seed = [&](int s) {
    if (!in_a[s]) {
      in_a[s] = 1;
      queue.push_back(s);
    }
  };
  for (int s : population_slots(n_states)) seed(s);
  for (int s = 0; s < dim; ++s)
    if (initial.values().size() == dim && initial[s] != 0.0) seed(s);
  while (!queue.empty()) {
    const int k = queue.front();
    queue.pop_front();
    for (int m = 0; m < dim; ++m)
      if (coupling(m, k) != 0.0) seed(m);
  }
  ClassPartition p;
  for (int s = 0; s < dim; ++s) (in_a[s] ? p.set_a : p.set_b).push_back(s);
  return p;
}

/// Reassembled first-order generator [[L_AA^(0), 0], [L_BA^(1), L_BB^(0)]].
/// `coupling` is the nonzero pattern used for the class search; it defaults
/// to the probe-free generator itself.
inline WeakProbeReduction weak_probe_reduce(const Liouvillian& full, const Liouvillian& probe_off,
                                            const DensityVector& initial,
                                            const Matrix* coupling = nullptr) {
  WeakProbeReduction out;
  out.partition =
      weak_probe_classes(coupling ? *coupling : probe_off.matrix, full.n_states, initial);
  const Matrix first_order = full.matrix - probe_off.matrix;
  out.probe_vanishes = (first_order.array() == 0.0).all();
  Matrix l = Matrix::Zero(full.dim(), full.dim());
  const auto& a = out.partition.set_a;
  const auto& b = out.partition.set_b;
  for (int r : a)
    for (int c : a) l(r, c) = probe_off.matrix(r, c);
  for (int r : b) {
    for (int c : a) l(r, c) = first_order(r, c);
    for (int c : b) l(r, c) = probe_off.matrix(r, c);
  }
  out.reduced = {full.n_states, std::move(l)};
  return out;
}

/// Weak-probe reduction with field 0 as the probe.
inline WeakProbeReduction weak_probe_reduce(const SystemSpec& system,
                                            std::span<const FieldSpec> fields,
                                            const DensityVector& initial, double velocity = 0.0) {
  if (fields.empty()) throw ValidationError("weak probe reduction needs a probe field");
  std::vector<FieldSpec> off(fields.begin(), fields.end());
  off[0].rabi.setZero();
  return weak_probe_reduce(build(system, fields, velocity), build(system, off, velocity), initial);
}

/// Weak-probe reduction of both halves of a parameter split, with classes
/// searched over the union of the probe-free generator and the split slope so
/// that they hold for every value of the parameter. The result stays affine.
inline LinearSplit weak_probe_reduce(const SystemSpec& system, std::span<const FieldSpec> fields,
                                     const DensityVector& initial, const LinearSplit& split) {
  std::vector<FieldSpec> off(fields.begin(), fields.end());
  off[0].rabi.setZero();
  // The probe enters only through off-diagonal Hamiltonian terms, so its
  // contribution is the same at every value of the split parameter.
  const Liouvillian full = split.l0;
  Liouvillian probe_off = full;
  probe_off.matrix -= build(system, fields, 0.0).matrix - build(system, off, 0.0).matrix;
  const Matrix pattern = probe_off.matrix.cwiseAbs() + split.l1.matrix.cwiseAbs();
  const auto r0 = weak_probe_reduce(full, probe_off, initial, &pattern);
  LinearSplit out = split;
  out.l0 = r0.reduced;
  Matrix l1 = Matrix::Zero(split.l1.dim(), split.l1.dim());
  for (int r : r0.partition.set_a)
    for (int c : r0.partition.set_a) l1(r, c) = split.l1.matrix(r, c);
  for (int r : r0.partition.set_b)
    for (int c : r0.partition.set_b) l1(r, c) = split.l1.matrix(r, c);
  out.l1 = {split.l1.n_states, std::move(l1)};
  return out;
}

// ---------------------------------------------------------------------------
// Adiabatic elimination.
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::PartialPivLU<Matrix> factor_fast_block(const Matrix& rlr) {
  Eigen::PartialPivLU<Matrix> lu(rlr);
  if (!nonsingular(lu, 1e-14))
    throw SolverError("R L R^T is singular: the fast class cannot be eliminated; "
                      "integrate the full optical Bloch equations instead");
  return lu;
}

}  // namespace detail

/// Solves (R L R^T) r_R = -(R L S^T) r_S.
inline Vector reconstruct_fast(const Liouvillian& l, const RatePartition& part, const Vector& r_s) {
  const Matrix rlr = block(l.matrix, part.set_r, part.set_r);
  const Matrix rls = block(l.matrix, part.set_r, part.set_s);
  return detail::factor_fast_block(rlr).solve(-(rls * r_s));
}

/// L_S = S L S^T - (S L R^T)(R L R^T)^-1 (R L S^T), one column per unit vector.
inline Matrix rate_reduce(const Liouvillian& l, const RatePartition& part) {
  const Matrix sls = block(l.matrix, part.set_s, part.set_s);
  const Matrix slr = block(l.matrix, part.set_s, part.set_r);
  const Matrix rls = block(l.matrix, part.set_r, part.set_s);
  const auto lu = detail::factor_fast_block(block(l.matrix, part.set_r, part.set_r));
  const auto ns = static_cast<Eigen::Index>(part.set_s.size());
  Matrix ls(ns, ns);
  for (Eigen::Index k = 0; k < ns; ++k) {
    const Vector r_r = lu.solve(-rls.col(k));
    ls.col(k) = sls.col(k) + slr * r_r;
  }
  return ls;
}

/// Full vector from the slow components, with the fast ones slaved to them.
inline Vector expand_rate_solution(const Liouvillian& l, const RatePartition& part,
                                   const Vector& r_s) {
  const Vector r_r = reconstruct_fast(l, part, r_s);
  Vector r = Vector::Zero(l.dim());
  for (std::size_t k = 0; k < part.set_s.size(); ++k) r[part.set_s[k]] = r_s[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < part.set_r.size(); ++k) r[part.set_r[k]] = r_r[static_cast<Eigen::Index>(k)];
  return r;
}

}  // namespace obe
