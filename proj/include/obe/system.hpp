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
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "obe/constants.hpp"
#include "obe/error.hpp"

namespace obe {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double input_trace_tolerance = 1e-10;
inline constexpr double propagated_trace_tolerance = 1e-8;

// ---------------------------------------------------------------------------
// Index maps.
//
// A density matrix of N states is stored as N^2 reals, upper triangle column
// by column:
//   rho11, Re rho12, Im rho12, rho22, Re rho13, Im rho13, Re rho23, ...
// The functions below take 1-based state labels and return 1-based positions.
// The *_slot variants return 0-based offsets for indexing Eigen vectors.
// ---------------------------------------------------------------------------

inline void check_state(int j, int n_states) {
  if (j < 1 || j > n_states)
    throw ValidationError("state " + std::to_string(j) + " outside 1.." +
                          std::to_string(n_states));
}

/// Position of rho_jj.
inline int pop_index(int j, int n_states) {
  check_state(j, n_states);
  return j * j;
}

struct CoherenceIndex {
  int re;
  int im;
  /// True when the arguments were given as (i > j): the stored element is
  /// rho_ji, so rho_ij = Re - i Im.
  bool conjugated;
};

/// Positions of Re rho_ij and Im rho_ij (with i < j after swapping).
inline CoherenceIndex coher_index(int i, int j, int n_states) {
  check_state(i, n_states);
  check_state(j, n_states);
  if (i == j) throw ValidationError("coher_index: i == j names a population");
  bool conj = false;
  if (i > j) {
    std::swap(i, j);
    conj = true;
  }
  const int re = (j - 1) * (j - 1) + 2 * (i - 1) + 1;
  return {re, re + 1, conj};
}

inline int pop_slot(int j, int n_states) { return pop_index(j, n_states) - 1; }
inline int re_slot(int i, int j, int n_states) { return coher_index(i, j, n_states).re - 1; }
inline int im_slot(int i, int j, int n_states) { return coher_index(i, j, n_states).im - 1; }

/// Kind of component stored at a 0-based slot.
struct SlotInfo {
  enum class Kind { population, real_part, imag_part } kind;
  int i;  // 1-based, i <= j
  int j;
};

inline SlotInfo slot_info(int slot, int n_states) {
  if (slot < 0 || slot >= n_states * n_states)
    throw ValidationError("slot " + std::to_string(slot) + " out of range");
  int j = 1;
  while (j * j <= slot) ++j;
  // slot lies in (j-1)^2 .. j^2-1
  const int offset = slot - (j - 1) * (j - 1);
  if (offset == 2 * (j - 1)) return {SlotInfo::Kind::population, j, j};
  const int i = offset / 2 + 1;
  return {offset % 2 == 0 ? SlotInfo::Kind::real_part : SlotInfo::Kind::imag_part, i, j};
}

inline std::vector<int> population_slots(int n_states) {
  std::vector<int> out;
  for (int j = 1; j <= n_states; ++j) out.push_back(j * j - 1);
  return out;
}

inline std::vector<int> coherence_slots(int n_states) {
  std::vector<int> out;
  for (int s = 0; s < n_states * n_states; ++s)
    if (slot_info(s, n_states).kind != SlotInfo::Kind::population) out.push_back(s);
  return out;
}

/// Maps user labels n_min .. n_min+N-1 to internal labels 1..N.
class StateNumbering {
 public:
  StateNumbering(int n_min, int n_states) : n_min_(n_min), n_states_(n_states) {}

  int n_min() const { return n_min_; }
  int n_states() const { return n_states_; }

  int to_internal(int label) const {
    const int j = label - n_min_ + 1;
    if (j < 1 || j > n_states_)
      throw ValidationError("state label " + std::to_string(label) + " outside " +
                            std::to_string(n_min_) + ".." +
                            std::to_string(n_min_ + n_states_ - 1));
    return j;
  }
  int to_external(int internal) const {
    check_state(internal, n_states_);
    return internal + n_min_ - 1;
  }

 private:
  int n_min_;
  int n_states_;
};

// ---------------------------------------------------------------------------
// Unit conversions.
// ---------------------------------------------------------------------------

/// |E| in V/m of a CW field of intensity I (W/m^2), from I = eps0 c |E|^2 / 2.
inline double intensity_to_amplitude(double intensity) {
  if (!(intensity >= 0.0)) throw ValidationError("negative intensity");
  return std::sqrt(2.0 * intensity / (constants::epsilon0 * constants::speed_of_light));
}

inline double amplitude_to_intensity(Complex amplitude) {
  return 0.5 * constants::epsilon0 * constants::speed_of_light * std::norm(amplitude);
}

/// Rabi frequency Omega/2pi in MHz for dipole matrix element d (C m) and field
/// amplitude E (V/m). When state i is the upper state Omega_ij = E d / hbar,
/// otherwise the field enters conjugated.
inline Complex rabi_from_field(Complex dipole, Complex amplitude, bool upper_is_i = true) {
  const Complex e = upper_is_i ? amplitude : std::conj(amplitude);
  return e * dipole / constants::hbar / (constants::two_pi * 1e6);
}

/// Inverse of rabi_from_field: amplitude in V/m for a Rabi frequency in MHz.
inline Complex field_from_rabi(Complex dipole, Complex rabi_mhz, bool upper_is_i = true) {
  if (dipole == Complex(0.0)) throw ValidationError("field_from_rabi: zero dipole moment");
  const Complex e = rabi_mhz * (constants::two_pi * 1e6) * constants::hbar / dipole;
  return upper_is_i ? e : std::conj(e);
}

/// rms speed along one axis, u = sqrt(2 kB T / M), in m/s.
inline double maxwell_u(double temperature, double mass) {
  if (!(temperature >= 0.0) || !(mass > 0.0))
    throw ValidationError("maxwell_u: need T >= 0 and M > 0");
  return std::sqrt(2.0 * constants::boltzmann * temperature / mass);
}

/// Wave number in rad/m of a field of wavelength lambda (nm).
inline double wave_number(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) throw ValidationError("wavelength must be positive");
  return constants::two_pi / (wavelength_nm * 1e-9);
}

// ---------------------------------------------------------------------------
// DensityVector
// ---------------------------------------------------------------------------

class DensityVector {
 public:
  DensityVector() = default;
  explicit DensityVector(int n_states) : n_(n_states), values_(Vector::Zero(n_states * n_states)) {}
  DensityVector(int n_states, Vector values) : n_(n_states), values_(std::move(values)) {
    if (values_.size() != n_ * n_)
      throw ValidationError("DensityVector: expected " + std::to_string(n_ * n_) +
                            " components, got " + std::to_string(values_.size()));
  }

  int n_states() const { return n_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  double operator[](int slot) const { return values_[slot]; }
  double& operator[](int slot) { return values_[slot]; }

  double population(int j) const { return values_[pop_slot(j, n_)]; }

  /// rho_ij for any pair of 1-based labels.
  Complex coherence(int i, int j) const {
    if (i == j) return population(i);
    const auto idx = coher_index(i, j, n_);
    const Complex z(values_[idx.re - 1], values_[idx.im - 1]);
    return idx.conjugated ? std::conj(z) : z;
  }

  void set_population(int j, double p) { values_[pop_slot(j, n_)] = p; }
  void set_coherence(int i, int j, Complex z) {
    const auto idx = coher_index(i, j, n_);
    if (idx.conjugated) z = std::conj(z);
    values_[idx.re - 1] = z.real();
    values_[idx.im - 1] = z.imag();
  }

  double trace() const {
    double t = 0.0;
    for (int j = 1; j <= n_; ++j) t += population(j);
    return t;
  }

  CMatrix to_matrix() const {
    CMatrix rho(n_, n_);
    for (int i = 1; i <= n_; ++i)
      for (int j = 1; j <= n_; ++j) rho(i - 1, j - 1) = coherence(i, j);
    return rho;
  }

  /// Upper triangle of a (Hermitian) matrix; the lower triangle is ignored.
  static DensityVector from_matrix(const CMatrix& rho) {
    const int n = static_cast<int>(rho.rows());
    DensityVector r(n);
    for (int j = 1; j <= n; ++j) {
      r.set_population(j, rho(j - 1, j - 1).real());
      for (int i = 1; i < j; ++i) r.set_coherence(i, j, rho(i - 1, j - 1));
    }
    return r;
  }

 private:
  int n_ = 0;
  Vector values_;
};

/// Mixed state with the given populations and no coherences.
inline DensityVector init_rho(std::span<const double> populations) {
  const int n = static_cast<int>(populations.size());
  if (n < 1) throw ValidationError("init_rho: no populations");
  double sum = 0.0;
  for (double p : populations) {
    if (p < 0.0) throw ValidationError("init_rho: negative population");
    sum += p;
  }
  if (std::abs(sum - 1.0) > input_trace_tolerance)
    throw ValidationError("init_rho: populations sum to " + std::to_string(sum) + ", not 1");
  DensityVector r(n);
  for (int j = 1; j <= n; ++j) r.set_population(j, populations[j - 1]);
  return r;
}

inline DensityVector init_rho(std::initializer_list<double> populations) {
  const std::vector<double> v(populations);
  return init_rho(std::span<const double>(v));
}

// ---------------------------------------------------------------------------
// System and field descriptions. Frequencies are given as f = omega/2pi in MHz.
// ---------------------------------------------------------------------------

struct SystemSpec {
  int n_states = 0;
  Vector energy_offsets;   // delta omega^(i) / 2pi, MHz
  Matrix decay_rates;      // (i, j): Gamma/2pi for decay of j into i, MHz
  Matrix dephasing_rates;  // (i, j) or (j, i): gamma/2pi of rho_ij, MHz
  /// Extra jump operators, scaled so that C^dagger C is in units of 2pi MHz.
  std::vector<CMatrix> extra_collapse_ops;

  static SystemSpec make(int n) {
    SystemSpec s;
    s.n_states = n;
    s.energy_offsets = Vector::Zero(n);
    s.decay_rates = Matrix::Zero(n, n);
    s.dephasing_rates = Matrix::Zero(n, n);
    return s;
  }

  /// Dephasing rate (MHz) applied to rho_ij and rho_ji, i != j.
  double dephasing(int i, int j) const {
    const double a = dephasing_rates(i - 1, j - 1);
    const double b = dephasing_rates(j - 1, i - 1);
    if (a != 0.0 && b != 0.0 && a != b)
      throw ValidationError("dephasing rates (" + std::to_string(i) + "," + std::to_string(j) +
                            ") and its transpose differ");
    return a != 0.0 ? a : b;
  }

  void validate() const {
    if (n_states < 2) throw ValidationError("a system needs at least 2 states");
    if (energy_offsets.size() != n_states || decay_rates.rows() != n_states ||
        decay_rates.cols() != n_states || dephasing_rates.rows() != n_states ||
        dephasing_rates.cols() != n_states)
      throw ValidationError("SystemSpec: inconsistent dimensions");
    for (int i = 0; i < n_states; ++i) {
      if (decay_rates(i, i) != 0.0) throw ValidationError("decay rate Gamma_ii must be 0");
      for (int j = 0; j < n_states; ++j) {
        if (decay_rates(i, j) < 0.0) throw ValidationError("negative decay rate");
        if (dephasing_rates(i, j) < 0.0) throw ValidationError("negative dephasing rate");
      }
    }
    for (int i = 1; i <= n_states; ++i)
      for (int j = i + 1; j <= n_states; ++j) (void)dephasing(i, j);
    for (const auto& c : extra_collapse_ops)
      if (c.rows() != n_states || c.cols() != n_states)
        throw ValidationError("collapse operator has wrong dimensions");
  }
};

/// One driving field. Construct with from_rabi or from_dipoles; either way
/// the Hermitian matrix of Rabi frequencies is resolved on construction and is
/// the only coupling data the Liouvillian builder reads.
struct FieldSpec {
  double detuning = 0.0;             // Delta/2pi, MHz
  double wavelength_nm = 0.0;        // 0 = unset
  int direction = +1;                // +1 or -1 along z
  Vector detuning_factors;           // a_i for this field
  CMatrix rabi;                      // Omega_ij / 2pi, MHz, Hermitian
  std::optional<CMatrix> dipoles;    // (upper, lower) entries <i|e.D|j>, C m
  std::optional<Complex> amplitude;  // V/m

  int n_states() const { return static_cast<int>(rabi.rows()); }
  bool has_dipoles() const { return dipoles.has_value() && amplitude.has_value(); }

  /// Rabi frequencies given directly. Either triangle may be filled; an entry
  /// and its transpose, if both given, must be complex conjugates.
  static FieldSpec from_rabi(const CMatrix& rabi_mhz, double detuning_mhz, Vector detuning_factors,
                             double wavelength_nm = 0.0, int direction = +1) {
    const int n = static_cast<int>(rabi_mhz.rows());
    if (rabi_mhz.cols() != n) throw ValidationError("Rabi matrix must be square");
    CMatrix full = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (rabi_mhz(i, i) != Complex(0.0))
        throw ValidationError("diagonal Rabi frequencies must be zero");
      for (int j = i + 1; j < n; ++j) {
        const Complex a = rabi_mhz(i, j);
        const Complex b = rabi_mhz(j, i);
        if (a != Complex(0.0) && b != Complex(0.0) &&
            std::abs(a - std::conj(b)) > 1e-12 * std::max(std::abs(a), std::abs(b)))
          throw ValidationError("non-Hermitian Rabi matrix at (" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ")");
        const Complex v = (b != Complex(0.0)) ? b : std::conj(a);  // Omega_ji
        full(j, i) = v;
        full(i, j) = std::conj(v);
      }
    }
    FieldSpec f;
    f.detuning = detuning_mhz;
    f.wavelength_nm = wavelength_nm;
    f.direction = direction;
    f.detuning_factors = std::move(detuning_factors);
    f.rabi = std::move(full);
    f.validate();
    return f;
  }

  /// Dipole matrix elements <i|eps.D|j> given at (i, j) with i the upper
  /// state, plus the complex amplitude of the field.
  static FieldSpec from_dipoles(const CMatrix& dipoles, Complex amplitude, double detuning_mhz,
                                Vector detuning_factors, double wavelength_nm = 0.0,
                                int direction = +1) {
    const int n = static_cast<int>(dipoles.rows());
    if (dipoles.cols() != n) throw ValidationError("dipole matrix must be square");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        if (i == j && dipoles(i, i) != Complex(0.0))
          throw ValidationError("diagonal dipole moments must be zero");
        if (i != j && dipoles(i, j) != Complex(0.0) && dipoles(j, i) != Complex(0.0))
          throw ValidationError("dipole moment given for both (" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ") and its transpose");
      }
    FieldSpec f;
    f.detuning = detuning_mhz;
    f.wavelength_nm = wavelength_nm;
    f.direction = direction;
    f.detuning_factors = std::move(detuning_factors);
    f.dipoles = dipoles;
    f.set_amplitude(amplitude);
    f.validate();
    return f;
  }

  /// Reset the amplitude of a dipole-specified field and recompute its
  /// Rabi frequencies.
  void set_amplitude(Complex e) {
    if (!dipoles) throw ValidationError("set_amplitude needs dipole moments");
    amplitude = e;
    const int n = static_cast<int>(dipoles->rows());
    rabi = CMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Complex d = (*dipoles)(i, j);
        if (d == Complex(0.0)) continue;
        const Complex om = rabi_from_field(d, e, true);
        rabi(i, j) = om;
        rabi(j, i) = std::conj(om);
      }
  }

  /// Pairs (upper, lower), 1-based, carrying a nonzero dipole moment.
  std::vector<std::pair<int, int>> dipole_pairs() const {
    std::vector<std::pair<int, int>> out;
    if (!dipoles) return out;
    for (int i = 0; i < dipoles->rows(); ++i)
      for (int j = 0; j < dipoles->cols(); ++j)
        if ((*dipoles)(i, j) != Complex(0.0)) out.emplace_back(i + 1, j + 1);
    return out;
  }

  void validate() const {
    const int n = n_states();
    if (rabi.cols() != n) throw ValidationError("Rabi matrix must be square");
    if (detuning_factors.size() != n)
      throw ValidationError("detuning factors must be given for every state");
    if (direction != 1 && direction != -1) throw ValidationError("direction must be +1 or -1");
    if (wavelength_nm < 0.0) throw ValidationError("negative wavelength");
  }
};

}  // namespace obe
