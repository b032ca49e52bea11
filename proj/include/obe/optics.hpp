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

#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "obe/faddeeva.hpp"
#include "obe/steady.hpp"

namespace obe {

struct OpticalResponse {
  double detuning = 0.0;  // MHz, label only
  Complex chi{0.0, 0.0};
  double refractive_index = 1.0;
  double absorption = 0.0;  // 1/m

  /// n = Re sqrt(1 + chi), alpha = 2 k Im sqrt(1 + chi), with k in 1/m.
  static OpticalResponse from_chi(Complex chi, double wave_number_per_m, double detuning = 0.0) {
    const Complex s = std::sqrt(1.0 + chi);
    return {detuning, chi, s.real(), 2.0 * wave_number_per_m * s.imag()};
  }
};

/// Sum over (upper i, lower j) pairs with a dipole of rho_ij conj(d_ij), C m.
inline Complex dipole_coherence_sum(const DensityVector& rho, const FieldSpec& field) {
  if (!field.dipoles) throw ValidationError("susceptibility needs the dipole moments of the field");
  Complex s = 0.0;
  for (const auto& [i, j] : field.dipole_pairs())
    s += rho.coherence(i, j) * std::conj((*field.dipoles)(i - 1, j - 1));
  return s;
}

/// chi = 2 N sum' rho_ij conj(d_ij) / (eps0 E) for one dipole-specified field.
inline OpticalResponse susceptibility(const DensityVector& rho, const FieldSpec& field,
                                      double n_density) {
  if (!field.has_dipoles())
    throw ValidationError("susceptibility needs a field given by dipoles and amplitude");
  const Complex e = *field.amplitude;
  if (e == Complex(0.0)) throw ValidationError("susceptibility undefined at zero field amplitude");
  if (!(field.wavelength_nm > 0.0)) throw ValidationError("susceptibility needs a wavelength");
  const Complex chi = 2.0 * n_density * dipole_coherence_sum(rho, field) / (constants::epsilon0 * e);
  return OpticalResponse::from_chi(chi, wave_number(field.wavelength_nm), field.detuning);
}

// ---------------------------------------------------------------------------
// Weak single field coupling a stable lower group to a decaying upper group.
// ---------------------------------------------------------------------------

struct WeakFieldModel {
  std::vector<double> lower_populations;  // sum to 1
  std::vector<double> lower_offsets;      // MHz
  std::vector<double> upper_offsets;      // MHz
  std::vector<double> upper_decay;        // total decay rate of each upper state, MHz
  std::vector<double> upper_populations;  // optional; must vanish
  CMatrix dipoles;                        // (upper k, lower l), C m
  Matrix collisional;                     // (upper k, lower l) extra dephasing, MHz; may be empty
  double frequency_width = 0.0;           // field linewidth, MHz
  double wavelength_nm = 0.0;
  double n_density = 0.0;  // 1/m^3
  std::optional<double> u;  // rms speed, m/s

  void validate() const {
    const auto n1 = lower_populations.size();
    const auto n2 = upper_offsets.size();
    if (n1 == 0 || n2 == 0) throw ValidationError("weak-field model needs both state groups");
    if (lower_offsets.size() != n1) throw ValidationError("lower_offsets size mismatch");
    if (upper_decay.size() != n2) throw ValidationError("upper_decay size mismatch");
    if (dipoles.rows() != static_cast<Eigen::Index>(n2) ||
        dipoles.cols() != static_cast<Eigen::Index>(n1))
      throw ValidationError("dipole matrix must be (upper x lower)");
    if (collisional.size() != 0 &&
        (collisional.rows() != dipoles.rows() || collisional.cols() != dipoles.cols()))
      throw ValidationError("collisional dephasing matrix must be (upper x lower)");
    for (double p : upper_populations)
      if (p != 0.0) throw ValidationError("upper-group populations must be zero");
    double s = 0.0;
    for (double p : lower_populations) {
      if (p < 0.0) throw ValidationError("negative population");
      s += p;
    }
    if (std::abs(s - 1.0) > input_trace_tolerance)
      throw ValidationError("lower-group populations must sum to 1");
    if (!(wavelength_nm > 0.0)) throw ValidationError("weak-field model needs a wavelength");
    if (u && !(*u > 0.0)) throw ValidationError("rms speed u must be positive");
  }

  /// Total dephasing rate of coherence (upper k, lower l), MHz.
  double total_dephasing(int k, int l) const {
    const double coll = collisional.size() ? collisional(k, l) : 0.0;
    return 0.5 * upper_decay[k] + coll + frequency_width;
  }
};

/// chi(Delta) = (i N / hbar eps0) sum |d|^2 rho_jj / (gamma - i Delta_ij),
/// with the Lorentzian replaced by its Voigt average when u is set.
inline std::vector<OpticalResponse> weakfield_spectrum(const WeakFieldModel& m,
                                                       std::span<const double> detunings) {
  m.validate();
  const double k = wave_number(m.wavelength_nm);
  const double mhz = constants::two_pi * 1e6;
  const Complex prefactor =
      Complex(0.0, 1.0) * m.n_density / (constants::hbar * constants::epsilon0);
  std::vector<OpticalResponse> out;
  out.reserve(detunings.size());
  for (double delta : detunings) {
    Complex chi = 0.0;
    for (Eigen::Index a = 0; a < m.dipoles.rows(); ++a)
      for (Eigen::Index b = 0; b < m.dipoles.cols(); ++b) {
        const double d2 = std::norm(m.dipoles(a, b));
        if (d2 == 0.0 || m.lower_populations[b] == 0.0) continue;
        const double gamma = mhz * m.total_dephasing(int(a), int(b));
        const double dij = mhz * (delta - (m.upper_offsets[a] - m.lower_offsets[b]));
        Complex line;
        if (m.u) {
          const double uk = *m.u * k;
          line = std::sqrt(constants::pi) * faddeeva(Complex(dij, gamma) / uk) / uk;
        } else {
          line = 1.0 / Complex(gamma, -dij);
        }
        chi += d2 * m.lower_populations[b] * line;
      }
    out.push_back(OpticalResponse::from_chi(prefactor * chi, k, delta));
  }
  return out;
}

/// Columns: detuning (MHz), Re chi, Im chi, n, alpha (1/m).
inline void write_spectrum(std::ostream& os, std::span<const OpticalResponse> spectrum) {
  char buf[160];
  os << "# detuning_MHz  Re_chi  Im_chi  n  alpha_per_m\n";
  for (const auto& r : spectrum) {
    std::snprintf(buf, sizeof buf, "%.8e  %.10e  %.10e  %.12e  %.10e\n", r.detuning, r.chi.real(),
                  r.chi.imag(), r.refractive_index, r.absorption);
    os << buf;
  }
}

// ---------------------------------------------------------------------------
// Ladder systems in the weak-probe approximation.
// ---------------------------------------------------------------------------

/// States 1 < 2 < ... < N in energy; field 1 (probe) couples 1-2, field m
/// couples m-(m+1). Rates and detunings in MHz.
struct LadderParams {
  int n_states = 3;
  Complex probe_dipole = 0.0;    // <2|e.D|1>, C m
  Complex probe_amplitude = 0.0;  // V/m
  double probe_detuning = 0.0;
  double probe_wavelength_nm = 0.0;
  std::vector<Complex> coupling_rabi;    // Omega_{m+1,m}, one per coupling field
  std::vector<double> coupling_detuning;
  std::vector<double> coupling_wavelength_nm;  // needed with Doppler
  std::vector<int> directions;                 // one per field, default +1
  std::vector<double> decay;      // Gamma of state m+1 into m, m = 1..N-1
  std::vector<double> dephasing;  // extra gamma of (m, m+1), optional
  double n_density = 0.0;
  std::optional<double> u;
};

struct LadderResult {
  DensityVector rho;
  Complex probe_coherence;  // rho_21
  OpticalResponse response;
};

inline std::pair<SystemSpec, std::vector<FieldSpec>> ladder_model(const LadderParams& p) {
  const int n = p.n_states;
  if (n < 2) throw ValidationError("ladder needs at least two states");
  const auto nc = static_cast<std::size_t>(n - 2);
  if (p.coupling_rabi.size() != nc || p.coupling_detuning.size() != nc)
    throw ValidationError("ladder of " + std::to_string(n) + " states needs " +
                          std::to_string(nc) + " coupling field(s)");
  if (p.decay.size() != static_cast<std::size_t>(n - 1))
    throw ValidationError("ladder decay rates: one per adjacent pair");
  auto sys = SystemSpec::make(n);
  for (int m = 0; m + 1 < n; ++m) {
    sys.decay_rates(m, m + 1) = p.decay[m];
    if (!p.dephasing.empty()) sys.dephasing_rates(m, m + 1) = p.dephasing.at(m);
  }
  auto dir = [&](std::size_t a) { return a < p.directions.size() ? p.directions[a] : +1; };
  std::vector<FieldSpec> fields;
  {
    CMatrix d = CMatrix::Zero(n, n);
    d(1, 0) = p.probe_dipole;
    Vector a = Vector::Zero(n);
    for (int i = 1; i < n; ++i) a[i] = -1.0;
    fields.push_back(FieldSpec::from_dipoles(d, p.probe_amplitude, p.probe_detuning, a,
                                             p.probe_wavelength_nm, dir(0)));
  }
  for (std::size_t c = 0; c < nc; ++c) {
    const int lo = static_cast<int>(c) + 1;
    CMatrix r = CMatrix::Zero(n, n);
    r(lo + 1, lo) = p.coupling_rabi[c];
    Vector a = Vector::Zero(n);
    for (int i = lo + 1; i < n; ++i) a[i] = -1.0;
    const double wl = c < p.coupling_wavelength_nm.size() ? p.coupling_wavelength_nm[c] : 0.0;
    fields.push_back(FieldSpec::from_rabi(r, p.coupling_detuning[c], a, wl, dir(c + 1)));
  }
  return {sys, fields};
}

inline LadderResult weakprb_ladder(const LadderParams& p) {
  const auto [sys, fields] = ladder_model(p);
  std::vector<double> pops(static_cast<std::size_t>(p.n_states), 0.0);
  pops[0] = 1.0;
  const auto frozen = init_rho(pops);
  LadderResult res;
  res.rho = steady_ladder_weakprobe(sys, fields, frozen, p.u);
  res.probe_coherence = res.rho.coherence(2, 1);
  res.response = susceptibility(res.rho, fields[0], p.n_density);
  return res;
}

inline LadderResult weakprb_3stladder(const LadderParams& p) {
  if (p.n_states != 3) throw ValidationError("weakprb_3stladder: n_states must be 3");
  return weakprb_ladder(p);
}

inline LadderResult weakprb_4stladder(const LadderParams& p) {
  if (p.n_states != 4) throw ValidationError("weakprb_4stladder: n_states must be 4");
  return weakprb_ladder(p);
}

}  // namespace obe
