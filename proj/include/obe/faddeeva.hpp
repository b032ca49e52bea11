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

#include <array>
#include <cmath>
#include <complex>

#include "obe/constants.hpp"
#include "obe/error.hpp"

namespace obe {

namespace detail {

// Weideman's rational expansion of w(z) in powers of (L + iz)/(L - iz):
//   w(z) = 2 p(Z) / (L - iz)^2 + 1 / (sqrt(pi) (L - iz)),
// with the polynomial coefficients obtained from a discrete Fourier transform
// of exp(-t^2)(L^2 + t^2) sampled at t = L tan(theta/2).
inline constexpr int faddeeva_terms = 40;

struct FaddeevaCoefficients {
  double l;
  std::array<double, faddeeva_terms> a;  // a[0] multiplies Z^(N-1)
};

inline const FaddeevaCoefficients& faddeeva_coefficients() {
  static const FaddeevaCoefficients coeffs = [] {
    constexpr int n = faddeeva_terms;
    constexpr int m = 2 * n;
    constexpr int m2 = 2 * m;
    FaddeevaCoefficients c{};
    c.l = std::sqrt(n / std::sqrt(2.0));
    // f has length 2m: f[0] = 0, f[1 + (k + m - 1)] for k = -m+1 .. m-1.
    std::array<double, m2> f{};
    for (int k = -m + 1; k <= m - 1; ++k) {
      const double theta = k * constants::pi / m;
      const double t = c.l * std::tan(0.5 * theta);
      f[static_cast<std::size_t>(k + m)] = std::exp(-t * t) * (c.l * c.l + t * t);
    }
    // fftshift by m, then the real part of the forward DFT.
    std::array<double, m2> g{};
    for (int i = 0; i < m2; ++i) g[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>((i + m) % m2)];
    std::array<double, n> re{};
    for (int q = 1; q <= n; ++q) {
      double s = 0.0;
      for (int i = 0; i < m2; ++i) s += g[static_cast<std::size_t>(i)] * std::cos(constants::two_pi * q * i / m2);
      re[static_cast<std::size_t>(q - 1)] = s / m2;
    }
    for (int q = 0; q < n; ++q) c.a[static_cast<std::size_t>(q)] = re[static_cast<std::size_t>(n - 1 - q)];
    return c;
  }();
  return coeffs;
}

inline std::complex<double> faddeeva_upper(std::complex<double> z) {
  const auto& c = faddeeva_coefficients();
  const std::complex<double> iz(-z.imag(), z.real());
  const std::complex<double> den = c.l - iz;
  const std::complex<double> zz = (c.l + iz) / den;
  std::complex<double> p = 0.0;
  for (double a : c.a) p = p * zz + a;
  return 2.0 * p / (den * den) + 1.0 / (std::sqrt(constants::pi) * den);
}

}  // namespace detail

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
///
/// Accurate to ~1e-15 relative in the closed upper half plane. For Im z < 0
/// the reflection w(z) = 2 exp(-z^2) - w(-z) is used, which overflows for
/// large |Im z|; Doppler averaging never needs that half plane because the
/// lower-half case is folded back by conjugation.
inline std::complex<double> faddeeva(std::complex<double> z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw ValidationError("faddeeva: non-finite argument");
  if (z.imag() >= 0.0) return detail::faddeeva_upper(z);
  return 2.0 * std::exp(-z * z) - detail::faddeeva_upper(-z);
}

/// Maxwellian average of 1/(v + mu): (1/(u sqrt(pi))) int exp(-v^2/u^2)/(v + mu) dv.
/// Requires Im mu != 0.
inline std::complex<double> maxwell_average_pole(std::complex<double> mu, double u) {
  if (!(u > 0.0)) throw ValidationError("rms velocity must be positive");
  const std::complex<double> eta = -mu / u;
  const std::complex<double> i_pi(0.0, constants::pi);
  const double norm = 1.0 / (u * std::sqrt(constants::pi));
  if (eta.imag() > 0.0) return norm * i_pi * detail::faddeeva_upper(eta);
  if (eta.imag() < 0.0) return norm * std::conj(i_pi * detail::faddeeva_upper(std::conj(eta)));
  throw SolverError("pole on the real velocity axis: Maxwellian average undefined");
}

}  // namespace obe
