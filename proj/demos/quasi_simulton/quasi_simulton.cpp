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


// Quasi-simulton formation in a dense Rb-85 vapour (three states, no Doppler
// broadening) at a reduced grid. Writes the applied fields to
// appliedfields.dat and the propagated amplitudes to outamplitudes.dat, then
// prints a short summary of the fields inside the medium.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "obe/obe.hpp"

int main() {
  using namespace obe;
  auto sys = SystemSpec::make(3);
  sys.decay_rates(0, 1) = 5.746;   // 5P1/2
  sys.decay_rates(0, 2) = 6.0666;  // 5P3/2

  const double d1 = 1.465e-29, d2 = 2.06937e-29;  // C m
  CMatrix dp = CMatrix::Zero(3, 3), dc = CMatrix::Zero(3, 3);
  dp(1, 0) = d1;
  dc(2, 0) = d2;
  Vector ap = Vector::Zero(3), ac = Vector::Zero(3);
  ap[1] = -1.0;
  ac[2] = -1.0;
  const std::vector<FieldSpec> fields{FieldSpec::from_dipoles(dp, 0.0, 0.0, ap, 794.979),
                                      FieldSpec::from_dipoles(dc, 0.0, 0.0, ac, 780.241)};

  const double probe = intensity_to_amplitude(0.1);     // 10 uW/cm^2
  const double coupling = intensity_to_amplitude(1e7);  // 1 kW/cm^2
  const double rabi = d2 * coupling / constants::hbar * 1e-6;  // rad/us
  const double width = 6.0 * std::sqrt(constants::pi) / rabi;  // pulse area 6 pi

  EnvelopeSet env;
  env.times = obe::detail::uniform_mesh(0.0, 0.03, 600);
  env.fields.push_back(make_envelope(EnvelopeShape::cw, probe, 0.0, 0.0, env.times));
  env.fields.push_back(make_envelope(EnvelopeShape::gaussian, coupling, 0.004, width, env.times));
  {
    std::ofstream os("appliedfields.dat");
    write_envelopes(os, env);
  }

  MbeOptions opt;
  opt.time = {Method::rk5, 2};
  opt.nz_writeout = 20;
  auto out = open_amplitude_file("outamplitudes.dat", false);
  const auto to_file = amplitude_stream_writer(out);

  double probe_peak = 0.0;
  std::vector<double> last;
  double last_z = -1.0;
  auto writer = [&](double z, double t, std::span<const Complex> e) {
    to_file(z, t, e);
    probe_peak = std::max(probe_peak, std::norm(e[0]));
    if (z != last_z) last.clear(), last_z = z;
    last.push_back(std::norm(e[1]));
  };
  try {
    propagate(sys, fields, {16.0, 400}, env, init_rho({1.0, 0.0, 0.0}), 1.96e21, opt,
              std::nullopt, writer);
  } catch (const Error& e) {
    std::fprintf(stderr, "quasi_simulton: %s\n", e.what());
    return 1;
  }

  const double top = *std::max_element(last.begin(), last.end());
  int maxima = 0;
  for (std::size_t k = 1; k + 1 < last.size(); ++k)
    if (last[k] > last[k - 1] && last[k] >= last[k + 1] && last[k] > 0.05 * top) ++maxima;
  std::printf("coupling pulse width   %.6e us\n", width);
  std::printf("probe peak / input     %.4f\n", probe_peak / (probe * probe));
  std::printf("coupling maxima at 16 um: %d\n", maxima);
  return 0;
}
