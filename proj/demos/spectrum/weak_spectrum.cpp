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


// Weak-field absorption spectrum of a single Rb-87 D2 line, with and without
// Doppler broadening at 20 C. Columns as written by write_spectrum.

#include <iostream>
#include <vector>

#include "obe/obe.hpp"

int main() {
  using namespace obe;
  WeakFieldModel m;
  m.lower_populations = {1.0};
  m.lower_offsets = {0.0};
  m.upper_offsets = {0.0};
  m.upper_decay = {6.0666};
  m.dipoles = CMatrix::Constant(1, 1, Complex(2.06937e-29, 0.0));
  m.wavelength_nm = 780.241;
  m.n_density = 1e16;

  std::vector<double> detunings;
  for (int k = -400; k <= 400; ++k) detunings.push_back(2.5 * k);  // MHz

  std::cout << "# homogeneous line\n";
  write_spectrum(std::cout, weakfield_spectrum(m, detunings));
  m.u = maxwell_u(293.15, 86.909 * 1.66053906660e-27);
  std::cout << "\n# Doppler broadened, u = " << *m.u << " m/s\n";
  write_spectrum(std::cout, weakfield_spectrum(m, detunings));
  return 0;
}
