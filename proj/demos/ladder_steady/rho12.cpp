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


// Steady state of the three-state ladder with a hand-written driver,
// printing rho(1,2) only.

#include <cstdio>
#include <vector>

#include "obe/obe.hpp"

int main() {
  using namespace obe;
  auto sys = SystemSpec::make(3);
  sys.decay_rates(0, 1) = 5.0;  // state 2 into state 1, MHz
  sys.decay_rates(1, 2) = 1.0;

  CMatrix probe = CMatrix::Zero(3, 3), coupling = CMatrix::Zero(3, 3);
  probe(1, 0) = 5.0;
  coupling(2, 1) = 10.0;
  Vector a1(3), a2(3);
  a1 << 0.0, -1.0, -1.0;
  a2 << 0.0, 0.0, -1.0;
  const std::vector<FieldSpec> fields{FieldSpec::from_rabi(probe, 5.0, a1),
                                      FieldSpec::from_rabi(coupling, 0.0, a2)};

  try {
    const auto rho = steady_linear(build(sys, fields));
    const Complex r12 = rho.coherence(1, 2);
    std::printf(" rho(1,2) = %12.5E  %12.5E  \n", r12.real(), r12.imag());
  } catch (const Error& e) {
    std::fprintf(stderr, "rho12: %s\n", e.what());
    return 1;
  }
  return 0;
}
