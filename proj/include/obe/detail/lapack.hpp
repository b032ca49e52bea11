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

#include <complex>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "obe/error.hpp"
#include "obe/system.hpp"

namespace obe::detail {

struct GeneralizedEigen {
  CVector alpha;
  CVector beta;
  CMatrix left;   // y_j^H A = lambda_j y_j^H B
  CMatrix right;  // A x_j = lambda_j B x_j
};

/// Generalized eigenproblem of the pencil (A, B) with left and right vectors.
inline GeneralizedEigen ggev(const CMatrix& a_in, const CMatrix& b_in) {
  const auto n = static_cast<lapack_int>(a_in.rows());
  CMatrix a = a_in;
  CMatrix b = b_in;
  GeneralizedEigen out;
  out.alpha.resize(n);
  out.beta.resize(n);
  out.left.resize(n, n);
  out.right.resize(n, n);
  if (n == 0) return out;
  const lapack_int info =
      LAPACKE_zggev(LAPACK_COL_MAJOR, 'V', 'V', n, a.data(), n, b.data(), n, out.alpha.data(),
                    out.beta.data(), out.left.data(), n, out.right.data(), n);
  if (info != 0)
    throw SolverError("generalized eigenvalue problem failed (zggev info = " +
                      std::to_string(info) + ")");
  return out;
}

}  // namespace obe::detail
