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

#include <stdexcept>
#include <string>

namespace obe {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (configuration files, envelope or grid files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are well-formed but inconsistent or out of range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular systems, defective eigenbases, NaNs,
/// step-size underflow.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace obe
