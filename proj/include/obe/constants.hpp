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

#include <numbers>

// CODATA 2018 values, SI units.
namespace obe::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double speed_of_light = 299792458.0;             // m/s
inline constexpr double hbar = 1.054571817e-34;                   // J s
inline constexpr double boltzmann = 1.380649e-23;                 // J/K
inline constexpr double epsilon0 = 8.8541878128e-12;              // F/m
inline constexpr double elementary_charge = 1.602176634e-19;      // C

// Internal time unit is the microsecond; angular frequencies are rad/us.
inline constexpr double mhz_to_rad_per_us = two_pi;
inline constexpr double rad_per_s_to_rad_per_us = 1.0e-6;

inline constexpr double mw_per_cm2 = 10.0;  // W/m^2

}  // namespace obe::constants
