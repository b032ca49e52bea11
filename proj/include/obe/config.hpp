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
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "obe/error.hpp"
#include "obe/system.hpp"

namespace obe::config {

// ---------------------------------------------------------------------------
// Assignment-statement files: `key = value` or `key(i[,j[,k]]) = value`,
// `!` comments, `&name` headers and `/` terminators ignored.
// ---------------------------------------------------------------------------

struct Value {
  enum class Kind { number, complex, string } kind = Kind::number;
  Complex number{0.0, 0.0};
  std::string text;
};

struct Assignment {
  std::string key;  // lower case
  std::vector<int> indices;
  Value value;
  int line = 0;
};

namespace detail {

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void fail(const std::string& source, int line, const std::string& msg) {
  throw ParseError(source + ":" + std::to_string(line) + ": " + msg);
}

/// Reals accept Fortran d/D exponents.
inline bool parse_real(std::string s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  for (auto& c : s)
    if (c == 'd' || c == 'D') c = 'e';
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

inline std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '!') {
      return line.substr(0, i);
    }
  }
  return line;
}

inline Value parse_value(const std::string& raw, const std::string& source, int line) {
  std::string s = trim(raw);
  if (!s.empty() && s.back() == ',') s = trim(s.substr(0, s.size() - 1));
  if (s.empty()) fail(source, line, "missing value");
  Value v;
  if (s.front() == '\'' || s.front() == '"') {
    if (s.size() < 2 || s.back() != s.front()) fail(source, line, "unterminated string");
    v.kind = Value::Kind::string;
    v.text = s.substr(1, s.size() - 2);
    return v;
  }
  if (s.front() == '(') {
    if (s.back() != ')') fail(source, line, "malformed complex value '" + s + "'");
    const auto comma = s.find(',');
    double re = 0.0, im = 0.0;
    if (comma == std::string::npos || !parse_real(s.substr(1, comma - 1), re) ||
        !parse_real(s.substr(comma + 1, s.size() - comma - 2), im))
      fail(source, line, "malformed complex value '" + s + "'");
    v.kind = Value::Kind::complex;
    v.number = {re, im};
    return v;
  }
  double x = 0.0;
  if (!parse_real(s, x)) fail(source, line, "malformed number '" + s + "'");
  v.number = {x, 0.0};
  return v;
}

}  // namespace detail

inline std::vector<Assignment> parse_assignments(std::istream& in, const std::string& source) {
  std::vector<Assignment> out;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty() || line.front() == '&' || line == "/" || line == "\\") continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::fail(source, lineno, "expected 'key = value'");
    std::string lhs = detail::trim(line.substr(0, eq));
    Assignment a;
    a.line = lineno;
    const auto lp = lhs.find('(');
    if (lp != std::string::npos) {
      if (lhs.back() != ')') detail::fail(source, lineno, "malformed index list in '" + lhs + "'");
      std::stringstream idx(lhs.substr(lp + 1, lhs.size() - lp - 2));
      std::string item;
      while (std::getline(idx, item, ',')) {
        double x = 0.0;
        if (!detail::parse_real(item, x) || x != static_cast<int>(x))
          detail::fail(source, lineno, "non-integer index in '" + lhs + "'");
        a.indices.push_back(static_cast<int>(x));
      }
      lhs = detail::trim(lhs.substr(0, lp));
    }
    if (lhs.empty()) detail::fail(source, lineno, "missing key");
    for (char c : lhs)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
        detail::fail(source, lineno, "invalid key '" + lhs + "'");
    a.key = detail::lower(lhs);
    a.value = detail::parse_value(line.substr(eq + 1), source, lineno);
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Typed configuration.
// ---------------------------------------------------------------------------

struct KeyParams {
  int n_states = 0;
  int n_min = 1;
  int n_fields = 0;
  bool complex_fields = false;
  std::string control_file;

  bool operator==(const KeyParams&) const = default;
};

enum class CalcMode { time_dependent = 1, steady_state = 2, mbe_propagation = 3 };

using Index1 = int;
using Index2 = std::array<int, 2>;
using Index3 = std::array<int, 3>;

/// Control parameters; state labels are kept as written (external numbering).
struct ControlParams {
  std::optional<CalcMode> calc;
  int rabi_given = 1;   // iRabi
  int non_cw = 0;       // inoncw
  int weak_probe = 0;   // iweakprb
  int doppler = 0;      // iDoppler

  std::map<Index3, Complex> rabi;        // Rabif(i,j,a), MHz
  std::map<Index3, Complex> dipoles;     // dip_mom(i,j,a), C m, i upper
  std::map<Index2, double> decay;        // Gamma_decay_f(i,j): j decays into i, MHz
  std::map<Index2, double> dephasing;    // gamma_deph_f(i,j), MHz
  std::map<Index1, double> energy;       // energ_f(i), MHz
  std::map<Index2, double> detuning_factor;  // detuning_fact(i,a)
  std::map<Index1, double> detuning;     // detuning(a), MHz
  std::map<Index1, double> wavelength;   // nm
  std::map<Index1, int> direction;       // idir(a)
  std::map<Index1, Complex> amplitude;   // ampl(a), V/m
  std::map<Index1, double> intensity;    // intensity(a), W/m^2
  std::map<Index1, std::string> envelope;  // envelope(a): cw, gaussian, sech
  std::map<Index1, double> pulse_centre;   // us
  std::map<Index1, double> pulse_width;    // us

  double density = 0.0;  // 1/m^3

  std::optional<double> urms;  // m/s
  std::string vgrid = "trapezoid";
  int n_vclasses = 501;
  double vspan = 5.0;
  std::string filename_vgrid;
  int idoppler_method = 1;  // 1 semi-analytic, 2 quadrature

  int isteady = 1;  // 1 linear equations, 2 null vector

  int n_time_steps = 0;
  double tmin = 0.0;
  std::optional<double> tmax;
  int imethod = 4;
  int nsubsteps = 1;
  int nt_writeout = 1;
  double rtol = 1e-8;
  double atol = 1e-8;
  int imemory = 2;  // 1 precompute all classes, 2 streaming

  double zmax = 0.0;  // um
  int n_z_steps = 0;
  int nz_writeout = 1;
  int izrule = 3;
  int itdfieldsaorb = 1;  // 1 envelopes from shape keys, 2 from file
  std::string filename_tdamps_in;
  std::string filename_tdamps_out = "outamplitudes.dat";
  int iappend = 0;

  int istart = 1;  // 1 all population in the lowest state, 2 popinit
  std::map<Index1, double> popinit;

  std::string filename_out;  // steady / time-dependent output; empty = stdout

  bool operator==(const ControlParams&) const = default;
};

struct RunConfig {
  KeyParams keys;
  ControlParams control;

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

struct Context {
  const std::string& source;
  const Assignment& a;
};

inline void expect_indices(const Context& c, std::size_t n) {
  if (c.a.indices.size() != n)
    fail(c.source, c.a.line,
         "'" + c.a.key + "' expects " + std::to_string(n) + " index(es), got " +
             std::to_string(c.a.indices.size()));
}

inline double real_of(const Context& c) {
  if (c.a.value.kind != Value::Kind::number)
    fail(c.source, c.a.line, "'" + c.a.key + "' expects a real number");
  return c.a.value.number.real();
}

inline int int_of(const Context& c) {
  const double x = real_of(c);
  if (x != static_cast<int>(x)) fail(c.source, c.a.line, "'" + c.a.key + "' expects an integer");
  return static_cast<int>(x);
}

inline std::string string_of(const Context& c) {
  if (c.a.value.kind != Value::Kind::string)
    fail(c.source, c.a.line, "'" + c.a.key + "' expects a quoted string");
  return c.a.value.text;
}

inline Complex complex_of(const Context& c, bool allow_complex) {
  if (c.a.value.kind == Value::Kind::string)
    fail(c.source, c.a.line, "'" + c.a.key + "' expects a number");
  if (c.a.value.kind == Value::Kind::complex && !allow_complex)
    fail(c.source, c.a.line, "complex value for '" + c.a.key + "' needs icmplxfld = 1");
  return c.a.value.number;
}

inline void check_range(const Context& c, int value, int lo, int hi, const char* what) {
  if (value < lo || value > hi)
    fail(c.source, c.a.line,
         std::string(what) + " " + std::to_string(value) + " in '" + c.a.key +
             "' out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace detail

inline KeyParams parse_keyparams(std::istream& in, const std::string& source = "keyparams") {
  KeyParams k;
  bool have_n = false, have_f = false, have_c = false;
  for (const auto& a : parse_assignments(in, source)) {
    const detail::Context c{source, a};
    detail::expect_indices(c, 0);
    if (a.key == "nstates") {
      k.n_states = detail::int_of(c);
      have_n = true;
    } else if (a.key == "nmin") {
      k.n_min = detail::int_of(c);
    } else if (a.key == "nfields") {
      k.n_fields = detail::int_of(c);
      have_f = true;
    } else if (a.key == "icmplxfld") {
      k.complex_fields = detail::int_of(c) != 0;
    } else if (a.key == "filename_controlparams") {
      k.control_file = detail::string_of(c);
      have_c = true;
    } else {
      detail::fail(source, a.line, "unknown key '" + a.key + "'");
    }
  }
  if (!have_n) throw ParseError(source + ": missing mandatory key 'nstates'");
  if (!have_f) throw ParseError(source + ": missing mandatory key 'nfields'");
  if (!have_c) throw ParseError(source + ": missing mandatory key 'filename_controlparams'");
  if (k.n_states < 2) throw ValidationError(source + ": nstates must be at least 2");
  if (k.n_fields < 0) throw ValidationError(source + ": nfields must be non-negative");
  return k;
}

inline ControlParams parse_controlparams(std::istream& in, const KeyParams& keys,
                                         const std::string& source = "controlparams") {
  ControlParams p;
  const int lo = keys.n_min;
  const int hi = keys.n_min + keys.n_states - 1;
  for (const auto& a : parse_assignments(in, source)) {
    const detail::Context c{source, a};
    auto state = [&](std::size_t k) {
      detail::check_range(c, a.indices[k], lo, hi, "state label");
      return a.indices[k];
    };
    auto field = [&](std::size_t k) {
      detail::check_range(c, a.indices[k], 1, keys.n_fields, "field index");
      return a.indices[k];
    };
    auto scalar_int = [&](int& dst) { detail::expect_indices(c, 0); dst = detail::int_of(c); };
    auto scalar_real = [&](double& dst) { detail::expect_indices(c, 0); dst = detail::real_of(c); };
    auto scalar_string = [&](std::string& dst) {
      detail::expect_indices(c, 0);
      dst = detail::string_of(c);
    };
    auto per_field_real = [&](std::map<Index1, double>& dst) {
      detail::expect_indices(c, 1);
      dst[field(0)] = detail::real_of(c);
    };
    const auto& k = a.key;
    if (k == "icalc") {
      detail::expect_indices(c, 0);
      const int m = detail::int_of(c);
      detail::check_range(c, m, 1, 3, "calculation mode");
      p.calc = static_cast<CalcMode>(m);
    } else if (k == "irabi") {
      scalar_int(p.rabi_given);
    } else if (k == "inoncw") {
      scalar_int(p.non_cw);
    } else if (k == "iweakprb") {
      scalar_int(p.weak_probe);
    } else if (k == "idoppler") {
      scalar_int(p.doppler);
    } else if (k == "rabif" || k == "dip_mom") {
      detail::expect_indices(c, 3);
      const Index3 idx{state(0), state(1), field(2)};
      if (idx[0] == idx[1]) detail::fail(source, a.line, "diagonal entry in '" + k + "'");
      (k == "rabif" ? p.rabi : p.dipoles)[idx] = detail::complex_of(c, keys.complex_fields);
    } else if (k == "gamma_decay_f" || k == "gamma_deph_f") {
      detail::expect_indices(c, 2);
      const Index2 idx{state(0), state(1)};
      (k == "gamma_decay_f" ? p.decay : p.dephasing)[idx] = detail::real_of(c);
    } else if (k == "energ_f") {
      detail::expect_indices(c, 1);
      p.energy[state(0)] = detail::real_of(c);
    } else if (k == "detuning_fact") {
      detail::expect_indices(c, 2);
      p.detuning_factor[{state(0), field(1)}] = detail::real_of(c);
    } else if (k == "detuning") {
      per_field_real(p.detuning);
    } else if (k == "wavelength") {
      per_field_real(p.wavelength);
    } else if (k == "idir") {
      detail::expect_indices(c, 1);
      p.direction[field(0)] = detail::int_of(c);
    } else if (k == "ampl") {
      detail::expect_indices(c, 1);
      p.amplitude[field(0)] = detail::complex_of(c, keys.complex_fields);
    } else if (k == "intensity") {
      per_field_real(p.intensity);
    } else if (k == "envelope") {
      detail::expect_indices(c, 1);
      p.envelope[field(0)] = detail::string_of(c);
    } else if (k == "pulse_centre") {
      per_field_real(p.pulse_centre);
    } else if (k == "pulse_width") {
      per_field_real(p.pulse_width);
    } else if (k == "density") {
      scalar_real(p.density);
    } else if (k == "urms") {
      detail::expect_indices(c, 0);
      p.urms = detail::real_of(c);
    } else if (k == "vgrid") {
      scalar_string(p.vgrid);
    } else if (k == "n_vclasses") {
      scalar_int(p.n_vclasses);
    } else if (k == "vspan") {
      scalar_real(p.vspan);
    } else if (k == "filename_vgrid") {
      scalar_string(p.filename_vgrid);
    } else if (k == "idoppler_method") {
      scalar_int(p.idoppler_method);
    } else if (k == "isteady") {
      scalar_int(p.isteady);
    } else if (k == "n_time_steps") {
      scalar_int(p.n_time_steps);
    } else if (k == "tmin") {
      scalar_real(p.tmin);
    } else if (k == "tmax") {
      detail::expect_indices(c, 0);
      p.tmax = detail::real_of(c);
    } else if (k == "imethod") {
      scalar_int(p.imethod);
    } else if (k == "nsubsteps") {
      scalar_int(p.nsubsteps);
    } else if (k == "nt_writeout") {
      scalar_int(p.nt_writeout);
    } else if (k == "rtol") {
      scalar_real(p.rtol);
    } else if (k == "atol") {
      scalar_real(p.atol);
    } else if (k == "imemory") {
      scalar_int(p.imemory);
    } else if (k == "zmax") {
      scalar_real(p.zmax);
    } else if (k == "n_z_steps") {
      scalar_int(p.n_z_steps);
    } else if (k == "nz_writeout") {
      scalar_int(p.nz_writeout);
    } else if (k == "izrule") {
      scalar_int(p.izrule);
    } else if (k == "itdfieldsaorb") {
      scalar_int(p.itdfieldsaorb);
    } else if (k == "filename_tdamps_in") {
      scalar_string(p.filename_tdamps_in);
    } else if (k == "filename_tdamps_out") {
      scalar_string(p.filename_tdamps_out);
    } else if (k == "iappend") {
      scalar_int(p.iappend);
    } else if (k == "istart") {
      scalar_int(p.istart);
    } else if (k == "popinit") {
      detail::expect_indices(c, 1);
      p.popinit[state(0)] = detail::real_of(c);
    } else if (k == "filename_out") {
      scalar_string(p.filename_out);
    } else {
      detail::fail(source, a.line, "unknown key '" + a.key + "'");
    }
  }
  if (!p.calc) throw ParseError(source + ": missing mandatory key 'icalc'");
  return p;
}

inline RunConfig parse_config(std::istream& key_in, const std::string& key_source = "keyparams") {
  RunConfig cfg;
  cfg.keys = parse_keyparams(key_in, key_source);
  std::ifstream ctl(cfg.keys.control_file);
  if (!ctl) throw Error("cannot open control file '" + cfg.keys.control_file + "'");
  cfg.control = parse_controlparams(ctl, cfg.keys, cfg.keys.control_file);
  return cfg;
}

inline RunConfig parse_config(const std::string& key_path) {
  std::ifstream in(key_path);
  if (!in) throw Error("cannot open keyparams file '" + key_path + "'");
  return parse_config(in, key_path);
}

// ---------------------------------------------------------------------------
// Serialisation (parse(serialize(x)) == x).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_complex(Complex z, bool as_complex) {
  if (!as_complex) return fmt_real(z.real());
  return "(" + fmt_real(z.real()) + "," + fmt_real(z.imag()) + ")";
}

inline std::string fmt_string(const std::string& s) { return "'" + s + "'"; }

template <std::size_t N>
std::string fmt_index(const std::array<int, N>& idx) {
  std::string s = "(";
  for (std::size_t k = 0; k < N; ++k) s += (k ? "," : "") + std::to_string(idx[k]);
  return s + ")";
}

inline std::string fmt_index(int i) { return "(" + std::to_string(i) + ")"; }

}  // namespace detail

inline std::string serialize_keyparams(const KeyParams& k) {
  std::ostringstream os;
  os << "&keyparams\n"
     << "   nstates = " << k.n_states << "\n"
     << "   nmin = " << k.n_min << "\n"
     << "   nfields = " << k.n_fields << "\n"
     << "   icmplxfld = " << (k.complex_fields ? 1 : 0) << "\n"
     << "   filename_controlparams = " << detail::fmt_string(k.control_file) << "\n"
     << "/\n";
  return os.str();
}

inline std::string serialize_controlparams(const ControlParams& p, const KeyParams& k) {
  using namespace detail;
  std::ostringstream os;
  auto line = [&](const std::string& key, const std::string& v) {
    os << "   " << key << " = " << v << "\n";
  };
  auto cplx = [&](Complex z) { return fmt_complex(z, k.complex_fields || z.imag() != 0.0); };
  os << "&controlparams\n";
  if (p.calc) line("icalc", std::to_string(static_cast<int>(*p.calc)));
  line("iRabi", std::to_string(p.rabi_given));
  line("inoncw", std::to_string(p.non_cw));
  line("iweakprb", std::to_string(p.weak_probe));
  line("iDoppler", std::to_string(p.doppler));
  for (const auto& [i, v] : p.rabi) line("Rabif" + fmt_index(i), cplx(v));
  for (const auto& [i, v] : p.dipoles) line("dip_mom" + fmt_index(i), cplx(v));
  for (const auto& [i, v] : p.decay) line("Gamma_decay_f" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.dephasing) line("gamma_deph_f" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.energy) line("energ_f" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.detuning_factor) line("detuning_fact" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.detuning) line("detuning" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.wavelength) line("wavelength" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.direction) line("idir" + fmt_index(i), std::to_string(v));
  for (const auto& [i, v] : p.amplitude) line("ampl" + fmt_index(i), cplx(v));
  for (const auto& [i, v] : p.intensity) line("intensity" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.envelope) line("envelope" + fmt_index(i), fmt_string(v));
  for (const auto& [i, v] : p.pulse_centre) line("pulse_centre" + fmt_index(i), fmt_real(v));
  for (const auto& [i, v] : p.pulse_width) line("pulse_width" + fmt_index(i), fmt_real(v));
  line("density", fmt_real(p.density));
  if (p.urms) line("urms", fmt_real(*p.urms));
  line("vgrid", fmt_string(p.vgrid));
  line("n_vclasses", std::to_string(p.n_vclasses));
  line("vspan", fmt_real(p.vspan));
  line("filename_vgrid", fmt_string(p.filename_vgrid));
  line("idoppler_method", std::to_string(p.idoppler_method));
  line("isteady", std::to_string(p.isteady));
  line("n_time_steps", std::to_string(p.n_time_steps));
  line("tmin", fmt_real(p.tmin));
  if (p.tmax) line("tmax", fmt_real(*p.tmax));
  line("imethod", std::to_string(p.imethod));
  line("nsubsteps", std::to_string(p.nsubsteps));
  line("nt_writeout", std::to_string(p.nt_writeout));
  line("rtol", fmt_real(p.rtol));
  line("atol", fmt_real(p.atol));
  line("imemory", std::to_string(p.imemory));
  line("zmax", fmt_real(p.zmax));
  line("n_z_steps", std::to_string(p.n_z_steps));
  line("nz_writeout", std::to_string(p.nz_writeout));
  line("izrule", std::to_string(p.izrule));
  line("itdfieldsAorB", std::to_string(p.itdfieldsaorb));
  line("filename_tdamps_in", fmt_string(p.filename_tdamps_in));
  line("filename_tdamps_out", fmt_string(p.filename_tdamps_out));
  line("iappend", std::to_string(p.iappend));
  line("istart", std::to_string(p.istart));
  for (const auto& [i, v] : p.popinit) line("popinit" + fmt_index(i), fmt_real(v));
  line("filename_out", fmt_string(p.filename_out));
  os << "/\n";
  return os.str();
}

}  // namespace obe::config
