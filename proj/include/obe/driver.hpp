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
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "obe/config.hpp"
#include "obe/doppler.hpp"
#include "obe/mbe.hpp"
#include "obe/steady.hpp"

namespace obe::driver {

using config::CalcMode;
using config::RunConfig;

struct Model {
  SystemSpec system;
  std::vector<FieldSpec> fields;
  DensityVector initial;
  StateNumbering numbering;
};

namespace detail {

inline Complex field_amplitude(const config::ControlParams& p, int a) {
  if (const auto it = p.amplitude.find(a); it != p.amplitude.end()) return it->second;
  if (const auto it = p.intensity.find(a); it != p.intensity.end())
    return intensity_to_amplitude(it->second);
  return 0.0;
}

inline bool has_amplitude(const config::ControlParams& p, int a) {
  return p.amplitude.count(a) || p.intensity.count(a);
}

template <class Map>
double lookup(const Map& m, int key, double fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

}  // namespace detail

inline Model build_model(const RunConfig& cfg) {
  const auto& k = cfg.keys;
  const auto& p = cfg.control;
  const int n = k.n_states;
  Model m{SystemSpec::make(n), {}, DensityVector(n), StateNumbering(k.n_min, n)};
  const auto& num = m.numbering;
  auto in = [&](int label) { return num.to_internal(label) - 1; };

  for (const auto& [idx, v] : p.decay) m.system.decay_rates(in(idx[0]), in(idx[1])) = v;
  for (const auto& [idx, v] : p.dephasing) m.system.dephasing_rates(in(idx[0]), in(idx[1])) = v;
  for (const auto& [label, v] : p.energy) m.system.energy_offsets[in(label)] = v;
  m.system.validate();

  const bool pulsed = p.non_cw != 0 || cfg.control.calc == CalcMode::mbe_propagation;
  for (int a = 1; a <= k.n_fields; ++a) {
    Vector factors = Vector::Zero(n);
    for (const auto& [idx, v] : p.detuning_factor)
      if (idx[1] == a) factors[in(idx[0])] = v;
    const double det = detail::lookup(p.detuning, a, 0.0);
    const double wl = detail::lookup(p.wavelength, a, 0.0);
    const int dir = static_cast<int>(detail::lookup(p.direction, a, 1));
    if (p.rabi_given) {
      if (pulsed) throw ValidationError("time-dependent envelopes need dipole moments (iRabi = 0)");
      CMatrix r = CMatrix::Zero(n, n);
      for (const auto& [idx, v] : p.rabi)
        if (idx[2] == a) r(in(idx[0]), in(idx[1])) = v;
      m.fields.push_back(FieldSpec::from_rabi(r, det, factors, wl, dir));
    } else {
      CMatrix d = CMatrix::Zero(n, n);
      for (const auto& [idx, v] : p.dipoles)
        if (idx[2] == a) d(in(idx[0]), in(idx[1])) = v;
      if (!pulsed && !detail::has_amplitude(p, a))
        throw ValidationError("field " + std::to_string(a) + ": missing ampl or intensity");
      m.fields.push_back(FieldSpec::from_dipoles(d, pulsed ? Complex(0.0) : detail::field_amplitude(p, a),
                                                 det, factors, wl, dir));
    }
  }

  if (p.istart == 1) {
    std::vector<double> pops(static_cast<std::size_t>(n), 0.0);
    pops[0] = 1.0;
    m.initial = init_rho(pops);
  } else if (p.istart == 2) {
    std::vector<double> pops(static_cast<std::size_t>(n), 0.0);
    for (const auto& [label, v] : p.popinit) pops[static_cast<std::size_t>(in(label))] = v;
    m.initial = init_rho(pops);
  } else {
    throw ValidationError("istart must be 1 or 2");
  }
  return m;
}

inline Method method_from_code(int code) {
  switch (code) {
    case 4: return Method::rk4;
    case 5: return Method::rk5;
    case 8: return Method::adaptive;
    case 0: return Method::eigen;
    default: throw ValidationError("imethod must be 0, 4, 5 or 8");
  }
}

inline IntegratorOptions integrator_options(const config::ControlParams& p) {
  IntegratorOptions o;
  o.method = method_from_code(p.imethod);
  o.n_substeps = p.nsubsteps;
  o.rtol = p.rtol;
  o.atol = p.atol;
  return o;
}

inline double rms_speed(const config::ControlParams& p) {
  if (!p.urms) throw ValidationError("Doppler averaging needs urms");
  return *p.urms;
}

inline VelocityGrid velocity_grid(const config::ControlParams& p) {
  const double u = rms_speed(p);
  if (p.vgrid == "file") return load_grid(p.filename_vgrid);
  if (p.vgrid == "trapezoid") return make_grid(GridKind::trapezoid, p.n_vclasses, p.vspan, u);
  if (p.vgrid == "clenshaw_curtis")
    return make_grid(GridKind::clenshaw_curtis, p.n_vclasses, p.vspan, u);
  if (p.vgrid == "gauss_hermite") return make_grid(GridKind::gauss_hermite, p.n_vclasses, p.vspan, u);
  throw ValidationError("unknown vgrid '" + p.vgrid + "'");
}

// ---------------------------------------------------------------------------
// Steady state.
// ---------------------------------------------------------------------------

namespace detail {

inline DensityVector weak_steady_at(const Model& m, double v) {
  const auto red = weak_probe_reduce(m.system, m.fields, m.initial, v);
  try {
    return steady_ladder_weakprobe(red.reduced, m.initial);
  } catch (const ValidationError&) {
  } catch (const SolverError&) {
  }
  return steady_linear(red.reduced);
}

}  // namespace detail

inline DensityVector solve_steady(const RunConfig& cfg, const Model& m) {
  const auto& p = cfg.control;
  if (p.non_cw) throw ValidationError("steady state needs CW fields (inoncw = 0)");
  const bool weak = p.weak_probe != 0;
  if (weak && m.fields.empty()) throw ValidationError("weak-probe approximation needs a field");
  if (!p.doppler) {
    if (weak) return detail::weak_steady_at(m, 0.0);
    const auto l = build(m.system, m.fields);
    if (p.isteady == 2) return steady_eigen(l, m.initial);
    if (p.isteady != 1) throw ValidationError("isteady must be 1 or 2");
    return steady_linear(l);
  }
  const double u = rms_speed(p);
  if (p.idoppler_method == 1) {
    const auto split = split_velocity(m.system, m.fields);
    if (!weak) return steady_doppler_semianalytic(factor_steady(split), u);
    const auto wsplit = weak_probe_reduce(m.system, m.fields, m.initial, split);
    try {
      return steady_ladder_weakprobe(wsplit, m.initial, u);
    } catch (const ValidationError&) {
    } catch (const SolverError&) {
    }
    return steady_doppler_semianalytic(factor_steady(wsplit), u);
  }
  if (p.idoppler_method != 2) throw ValidationError("idoppler_method must be 1 or 2");
  const auto grid = velocity_grid(p);
  if (weak)
    return average_steady_numerical([&](double v) { return detail::weak_steady_at(m, v); }, grid, u);
  return average_steady_numerical(split_velocity(m.system, m.fields), grid, u);
}

/// Upper triangle in column order: (1,1), (1,2), (2,2), (1,3), ...
inline void write_steady(std::ostream& os, const DensityVector& r, const StateNumbering& num) {
  char buf[64];
  os << "   i   j   Re rho(i,j)   Im rho(i,j)\n\n";
  const int n = r.n_states();
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= j; ++i) {
      const Complex z = r.coherence(i, j);
      // Adding 0.0 prints a negative zero as 0.00000E+00.
      std::snprintf(buf, sizeof buf, "%4d%4d%14.5E%14.5E\n", num.to_external(i),
                    num.to_external(j), z.real() + 0.0, i == j ? 0.0 : z.imag() + 0.0);
      os << buf;
    }
}

// ---------------------------------------------------------------------------
// Time dependence.
// ---------------------------------------------------------------------------

inline EnvelopeSet envelopes_from_config(const RunConfig& cfg) {
  const auto& p = cfg.control;
  if (p.itdfieldsaorb == 2) {
    if (p.filename_tdamps_in.empty()) throw ValidationError("missing filename_tdamps_in");
    return load_envelopes(p.filename_tdamps_in);
  }
  if (p.itdfieldsaorb != 1) throw ValidationError("itdfieldsAorB must be 1 or 2");
  if (p.n_time_steps < 1) throw ValidationError("missing n_time_steps");
  if (!p.tmax) throw ValidationError("missing tmax");
  EnvelopeSet env;
  env.times = obe::detail::uniform_mesh(p.tmin, *p.tmax, p.n_time_steps);
  for (int a = 1; a <= cfg.keys.n_fields; ++a) {
    const auto it = p.envelope.find(a);
    if (it == p.envelope.end())
      throw ValidationError("missing envelope(" + std::to_string(a) + ")");
    const auto shape = parse_envelope_shape(it->second);
    if (!detail::has_amplitude(p, a))
      throw ValidationError("field " + std::to_string(a) + ": missing ampl or intensity");
    const double centre = detail::lookup(p.pulse_centre, a, 0.0);
    const double width = detail::lookup(p.pulse_width, a, 0.0);
    env.fields.push_back(make_envelope(shape, detail::field_amplitude(p, a), centre, width, env.times));
  }
  env.validate();
  return env;
}

inline void write_trajectory_header(std::ostream& os, int n, const StateNumbering& num) {
  os << "# t_us";
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= j; ++i) {
      const int ei = num.to_external(i), ej = num.to_external(j);
      if (i == j)
        os << " rho(" << ei << "," << ej << ")";
      else
        os << " Re_rho(" << ei << "," << ej << ") Im_rho(" << ei << "," << ej << ")";
    }
  os << '\n';
}

inline void write_trajectory_row(std::ostream& os, double t, const DensityVector& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", t);
  os << buf;
  const int n = r.n_states();
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= j; ++i) {
      const Complex z = r.coherence(i, j);
      std::snprintf(buf, sizeof buf, " %.10e", z.real());
      os << buf;
      if (i != j) {
        std::snprintf(buf, sizeof buf, " %.10e", z.imag());
        os << buf;
      }
    }
  os << '\n';
}

inline Trajectory solve_time_dependent(const RunConfig& cfg, const Model& m) {
  const auto& p = cfg.control;
  const auto opt = integrator_options(p);
  if (p.non_cw) {
    if (p.weak_probe) throw ValidationError("weak-probe approximation needs CW fields");
    const auto env = envelopes_from_config(cfg);
    std::optional<MbeDoppler> dop;
    if (p.doppler) dop = MbeDoppler{velocity_grid(p), rms_speed(p)};
    return td_obe_only(m.system, m.fields, env, m.initial, opt, dop);
  }
  if (p.n_time_steps < 1) throw ValidationError("missing n_time_steps");
  if (!p.tmax) throw ValidationError("missing tmax");
  const auto times = obe::detail::uniform_mesh(p.tmin, *p.tmax, p.n_time_steps);
  if (!p.doppler) {
    const Matrix l = p.weak_probe ? weak_probe_reduce(m.system, m.fields, m.initial).reduced.matrix
                                  : build(m.system, m.fields).matrix;
    return integrate(constant_provider(l), m.initial.values(), times, opt);
  }
  auto split = split_velocity(m.system, m.fields);
  if (p.weak_probe) split = weak_probe_reduce(m.system, m.fields, m.initial, split);
  const auto mode = p.imemory == 1 ? MemoryMode::precompute_all : MemoryMode::streaming;
  if (p.imemory != 1 && p.imemory != 2) throw ValidationError("imemory must be 1 or 2");
  return average_td(split, m.initial.values(), velocity_grid(p), rms_speed(p), times, opt, mode);
}

// ---------------------------------------------------------------------------
// Propagation.
// ---------------------------------------------------------------------------

inline EnvelopeSet solve_propagation(const RunConfig& cfg, const Model& m, std::ostream* amplitudes) {
  const auto& p = cfg.control;
  if (p.weak_probe) throw ValidationError("propagation does not use the weak-probe approximation");
  if (!(p.zmax > 0.0)) throw ValidationError("missing zmax");
  if (p.n_z_steps < 1) throw ValidationError("missing n_z_steps");
  const auto env = envelopes_from_config(cfg);
  MbeOptions opt;
  opt.time = integrator_options(p);
  if (p.izrule == 1)
    opt.z_method = ZMethod::rk4_space;
  else if (p.izrule == 3)
    opt.z_method = ZMethod::ab3am4_pc;
  else
    throw ValidationError("izrule must be 1 or 3");
  opt.nz_writeout = p.nz_writeout;
  opt.nt_writeout = p.nt_writeout;
  std::optional<MbeDoppler> dop;
  if (p.doppler) dop = MbeDoppler{velocity_grid(p), rms_speed(p)};
  AmplitudeWriter writer;
  if (amplitudes) writer = amplitude_stream_writer(*amplitudes);
  return propagate(m.system, m.fields, PropagationGrid{p.zmax, p.n_z_steps}, env, m.initial,
                   p.density, opt, dop, writer);
}

/// Runs one configuration, writing results to the configured files (or to
/// `out` when no file name is given).
inline void run(const RunConfig& cfg, std::ostream& out = std::cout) {
  const auto& p = cfg.control;
  const auto model = build_model(cfg);
  auto with_output = [&](auto&& body) {
    if (p.filename_out.empty()) return body(out);
    std::ofstream os(p.filename_out);
    if (!os) throw Error("cannot open output file '" + p.filename_out + "'");
    body(os);
  };
  switch (*p.calc) {
    case CalcMode::steady_state: {
      const auto r = solve_steady(cfg, model);
      with_output([&](std::ostream& os) { write_steady(os, r, model.numbering); });
      break;
    }
    case CalcMode::time_dependent: {
      const auto tr = solve_time_dependent(cfg, model);
      if (p.nt_writeout < 1) throw ValidationError("nt_writeout must be positive");
      with_output([&](std::ostream& os) {
        write_trajectory_header(os, model.system.n_states, model.numbering);
        for (std::size_t k = 0; k < tr.size(); k += static_cast<std::size_t>(p.nt_writeout))
          write_trajectory_row(os, tr.times[k], tr.density(k, model.system.n_states));
      });
      break;
    }
    case CalcMode::mbe_propagation: {
      auto os = open_amplitude_file(p.filename_tdamps_out, p.iappend != 0);
      solve_propagation(cfg, model, &os);
      break;
    }
  }
}

/// Exit status for an exception thrown by parse_config or run.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return 2;
  if (dynamic_cast<const ValidationError*>(&e)) return 3;
  if (dynamic_cast<const SolverError*>(&e)) return 4;
  return 1;
}

}  // namespace obe::driver
