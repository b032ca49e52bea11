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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "obe/config.hpp"
#include "obe/driver.hpp"
#include "test_util.hpp"

namespace {

using namespace obe;
using config::KeyParams;
using config::RunConfig;

const std::string demo_dir = OBE_DEMO_DIR;

RunConfig load(const std::string& dir, const std::string& key_file) {
  std::ifstream kin(dir + "/" + key_file);
  RunConfig cfg;
  cfg.keys = config::parse_keyparams(kin, key_file);
  std::ifstream cin(dir + "/" + cfg.keys.control_file);
  cfg.control = config::parse_controlparams(cin, cfg.keys, cfg.keys.control_file);
  return cfg;
}

KeyParams three_state_keys() {
  KeyParams k;
  k.n_states = 3;
  k.n_fields = 2;
  k.control_file = "c.dat";
  return k;
}

std::string parse_error(const std::string& control, const KeyParams& keys = three_state_keys()) {
  std::istringstream in(control);
  try {
    config::parse_controlparams(in, keys, "c.dat");
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

std::string run_to_string(const RunConfig& cfg) {
  std::ostringstream os;
  driver::run(cfg, os);
  return os.str();
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("obe_test_" + name);
}

TEST(Config, LadderFiles) {
  const auto cfg = load(demo_dir + "/ladder_steady", "keyparams.dat");
  EXPECT_EQ(cfg.keys.n_states, 3);
  EXPECT_EQ(cfg.keys.n_min, 1);
  EXPECT_EQ(cfg.keys.n_fields, 2);
  EXPECT_FALSE(cfg.keys.complex_fields);
  const auto& p = cfg.control;
  EXPECT_EQ(p.calc, config::CalcMode::steady_state);
  EXPECT_EQ(p.rabi_given, 1);
  EXPECT_EQ(p.rabi.at({2, 1, 1}), Complex(5.0));
  EXPECT_EQ(p.rabi.at({3, 2, 2}), Complex(10.0));
  EXPECT_EQ(p.decay.at({1, 2}), 5.0);
  EXPECT_EQ(p.decay.at({2, 3}), 1.0);
  EXPECT_EQ(p.detuning_factor.size(), 3u);
  EXPECT_EQ(p.detuning.at(1), 5.0);
  EXPECT_EQ(p.detuning.at(2), 0.0);
}

TEST(Config, Assignments) {
  std::istringstream in(
      "&controlparams ! header\n"
      "  x = 1.5d-3\n"
      "  name = 'a!b'   ! comment\n"
      "  z(2,1) = (1.0, -2.0d0)\n"
      "/\n");
  const auto a = config::parse_assignments(in, "t");
  ASSERT_EQ(a.size(), 3u);
  EXPECT_DOUBLE_EQ(a[0].value.number.real(), 1.5e-3);
  EXPECT_EQ(a[1].value.text, "a!b");
  EXPECT_EQ(a[2].indices, (std::vector<int>{2, 1}));
  EXPECT_EQ(a[2].value.number, Complex(1.0, -2.0));
  EXPECT_EQ(a[2].line, 4);
}

TEST(Config, RoundTrip) {
  for (const auto& [dir, file] :
       {std::pair{"ladder_steady", "keyparams.dat"}, {"ladder_steady", "keyparams_nmin0.dat"},
        {"quasi_simulton", "keyparams.dat"}, {"quasi_simulton", "keyparams_file.dat"}}) {
    const auto cfg = load(demo_dir + "/" + dir, file);
    std::istringstream kin(config::serialize_keyparams(cfg.keys));
    std::istringstream cin(config::serialize_controlparams(cfg.control, cfg.keys));
    RunConfig back;
    back.keys = config::parse_keyparams(kin);
    back.control = config::parse_controlparams(cin, back.keys);
    EXPECT_EQ(back, cfg) << dir << "/" << file;
  }
  // Complex values and the Doppler keys.
  auto k = three_state_keys();
  k.complex_fields = true;
  std::istringstream in(
      "icalc = 1\n inoncw = 0\n iDoppler = 1\n urms = 231.5\n vgrid = 'gauss_hermite'\n"
      "n_vclasses = 41\n Rabif(2,1,1) = (1.25, -0.5)\n gamma_deph_f(1,3) = 0.1\n"
      "popinit(2) = 0.3\n popinit(1) = 0.7\n istart = 2\n tmax = 1.0\n n_time_steps = 10\n"
      "wavelength(1) = 780.241\n wavelength(2) = 776.0\n idir(2) = -1\n rtol = 1d-10\n");
  RunConfig cfg{k, config::parse_controlparams(in, k)};
  std::istringstream cin(config::serialize_controlparams(cfg.control, cfg.keys));
  EXPECT_EQ(config::parse_controlparams(cin, k), cfg.control);
}

TEST(Config, MissingAndBadKeys) {
  EXPECT_NE(parse_error("").find("missing mandatory key 'icalc'"), std::string::npos);
  const auto range = parse_error("icalc = 2\nRabif(5,1,1) = 1.0\n");
  EXPECT_NE(range.find("c.dat:2"), std::string::npos) << range;
  EXPECT_NE(range.find("state label 5"), std::string::npos) << range;
  const auto unknown = parse_error("icalc = 2\n\n  bogus = 3\n");
  EXPECT_NE(unknown.find("c.dat:3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("bogus"), std::string::npos) << unknown;
  EXPECT_NE(parse_error("icalc = 2\nRabif(2,1) = 1.0\n").find("index"), std::string::npos);
  EXPECT_NE(parse_error("icalc = 2\ndensity 3\n").find("c.dat:2"), std::string::npos);
  EXPECT_NE(parse_error("icalc = 2\nRabif(2,1,1) = (1.0, 2.0)\n").find("icmplxfld"),
            std::string::npos);
  std::istringstream keys("nstates = 3\nnfields = 1\n");
  EXPECT_THROW(config::parse_keyparams(keys), ParseError);
}

TEST(Driver, LadderSteadyTable) {
  const auto out = run_to_string(load(demo_dir + "/ladder_steady", "keyparams.dat"));
  const std::string expected =
      "   i   j   Re rho(i,j)   Im rho(i,j)\n\n"
      "   1   1   5.85372E-01   0.00000E+00\n"
      "   1   2  -3.36553E-02  -1.98712E-01\n"
      "   2   2   1.98712E-01   0.00000E+00\n"
      "   1   3  -6.03183E-02   1.81884E-01\n"
      "   2   3  -1.51570E-01  -2.15916E-02\n"
      "   3   3   2.15916E-01   0.00000E+00\n";
  EXPECT_EQ(out, expected);
}

// Numbers only, labels dropped.
std::vector<std::string> value_columns(const std::string& table) {
  std::istringstream in(table);
  std::string line;
  std::vector<std::string> v;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string i, j, re, im;
    row >> i >> j >> re >> im;
    v.push_back(re + " " + im);
  }
  return v;
}

TEST(Driver, RelabelingAndDeterminism) {
  const auto one = load(demo_dir + "/ladder_steady", "keyparams.dat");
  const auto zero = load(demo_dir + "/ladder_steady", "keyparams_nmin0.dat");
  const auto a = run_to_string(one);
  EXPECT_EQ(a, run_to_string(one));
  EXPECT_EQ(value_columns(a), value_columns(run_to_string(zero)));
  EXPECT_NE(run_to_string(zero).find("   0   0 "), std::string::npos);
}

TEST(Driver, ZeroFieldTwoLevel) {
  KeyParams k;
  k.n_states = 2;
  k.n_fields = 1;
  k.control_file = "c.dat";
  std::istringstream in("icalc = 2\nGamma_decay_f(1,2) = 6.0\ndetuning_fact(2,1) = -1\n");
  const RunConfig cfg{k, config::parse_controlparams(in, k)};
  EXPECT_EQ(run_to_string(cfg),
            "   i   j   Re rho(i,j)   Im rho(i,j)\n\n"
            "   1   1   1.00000E+00   0.00000E+00\n"
            "   1   2   0.00000E+00   0.00000E+00\n"
            "   2   2   0.00000E+00   0.00000E+00\n");
}

TEST(Driver, SteadyVariantsAgree) {
  auto cfg = load(demo_dir + "/ladder_steady", "keyparams.dat");
  const auto linear = run_to_string(cfg);
  cfg.control.isteady = 2;
  EXPECT_EQ(run_to_string(cfg), linear);
}

TEST(Driver, TimeDependentRows) {
  auto cfg = load(demo_dir + "/ladder_steady", "keyparams.dat");
  cfg.control.calc = config::CalcMode::time_dependent;
  cfg.control.tmax = 1.0;
  cfg.control.n_time_steps = 40;
  cfg.control.nt_writeout = 4;
  const auto out = run_to_string(cfg);
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 1 + 11);
  EXPECT_EQ(out.rfind("# t_us rho(1,1) Re_rho(1,2) Im_rho(1,2)", 0), 0u);
}

TEST(Driver, PropagationRowCount) {
  auto cfg = load(demo_dir + "/quasi_simulton", "keyparams.dat");
  cfg.control.n_time_steps = 300;
  cfg.control.nt_writeout = 3;
  cfg.control.n_z_steps = 40;
  cfg.control.nz_writeout = 8;
  const auto path = scratch("amplitudes.dat");
  cfg.control.filename_tdamps_out = path.string();
  driver::run(cfg);
  std::ifstream in(path);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) {
    std::istringstream row(line);
    double x;
    int cols = 0;
    while (row >> x) ++cols;
    EXPECT_EQ(cols, 6);
    ++rows;
  }
  EXPECT_EQ(rows, (40u / 8 + 1) * (300u / 3 + 1));
  // Appending doubles the file.
  cfg.control.iappend = 1;
  driver::run(cfg);
  std::ifstream again(path);
  EXPECT_EQ(std::count(std::istreambuf_iterator<char>(again), {}, '\n'), long(2 * rows));
  std::filesystem::remove(path);
}

TEST(Driver, ExitCodes) {
  EXPECT_EQ(driver::exit_code(ParseError("x")), 2);
  EXPECT_EQ(driver::exit_code(ValidationError("x")), 3);
  EXPECT_EQ(driver::exit_code(SolverError("x")), 4);
  EXPECT_EQ(driver::exit_code(Error("x")), 1);
  EXPECT_EQ(driver::exit_code(std::runtime_error("x")), 1);
}

int run_drive(const std::string& keyfile) {
  const std::string cmd = "\"" OBE_DRIVE_PATH "\" -C \"" OBE_TEST_DATA_DIR "\" -k \"" +
                          keyfile + "\" >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Driver, ProgramExitStatus) {
  EXPECT_EQ(run_drive("no_such_file.dat"), 1);
  EXPECT_EQ(run_drive("unknown_key_k.dat"), 2);
  EXPECT_EQ(run_drive("one_state_k.dat"), 3);
  EXPECT_EQ(run_drive("undamped_k.dat"), 4);
}

}  // namespace
