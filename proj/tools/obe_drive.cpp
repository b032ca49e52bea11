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


// Command-line driver: reads a keyparams file (from a path or standard
// input), the control file it names, and runs the requested calculation.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "obe/config.hpp"
#include "obe/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optical Bloch and Maxwell-Bloch equations driver"};
  std::string keyparams;
  std::string workdir;
  bool print_config = false;
  app.add_option("-k,--keyparams", keyparams, "keyparams file (default: standard input)");
  app.add_option("-C,--directory", workdir, "change to this directory before reading inputs");
  app.add_flag("--print-config", print_config, "echo the parsed configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (!workdir.empty()) std::filesystem::current_path(workdir);
    const auto cfg = keyparams.empty() ? obe::config::parse_config(std::cin, "<stdin>")
                                       : obe::config::parse_config(keyparams);
    if (print_config) {
      std::cout << obe::config::serialize_keyparams(cfg.keys) << '\n'
                << obe::config::serialize_controlparams(cfg.control, cfg.keys);
      return 0;
    }
    obe::driver::run(cfg, std::cout);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "obe_drive: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "obe_drive: " << e.what() << '\n';
    return obe::driver::exit_code(e);
  }
  return 0;
}
