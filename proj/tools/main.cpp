// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "triage/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("triage"));
  return triage::run_cli({argv + 1, argv + argc}, std::cin, std::cout, std::cerr);
}
