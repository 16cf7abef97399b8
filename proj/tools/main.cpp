// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli.hpp"

int main(int argc, char** argv) {
  // Keep stdout for results; progress goes to stderr.
  spdlog::set_default_logger(spdlog::stderr_color_mt("pclft"));
  return pclft::run_cli(argc, argv, std::cout, std::cerr);
}
