// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "kailin/cli.hpp"

namespace {
std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }
}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  std::vector<std::string> args(argv, argv + argc);
  return kailin::cli::run(args, std::cout, std::cerr, &g_interrupted);
}
