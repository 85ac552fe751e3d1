// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace kailin::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitService = 3,
};

/// Flat "section.key" -> value settings. Merge order, lowest to highest:
/// defaults, config file, environment, command-line flags.
using Settings = std::map<std::string, std::string>;

Settings default_settings();

/// Reads an INI file ([section] / key = value). Unknown keys are a
/// kConfigError so typos do not pass silently.
Settings read_config_file(const std::filesystem::path& path);

/// Environment overrides (KAILIN_BASE_URL -> gateway.base_url).
Settings environment_settings();

/// "section.key=value\n" lines in key order; the config digest is the
/// SHA-256 of this text.
std::string canonical_settings(const Settings& settings);

/// Entry point shared by the kailin binary and the tests. `argv[0]` is the
/// program name. `cancel` is polled between work units; when it flips, the
/// partial manifest is written and the run exits with kExitService.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel = nullptr);

}  // namespace kailin::cli
