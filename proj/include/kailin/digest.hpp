// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace kailin {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::string_view data);
std::string sha256_hex(std::string_view data);

// Hex digest of a file's bytes. Throws Error(kIoError) if unreadable.
std::string file_sha256_hex(const std::filesystem::path& path);

// 64-bit FNV-1a; used for cheap fingerprints and seed mixing.
constexpr std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

}  // namespace kailin
