// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace kailin {

struct HttpRequest {
  std::string path;  // appended to the transport's base URL path
  std::string body;  // JSON
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{60'000};
};

struct HttpResponse {
  int status = 0;     // 0 when no response was received
  std::string body;
  std::string error;  // transport-level failure description

  bool received() const { return status != 0; }
};

/// POST-only JSON transport. Implementations must be safe to call from
/// several threads at once.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// Real HTTP(S) transport. `base_url` is "scheme://host[:port][/prefix]".
std::unique_ptr<Transport> make_http_transport(const std::string& base_url);

}  // namespace kailin
