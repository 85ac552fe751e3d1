// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "kailin/error.hpp"
#include "kailin/transport.hpp"

namespace kailin {
namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::kConfigError, "base_url needs a scheme: '" + base_url + "'");
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  HttpResponse post(const HttpRequest& request) override {
    // httplib::Client is not shareable across threads; one per call.
    httplib::Client client(origin_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(prefix_ + request.path, headers, request.body, "application/json");
    HttpResponse response;
    if (!result) {
      response.error = httplib::to_string(result.error());
      return response;
    }
    response.status = result->status;
    response.body = result->body;
    return response;
  }

 private:
  std::string origin_;
  std::string prefix_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_url) {
  return std::make_unique<HttpTransport>(base_url);
}

}  // namespace kailin
