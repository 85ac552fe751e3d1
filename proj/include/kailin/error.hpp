// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kailin {

enum class ErrorCode {
  // mesh-ontology
  kMalformedRecord,
  kDuplicateUi,
  kUnknownFormat,
  kInvalidTreeNumber,
  kUnknownUi,
  // hierarchy-scoring
  kEmptyCollection,
  kDocumentNotIndexed,
  // corpus-retrieval
  kDuplicatePmid,
  kEmptyStore,
  kEmptyQuery,
  kIndexMissing,
  kIndexMismatch,
  kEmbeddingServiceError,
  kDimensionMismatch,
  // llm-gateway
  kTransportError,
  kEmptyCompletion,
  kTemplateRenderError,
  // eval-harness
  kMalformedBenchmark,
  kOverlappingYearRanges,
  // plumbing
  kIoError,
  kConfigError,
  kCancelled,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Which process exit code an error maps to in the CLI: data errors exit 2,
/// external-service errors exit 3.
bool is_external_service_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int status = 0)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        status_(status) {}

  ErrorCode code() const noexcept { return code_; }
  // Last HTTP status for transport/service errors (0 when none was received).
  int status() const noexcept { return status_; }

 private:
  ErrorCode code_;
  int status_;
};

}  // namespace kailin
