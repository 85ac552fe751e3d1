// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/error.hpp"

namespace kailin {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kDuplicateUi: return "DuplicateUi";
    case ErrorCode::kUnknownFormat: return "UnknownFormat";
    case ErrorCode::kInvalidTreeNumber: return "InvalidTreeNumber";
    case ErrorCode::kUnknownUi: return "UnknownUi";
    case ErrorCode::kEmptyCollection: return "EmptyCollection";
    case ErrorCode::kDocumentNotIndexed: return "DocumentNotIndexed";
    case ErrorCode::kDuplicatePmid: return "DuplicatePmid";
    case ErrorCode::kEmptyStore: return "EmptyStore";
    case ErrorCode::kEmptyQuery: return "EmptyQuery";
    case ErrorCode::kIndexMissing: return "IndexMissing";
    case ErrorCode::kIndexMismatch: return "IndexMismatch";
    case ErrorCode::kEmbeddingServiceError: return "EmbeddingServiceError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kEmptyCompletion: return "EmptyCompletion";
    case ErrorCode::kTemplateRenderError: return "TemplateRenderError";
    case ErrorCode::kMalformedBenchmark: return "MalformedBenchmark";
    case ErrorCode::kOverlappingYearRanges: return "OverlappingYearRanges";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kCancelled: return "Cancelled";
  }
  return "Unknown";
}

bool is_external_service_error(ErrorCode code) noexcept {
  return code == ErrorCode::kTransportError ||
         code == ErrorCode::kEmbeddingServiceError ||
         code == ErrorCode::kCancelled;
}

}  // namespace kailin
