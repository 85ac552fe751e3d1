// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kailin/corpus.hpp"
#include "kailin/error.hpp"
#include "kailin/transport.hpp"

namespace kailin::llm {

struct GatewayConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string api_key_env = "KAILIN_API_KEY";
  int max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds retry_base_delay{1000};  // doubles per attempt
  std::chrono::milliseconds timeout{60'000};
  double temperature = 0.0;
  int max_tokens = 256;
  std::optional<std::uint64_t> seed = 42;  // sent as "seed" when set
  bool verbose = false;
};

/// Delay before retry number `retry` (0-based): base * 2^retry.
std::chrono::milliseconds backoff_delay(const GatewayConfig& cfg, int retry);

// ---------------------------------------------------------------------------
// Templates

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Prompt text with {title}, {abstract}, {context} and {question}
/// placeholders. Other brace sequences are literal text.
struct PromptTemplate {
  std::string id;
  std::string text;

  bool references(std::string_view placeholder) const;
  /// Throws Error(kTemplateRenderError) when a referenced placeholder has no
  /// binding.
  std::string render(const Bindings& bindings) const;

  static PromptTemplate load(const std::filesystem::path& path);  // id = file stem
};

PromptTemplate default_question_template();
PromptTemplate default_distill_template();

// ---------------------------------------------------------------------------
// Gateway

struct QuestionCandidate {
  std::string source_pmid;
  std::string generator_id;
  std::string text;
  std::string template_id;
  friend bool operator==(const QuestionCandidate&, const QuestionCandidate&) = default;
};

struct ChatRequest {
  std::string model;
  std::string prompt;
  std::optional<std::uint64_t> seed;  // overrides GatewayConfig::seed
};

struct ChatResult {
  std::optional<std::string> text;
  std::optional<Error> error;
  bool ok() const { return text.has_value(); }
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Chat-completions client. Shareable across threads; at most
/// max_in_flight requests are on the wire at any time. Retries 429, 5xx and
/// transport failures with geometric backoff; other statuses fail at once.
class Gateway {
 public:
  Gateway(GatewayConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  /// Request body for a single-turn chat; a pure function of its inputs.
  std::string request_body(const ChatRequest& request) const;

  /// Raw first-choice content. Throws kTransportError or kEmptyCompletion.
  std::string complete(const ChatRequest& request);

  QuestionCandidate generate_question(const Document& doc, const PromptTemplate& tmpl,
                                      const std::string& model, std::uint32_t candidate_index = 0);

  std::string answer_item(const std::string& prompt, const std::string& model);

  /// Results in request order; per-item failures are captured in place.
  std::vector<ChatResult> batch(const std::vector<ChatRequest>& requests);

  const GatewayConfig& config() const { return cfg_; }

 private:
  void acquire();
  void release();

  GatewayConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  int in_flight_ = 0;
};

/// Renders the question-generation prompt for a document.
std::string render_question_prompt(const Document& doc, const PromptTemplate& tmpl);

// ---------------------------------------------------------------------------
// Offline transport

/// Deterministic chat-completions responder for offline runs. The reply is
/// derived from a digest of (model, prompt, seed): prompts that ask for a
/// yes/no/maybe answer get one of those words, anything else gets a question
/// assembled from words of the prompt's abstract. Tracks peak concurrency.
class MockChatTransport final : public Transport {
 public:
  using Responder = std::function<std::string(const std::string& model, const std::string& prompt,
                                              std::optional<std::uint64_t> seed)>;

  MockChatTransport() = default;
  explicit MockChatTransport(Responder responder) : responder_(std::move(responder)) {}

  HttpResponse post(const HttpRequest& request) override;

  /// Simulated service time per request.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }
  std::size_t calls() const { return calls_.load(); }
  int peak_in_flight() const { return peak_.load(); }

  static std::string digest_reply(const std::string& model, const std::string& prompt,
                                  std::optional<std::uint64_t> seed);

 private:
  Responder responder_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
};

}  // namespace kailin::llm
