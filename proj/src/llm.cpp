// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The Kailin Authors

#include "kailin/llm.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kailin/digest.hpp"

namespace kailin::llm {
namespace {

constexpr std::string_view kPlaceholders[] = {"title", "abstract", "context", "question"};

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

bool retryable(int status) { return status == 429 || status >= 500; }

std::string api_key(const GatewayConfig& cfg) {
  if (cfg.api_key_env.empty()) return {};
  const char* v = std::getenv(cfg.api_key_env.c_str());
  return v ? v : "";
}

}  // namespace

std::chrono::milliseconds backoff_delay(const GatewayConfig& cfg, int retry) {
  return cfg.retry_base_delay * (std::int64_t{1} << std::min(retry, 30));
}

// ---------------------------------------------------------------------------
// Templates

bool PromptTemplate::references(std::string_view placeholder) const {
  return text.find("{" + std::string(placeholder) + "}") != std::string::npos;
}

std::string PromptTemplate::render(const Bindings& bindings) const {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const std::size_t close = text.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string_view name(text.data() + i + 1, close - i - 1);
        if (std::find(std::begin(kPlaceholders), std::end(kPlaceholders), name) !=
            std::end(kPlaceholders)) {
          const auto it = bindings.find(name);
          if (it == bindings.end()) {
            throw Error(ErrorCode::kTemplateRenderError,
                        "template '" + id + "' references unbound {" + std::string(name) + "}");
          }
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return {path.stem().string(), buf.str()};
}

PromptTemplate default_question_template() {
  return {"question-v1",
          "You are preparing study questions from biomedical literature.\n"
          "\n"
          "Title: {title}\n"
          "Abstract: {abstract}\n"
          "\n"
          "Write one question that can be answered from this document. "
          "Reply with the question only.\n"};
}

PromptTemplate default_distill_template() {
  return {"distill-v1", "{context}\n\nQuestion: {question}\n"};
}

std::string render_question_prompt(const Document& doc, const PromptTemplate& tmpl) {
  return tmpl.render({{"title", doc.title}, {"abstract", doc.abstract}});
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (cfg_.max_in_flight < 1) throw Error(ErrorCode::kConfigError, "max_in_flight must be >= 1");
  if (cfg_.max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
  if (!transport_) throw Error(ErrorCode::kConfigError, "gateway needs a transport");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string Gateway::request_body(const ChatRequest& request) const {
  nlohmann::ordered_json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::ordered_json::array(
      {nlohmann::ordered_json{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = cfg_.temperature;
  body["max_tokens"] = cfg_.max_tokens;
  if (const auto seed = request.seed ? request.seed : cfg_.seed) body["seed"] = *seed;
  return body.dump();
}

void Gateway::acquire() {
  std::unique_lock lock(slot_mutex_);
  slot_cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
  ++in_flight_;
}

void Gateway::release() {
  {
    std::lock_guard lock(slot_mutex_);
    --in_flight_;
  }
  slot_cv_.notify_one();
}

std::string Gateway::complete(const ChatRequest& request) {
  HttpRequest http;
  http.path = "/chat/completions";
  http.body = request_body(request);
  http.timeout = cfg_.timeout;
  if (const std::string key = api_key(cfg_); !key.empty()) {
    http.headers.emplace_back("Authorization", "Bearer " + key);
  }

  HttpResponse last;
  for (int attempt = 0;; ++attempt) {
    if (cfg_.verbose) {
      std::clog << "[gateway] POST " << http.path << " (Authorization: "
                << (http.headers.empty() ? "none" : "Bearer ***") << ") " << http.body << '\n';
    }
    acquire();
    try {
      last = transport_->post(http);
    } catch (...) {
      release();
      throw;
    }
    release();
    if (cfg_.verbose) {
      std::clog << "[gateway] <- " << last.status << ' '
                << (last.received() ? last.body : last.error) << '\n';
    }

    if (last.received() && last.status >= 200 && last.status < 300) break;
    const bool can_retry = !last.received() || retryable(last.status);
    if (!can_retry || attempt >= cfg_.max_retries) {
      const std::string what = last.received() ? "HTTP " + std::to_string(last.status)
                                               : "transport failure: " + last.error;
      throw Error(ErrorCode::kTransportError,
                  what + " after " + std::to_string(attempt + 1) + " attempt(s)", last.status);
    }
    sleeper_(backoff_delay(cfg_, attempt));
  }

  std::string content;
  try {
    const auto j = nlohmann::json::parse(last.body);
    const auto& message = j.at("choices").at(0).at("message");
    if (message.contains("content") && message["content"].is_string()) {
      content = message["content"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kTransportError, std::string("malformed completion: ") + e.what(),
                last.status);
  }
  if (trim_copy(content).empty()) {
    throw Error(ErrorCode::kEmptyCompletion, "model '" + request.model + "' returned no text");
  }
  return content;
}

QuestionCandidate Gateway::generate_question(const Document& doc, const PromptTemplate& tmpl,
                                             const std::string& model,
                                             std::uint32_t candidate_index) {
  ChatRequest req{model, render_question_prompt(doc, tmpl), std::nullopt};
  if (candidate_index > 0) req.seed = cfg_.seed.value_or(0) + candidate_index;
  return {doc.pmid, model, trim_copy(complete(req)), tmpl.id};
}

std::string Gateway::answer_item(const std::string& prompt, const std::string& model) {
  return complete({model, prompt, std::nullopt});
}

std::vector<ChatResult> Gateway::batch(const std::vector<ChatRequest>& requests) {
  std::vector<ChatResult> results(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        results[i].text = complete(requests[i]);
      } catch (const Error& e) {
        results[i].error = e;
      } catch (const std::exception& e) {
        results[i].error = Error(ErrorCode::kTransportError, e.what());
      }
    }
  };
  const std::size_t n_workers =
      std::min(requests.size(), static_cast<std::size_t>(cfg_.max_in_flight));
  std::vector<std::jthread> workers;
  for (std::size_t i = 1; i < n_workers; ++i) workers.emplace_back(worker);
  if (n_workers > 0) worker();
  return results;
}

// ---------------------------------------------------------------------------
// MockChatTransport

std::string MockChatTransport::digest_reply(const std::string& model, const std::string& prompt,
                                            std::optional<std::uint64_t> seed) {
  const Sha256 d = sha256(model + '\0' + prompt + '\0' + (seed ? std::to_string(*seed) : "-"));

  std::string lowered = prompt;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lowered.find("yes, no, or maybe") != std::string::npos) {
    static constexpr const char* kAnswers[] = {"yes", "no", "maybe"};
    return kAnswers[d[0] % 3];
  }

  std::string_view source(prompt);
  if (const auto pos = source.find("Abstract:"); pos != std::string_view::npos) {
    source.remove_prefix(pos + 9);
    source = source.substr(0, source.find('\n'));
  }
  std::vector<std::string> words;
  for (auto& tok : tokenize(source)) {
    const bool alpha = std::all_of(tok.begin(), tok.end(),
                                   [](unsigned char c) { return std::isalpha(c) != 0; });
    if (tok.size() >= 5 && alpha && std::find(words.begin(), words.end(), tok) == words.end()) {
      words.push_back(std::move(tok));
    }
  }
  if (words.empty()) return "What does this document report?";
  std::vector<std::string> picked;
  for (std::size_t i = 0; i < 8 && picked.size() < 3; ++i) {
    const std::string& w = words[d[1 + i] % words.size()];
    if (std::find(picked.begin(), picked.end(), w) == picked.end()) picked.push_back(w);
  }
  std::string q = "How does " + picked[0] + " relate to ";
  if (picked.size() == 1) return q + "the reported findings?";
  q += picked[1];
  if (picked.size() == 3) q += " and " + picked[2];
  return q + "?";
}

HttpResponse MockChatTransport::post(const HttpRequest& request) {
  ++calls_;
  const int now = ++current_;
  int peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  HttpResponse response;
  try {
    const auto body = nlohmann::json::parse(request.body);
    const std::string model = body.at("model").get<std::string>();
    const std::string prompt = body.at("messages").back().at("content").get<std::string>();
    std::optional<std::uint64_t> seed;
    if (body.contains("seed")) seed = body["seed"].get<std::uint64_t>();
    const std::string content =
        responder_ ? responder_(model, prompt, seed) : digest_reply(model, prompt, seed);
    nlohmann::ordered_json reply;
    reply["id"] = "mock-" + sha256_hex(request.body).substr(0, 16);
    reply["object"] = "chat.completion";
    reply["model"] = model;
    reply["choices"] = nlohmann::ordered_json::array(
        {{{"index", 0},
          {"message", {{"role", "assistant"}, {"content", content}}},
          {"finish_reason", "stop"}}});
    response.status = 200;
    response.body = reply.dump();
  } catch (const nlohmann::json::exception&) {
    response.status = 400;
    response.body = R"({"error":"bad request"})";
  }
  --current_;
  return response;
}

}  // namespace kailin::llm
