#pragma once

// Minimal chat-completion client shared by remote agents and the remote
// classifier. Wire shape: POST {base_url}/chat/completions with
//   {"model": ..., "messages": [{"role": "system"|"user", "content": ...}]}
// answered by {"model": ..., "choices": [{"message": {"content": ...}}]}.

#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sbell/random.hpp"

namespace sbell {

struct ProviderEndpoint {
  std::string name;
  std::string base_url;
  /// Environment variable holding the bearer token; empty for unauthenticated endpoints.
  std::string api_key_env;
  std::chrono::milliseconds timeout{60000};
};

/// A provider with its credential already read from the environment.
struct ResolvedProvider {
  ProviderEndpoint endpoint;
  std::string api_key;
};

/// Reads every provider's credential; throws ConfigError naming the first missing variable.
std::vector<ResolvedProvider> resolve_credentials(const std::vector<ProviderEndpoint>& providers);

struct ModelEntry {
  std::string provider;
  std::string model;

  std::string id() const { return provider + "/" + model; }
  friend bool operator==(const ModelEntry&, const ModelEntry&) = default;
};

class ModelPool {
 public:
  /// Throws std::invalid_argument when empty or when an id repeats.
  explicit ModelPool(std::vector<ModelEntry> entries);
  const std::vector<ModelEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<ModelEntry> entries_;
};

/// Uniform draw from the pool.
const ModelEntry& select_model(const ModelPool& pool, Rng& rng);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
};

struct ChatExchange {
  std::string request_body;
  std::string response_body;
  std::string content;
  std::string model_id;
  std::chrono::microseconds latency{0};
  int transport_attempts = 1;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Throws TransportError after exhausting retries, MalformedReply on an unparseable body.
  virtual ChatExchange complete(const ResolvedProvider& provider, const ChatRequest& request) const = 0;
};

/// HTTP(S) transport with exponential backoff. Connection errors, 429 and
/// 5xx are retried; other statuses fail immediately.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(RetryPolicy policy = {}) : policy_(policy) {}
  ChatExchange complete(const ResolvedProvider& provider, const ChatRequest& request) const override;

  const RetryPolicy& policy() const noexcept { return policy_; }

 private:
  RetryPolicy policy_;
};

std::string encode_chat_request(const ChatRequest& request);
/// Extracts (content, model) from a reply body; throws MalformedReply.
std::pair<std::string, std::string> decode_chat_reply(const std::string& body);

}  // namespace sbell
