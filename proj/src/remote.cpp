#include "sbell/remote.hpp"

#include <httplib.h>

#include <cstdlib>
#include <json.hpp>
#include <set>
#include <stdexcept>
#include <thread>

#include "sbell/error.hpp"

namespace sbell {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base_url must include a scheme: '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  SplitUrl out{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::vector<ResolvedProvider> resolve_credentials(const std::vector<ProviderEndpoint>& providers) {
  std::vector<ResolvedProvider> out;
  for (const ProviderEndpoint& p : providers) {
    ResolvedProvider r{p, {}};
    if (!p.api_key_env.empty()) {
      const char* value = std::getenv(p.api_key_env.c_str());
      if (value == nullptr || *value == '\0')
        throw ConfigError("provider '" + p.name + "': environment variable " + p.api_key_env + " is not set");
      r.api_key = value;
    }
    out.push_back(std::move(r));
  }
  return out;
}

ModelPool::ModelPool(std::vector<ModelEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("model pool is empty");
  std::set<std::string> ids;
  for (const ModelEntry& e : entries_)
    if (!ids.insert(e.id()).second) throw std::invalid_argument("duplicate model pool entry '" + e.id() + "'");
}

const ModelEntry& select_model(const ModelPool& pool, Rng& rng) {
  return pool.entries()[rng.below(pool.entries().size())];
}

std::string encode_chat_request(const ChatRequest& request) {
  nlohmann::json j;
  j["model"] = request.model;
  j["messages"] = nlohmann::json::array();
  for (const ChatMessage& m : request.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return j.dump();
}

std::pair<std::string, std::string> decode_chat_reply(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw MalformedReply("reply is not JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw MalformedReply("reply content is not a string");
    std::string model = j.contains("model") && j["model"].is_string() ? j["model"].get<std::string>() : "";
    return {content.get<std::string>(), model};
  } catch (const nlohmann::json::exception& e) {
    throw MalformedReply(std::string("reply lacks choices[0].message.content: ") + e.what());
  }
}

ChatExchange HttpChatTransport::complete(const ResolvedProvider& provider, const ChatRequest& request) const {
  const SplitUrl url = split_url(provider.endpoint.base_url);
  ChatExchange ex;
  ex.request_body = encode_chat_request(request);

  httplib::Headers headers;
  if (!provider.api_key.empty()) headers.emplace("Authorization", "Bearer " + provider.api_key);

  const auto timeout = provider.endpoint.timeout;
  auto delay = policy_.base_delay;
  std::string last_error;
  const int attempts = std::max(1, policy_.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * policy_.multiplier));
    }
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(url.path + "/chat/completions", headers, ex.request_body, "application/json");
    ex.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
    ex.transport_attempts = attempt;
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      ex.response_body = res->body;
      auto [content, model] = decode_chat_reply(res->body);
      ex.content = std::move(content);
      ex.model_id = model.empty() ? request.model : model;
      return ex;
    }
    last_error = "HTTP " + std::to_string(res->status);
    if (!retryable_status(res->status)) break;
  }
  throw TransportError("provider '" + provider.endpoint.name + "': " + last_error + " after " +
                       std::to_string(ex.transport_attempts) + " attempt(s)");
}

}  // namespace sbell
