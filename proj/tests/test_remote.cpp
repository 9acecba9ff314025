#include <doctest.h>

#include <cstdlib>
#include <map>

#include "sbell/agents.hpp"
#include "sbell/error.hpp"
#include "sbell/remote.hpp"
#include "support.hpp"

using namespace sbell;
using testing::MockChatServer;
using testing::MockReply;

namespace {

ResolvedProvider provider(const MockChatServer& server, std::string key = "tok-123") {
  ProviderEndpoint ep{"mock", server.base_url(), "", std::chrono::milliseconds(5000)};
  return {ep, std::move(key)};
}

constexpr RetryPolicy kFast{3, std::chrono::milliseconds(1), 2.0};

}  // namespace

TEST_CASE("wire encoding round trip") {
  const ChatRequest r{"gpt-x", {{"system", "sys"}, {"user", "hi \"there\""}}};
  const auto j = nlohmann::json::parse(encode_chat_request(r));
  CHECK(j["model"] == "gpt-x");
  CHECK(j["messages"][1]["content"] == "hi \"there\"");
  const auto [content, model] = decode_chat_reply(R"({"model":"m1","choices":[{"message":{"content":"ok"}}]})");
  CHECK(content == "ok");
  CHECK(model == "m1");
  CHECK_THROWS_AS(decode_chat_reply("not json"), MalformedReply);
  CHECK_THROWS_AS(decode_chat_reply(R"({"choices":[]})"), MalformedReply);
  CHECK_THROWS_AS(decode_chat_reply(R"({"choices":[{"message":{"content":7}}]})"), MalformedReply);
}

TEST_CASE("successful exchange sends the bearer token and records transcripts") {
  MockChatServer server([](const nlohmann::json& req, std::size_t) {
    return MockReply{200, "echo " + req["messages"][0]["content"].get<std::string>()};
  });
  const HttpChatTransport t(kFast);
  const ChatExchange ex = t.complete(provider(server), {"m", {{"user", "ping"}}});
  CHECK(ex.content == "echo ping");
  CHECK(ex.model_id == "m");
  CHECK(ex.transport_attempts == 1);
  CHECK(ex.request_body.find("ping") != std::string::npos);
  CHECK(ex.response_body.find("echo ping") != std::string::npos);
  REQUIRE(server.authorization_headers().size() == 1);
  CHECK(server.authorization_headers()[0] == "Bearer tok-123");
}

TEST_CASE("no Authorization header without a key") {
  MockChatServer server([](const nlohmann::json&, std::size_t) { return MockReply{200, "x"}; });
  HttpChatTransport(kFast).complete(provider(server, ""), {"m", {{"user", "u"}}});
  CHECK(server.authorization_headers()[0].empty());
}

TEST_CASE("server errors and rate limits are retried with backoff") {
  MockChatServer server([](const nlohmann::json&, std::size_t i) {
    return i == 0 ? MockReply{503, "busy"} : i == 1 ? MockReply{429, "slow down"} : MockReply{200, "fine"};
  });
  const ChatExchange ex = HttpChatTransport(kFast).complete(provider(server), {"m", {{"user", "u"}}});
  CHECK(ex.content == "fine");
  CHECK(ex.transport_attempts == 3);
  CHECK(server.calls() == 3);
}

TEST_CASE("retries are bounded") {
  MockChatServer server([](const nlohmann::json&, std::size_t) { return MockReply{500, "down"}; });
  CHECK_THROWS_AS(HttpChatTransport(kFast).complete(provider(server), {"m", {{"user", "u"}}}), TransportError);
  CHECK(server.calls() == 3);
}

TEST_CASE("client errors are not retried") {
  MockChatServer server([](const nlohmann::json&, std::size_t) { return MockReply{401, "bad key"}; });
  CHECK_THROWS_AS(HttpChatTransport(kFast).complete(provider(server), {"m", {{"user", "u"}}}), TransportError);
  CHECK(server.calls() == 1);
}

TEST_CASE("unreachable endpoint is a transport error") {
  ProviderEndpoint ep{"dead", "http://127.0.0.1:1/v1", "", std::chrono::milliseconds(200)};
  CHECK_THROWS_AS(HttpChatTransport({2, std::chrono::milliseconds(1), 2.0}).complete({ep, ""}, {"m", {}}), TransportError);
}

TEST_CASE("credentials come from the environment only") {
  ::setenv("SBELL_TEST_KEY_PRESENT", "secret", 1);
  ::unsetenv("SBELL_TEST_KEY_ABSENT");
  const auto ok = resolve_credentials({{"p", "http://x", "SBELL_TEST_KEY_PRESENT", {}}, {"open", "http://y", "", {}}});
  CHECK(ok[0].api_key == "secret");
  CHECK(ok[1].api_key.empty());
  try {
    resolve_credentials({{"p", "http://x", "SBELL_TEST_KEY_ABSENT", {}}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("SBELL_TEST_KEY_ABSENT") != std::string::npos);
  }
}

TEST_CASE("model pools") {
  CHECK_THROWS_AS(ModelPool(std::vector<ModelEntry>{}), std::invalid_argument);
  const std::vector<ModelEntry> dup{{"a", "m"}, {"a", "m"}};
  CHECK_THROWS_AS(ModelPool{dup}, std::invalid_argument);
  const ModelPool pool(std::vector<ModelEntry>{{"a", "m1"}, {"a", "m2"}, {"b", "m1"}});
  Rng rng(3);
  std::map<std::string, int> seen;
  for (int i = 0; i < 3000; ++i) ++seen[select_model(pool, rng).id()];
  CHECK(seen.size() == 3);
  for (const auto& [id, n] : seen) CHECK(std::abs(n - 1000) < 4 * 26);
}

TEST_CASE("remote agent talks to the endpoint and parses both interpretations") {
  MockChatServer server([](const nlohmann::json& req, std::size_t) { return testing::scripted_reply(req); });
  const std::vector<ModelEntry> entries{{"mock", "model-a"}};
  RemoteAgentOptions opts{ModelPool(entries), {provider(server)}, std::make_shared<HttpChatTransport>(kFast)};
  const auto source = remote_agent(std::move(opts));
  Rng rng(1);
  const TrialStimulus s = draw_stimulus(StimulusPools::bundled(), rng);
  const auto trial = source->begin_trial(s, 5);
  const AgentResponse r = trial->context(Context::abp).bob->interpret(make_request(s, kSettings[3]));
  CHECK(r.model_id == "model-a");
  CHECK(r.provider_id == "mock");
  CHECK((r.interpretation_word1 == s.word_pair[0].meaning_alpha || r.interpretation_word1 == s.word_pair[0].meaning_beta));
  CHECK(r.raw_request.find(s.rendered_sentence) != std::string::npos);
  CHECK_FALSE(r.raw_response.empty());
  CHECK(r.latency.count() > 0);
}

TEST_CASE("remote agent rejects pools naming unknown providers") {
  RemoteAgentOptions opts{ModelPool(std::vector<ModelEntry>{{"ghost", "m"}}), {}, std::make_shared<HttpChatTransport>(kFast)};
  CHECK_THROWS_AS(remote_agent(std::move(opts)), ConfigError);
}
