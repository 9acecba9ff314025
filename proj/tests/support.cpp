#include "support.hpp"

#include <httplib.h>

#include <fstream>
#include <random>
#include <sstream>

#include "sbell/classifier.hpp"
#include "sbell/stimuli.hpp"

namespace testing {

struct MockChatServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  mutable std::mutex mutex;
  std::vector<std::string> auth;
};

MockChatServer::MockChatServer(Script script) : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/v1/chat/completions", [this, script](const httplib::Request& req, httplib::Response& res) {
    const std::size_t index = calls_.fetch_add(1);
    {
      std::lock_guard lock(impl_->mutex);
      impl_->auth.push_back(req.get_header_value("Authorization"));
    }
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      return;
    }
    const MockReply reply = script(body, index);
    res.status = reply.status;
    if (reply.status == 200) {
      nlohmann::json out = {{"model", body.value("model", "")},
                            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", reply.content}}}}}}};
      res.set_content(out.dump(), "application/json");
    } else {
      res.set_content(reply.content, "text/plain");
    }
  });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockChatServer::~MockChatServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockChatServer::base_url() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1"; }

std::vector<std::string> MockChatServer::authorization_headers() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->auth;
}

namespace {

const sbell::AmbiguousWord* find_word(const std::string& surface) {
  static const auto lexicon = sbell::parse_lexicon(sbell::bundled::lexicon());
  for (const auto& w : lexicon)
    if (w.surface == surface) return &w;
  return nullptr;
}

std::string message(const nlohmann::json& request, const std::string& role) {
  for (const auto& m : request["messages"])
    if (m.value("role", "") == role) return m.value("content", "");
  return {};
}

}  // namespace

MockReply scripted_reply(const nlohmann::json& request) {
  const std::string user = message(request, "user");
  if (user.find("OUT_OF_SCOPE") != std::string::npos) {
    // Classifier prompt: recover word and interpretation from the default instruction.
    auto quoted = [&](std::size_t from) {
      const auto a = user.find('"', from);
      const auto b = user.find('"', a + 1);
      return std::pair{user.substr(a + 1, b - a - 1), b + 1};
    };
    auto [word, p1] = quoted(0);
    auto [alpha, p2] = quoted(p1);
    auto [beta, p3] = quoted(p2);
    auto [interp, p4] = quoted(p3);
    (void)p4;
    const auto c = sbell::KeywordClassifier::bundled().classify(interp, {word, alpha, beta});
    static const char* tokens[] = {"ALPHA", "BETA", "UNCLEAR", "OUT_OF_SCOPE"};
    return {200, tokens[static_cast<int>(c.verdict)]};
  }
  // Agent prompt: the last two lines name the words as "<word>: <meaning>".
  std::vector<std::string> lines;
  std::istringstream in(user);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  if (lines.size() < 2) return {200, "no idea"};
  const std::string system = message(request, "system");
  std::string reply;
  for (std::size_t i = lines.size() - 2; i < lines.size(); ++i) {
    const std::string surface = lines[i].substr(0, lines[i].find(':'));
    const sbell::AmbiguousWord* w = find_word(surface);
    if (!w) return {200, "no idea"};
    const bool alpha = std::hash<std::string>{}(system + surface) % 2 == 0;
    reply += surface + ": " + (alpha ? w->meaning_alpha : w->meaning_beta) + "\n";
  }
  return {200, reply};
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() / ("sbell_" + tag + "_" + std::to_string(rd()));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace testing
