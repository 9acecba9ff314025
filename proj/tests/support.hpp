#pragma once
// Test fixtures: a scripted chat-completion server on localhost and small
// helpers for temporary directories and records.

#include <atomic>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sbell/runner.hpp"

namespace testing {

struct MockReply {
  int status = 200;
  std::string content;
};

/// Serves POST /v1/chat/completions; every request is answered by `script`.
class MockChatServer {
 public:
  using Script = std::function<MockReply(const nlohmann::json& request, std::size_t call_index)>;

  explicit MockChatServer(Script script);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  std::string base_url() const;
  std::size_t calls() const { return calls_.load(); }
  std::vector<std::string> authorization_headers() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<std::size_t> calls_{0};
};

/// Answers agent prompts with lexicon glosses (alpha or beta, chosen from a
/// hash of the persona/setting text) and classifier prompts with the keyword
/// verdict. Deterministic for a given request.
MockReply scripted_reply(const nlohmann::json& request);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& path);

}  // namespace testing
