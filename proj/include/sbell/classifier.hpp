#pragma once

// Maps a free-text interpretation onto one of an ambiguous word's two
// glosses, and drives re-interpretation when the answer fits neither or both.

#include <array>
#include <cstdint>
#include <json.hpp>
#include <memory>
#include <optional>
#include <set>
#include <unordered_set>
#include <string>
#include <string_view>
#include <vector>

#include "sbell/agents.hpp"
#include "sbell/chsh_stats.hpp"
#include "sbell/remote.hpp"
#include "sbell/stimuli.hpp"

namespace sbell {

enum class Verdict { alpha, beta, unclear, out_of_scope };

std::string to_string(Verdict v);  // "alpha", "beta", "unclear", "out_of_scope"
Verdict verdict_from_string(const std::string& s);

struct Classification {
  Verdict verdict = Verdict::unclear;
  std::string rationale;
  int attempts_used = 1;
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  /// Must be safe to call concurrently.
  virtual Classification classify(std::string_view interpretation, const AmbiguousWord& word) const = 0;
  virtual nlohmann::json describe() const = 0;
};

/// Content-token overlap with each gloss: alpha iff the interpretation shares
/// a token with gloss α and none with gloss β (β symmetric), unclear if it
/// shares with both, out_of_scope if with neither.
///
/// Tokens are maximal runs of ASCII letters, lowercased; stop words are
/// dropped and a trailing "s" is removed from tokens longer than three letters.
class KeywordClassifier final : public ClassifierBackend {
 public:
  explicit KeywordClassifier(std::set<std::string> stopwords);
  KeywordClassifier(const KeywordClassifier& other) : KeywordClassifier(other.stopwords_) {}
  KeywordClassifier& operator=(const KeywordClassifier&) = delete;
  /// Uses the bundled stop-word list.
  static const KeywordClassifier& bundled();

  Classification classify(std::string_view interpretation, const AmbiguousWord& word) const override;
  nlohmann::json describe() const override;

  /// Sorted, de-duplicated lowercase tokens with stop words removed and a plural "s" stripped.
  std::vector<std::string> content_tokens(std::string_view text) const;

 private:
  void tokenize(std::string_view text, std::string& lowered, std::vector<std::string_view>& tokens) const;

  std::set<std::string> stopwords_;
  std::unordered_set<std::string_view> stopword_lookup_;  // views into stopwords_
  std::uint64_t instance_id_;
};

/// Asks a chat-completion model for exactly one of ALPHA, BETA, UNCLEAR, OUT_OF_SCOPE.
class RemoteClassifier final : public ClassifierBackend {
 public:
  RemoteClassifier(ResolvedProvider provider, std::string model, std::shared_ptr<const ChatTransport> transport,
                   std::string instruction = default_instruction());

  Classification classify(std::string_view interpretation, const AmbiguousWord& word) const override;
  nlohmann::json describe() const override;

  static std::string default_instruction();

 private:
  ResolvedProvider provider_;
  std::string model_;
  std::shared_ptr<const ChatTransport> transport_;
  std::string instruction_;
};

/// Throws std::invalid_argument on an empty interpretation.
Classification classify(std::string_view interpretation, const AmbiguousWord& word, const ClassifierBackend& backend);

/// One agent call and the verdicts it received.
struct InterpretationAttempt {
  AgentResponse response;
  std::array<Classification, 2> classifications;
};

struct RetryOutcome {
  /// Set when some attempt classified both words as alpha or beta.
  std::optional<OutcomeVector> outcome;
  std::vector<InterpretationAttempt> attempts;
};

/// alpha ↦ +1, beta ↦ −1; nullopt for unclear / out_of_scope.
std::optional<int> outcome_value(Verdict v);

/// Calls the agent, classifies both words, and re-asks while either verdict
/// is unclear or out_of_scope, at most `max_attempts` calls in total.
RetryOutcome classify_with_retry(Agent& agent, const AgentRequest& request,
                                 const std::array<AmbiguousWord, 2>& word_pair, const ClassifierBackend& backend,
                                 int max_attempts);

}  // namespace sbell
