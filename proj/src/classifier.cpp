#include "sbell/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "sbell/error.hpp"

namespace sbell {
namespace {

std::atomic<std::uint64_t> next_instance_id{0};

std::string join(const std::vector<std::string_view>& s) {
  std::string out;
  for (auto t : s) {
    if (!out.empty()) out += ',';
    out += t;
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::alpha: return "alpha";
    case Verdict::beta: return "beta";
    case Verdict::unclear: return "unclear";
    case Verdict::out_of_scope: return "out_of_scope";
  }
  return "unclear";
}

Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::alpha, Verdict::beta, Verdict::unclear, Verdict::out_of_scope})
    if (to_string(v) == s) return v;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

std::optional<int> outcome_value(Verdict v) {
  if (v == Verdict::alpha) return 1;
  if (v == Verdict::beta) return -1;
  return std::nullopt;
}

KeywordClassifier::KeywordClassifier(std::set<std::string> stopwords)
    : stopwords_(std::move(stopwords)), instance_id_(next_instance_id.fetch_add(1) + 1) {
  for (const auto& w : stopwords_) stopword_lookup_.insert(w);
}

const KeywordClassifier& KeywordClassifier::bundled() {
  static const KeywordClassifier instance = [] {
    std::set<std::string> words;
    std::istringstream in{std::string(bundled::stopwords())};
    for (std::string w; in >> w;) words.insert(w);
    return KeywordClassifier(std::move(words));
  }();
  return instance;
}

void KeywordClassifier::tokenize(std::string_view text, std::string& lowered,
                                 std::vector<std::string_view>& tokens) const {
  lowered.assign(text.size(), ' ');
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c >= 'a' && c <= 'z') {
      lowered[i] = c;
    } else if (c >= 'A' && c <= 'Z') {
      lowered[i] = static_cast<char>(c - 'A' + 'a');
    }
  }
  tokens.clear();
  std::size_t i = 0;
  while (i < lowered.size()) {
    if (lowered[i] == ' ') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lowered.size() && lowered[j] != ' ') ++j;
    std::string_view tok(lowered.data() + i, j - i);
    if (!stopword_lookup_.count(tok)) {
      if (tok.size() > 3 && tok.back() == 's') tok.remove_suffix(1);
      tokens.push_back(tok);
    }
    i = j;
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
}

std::vector<std::string> KeywordClassifier::content_tokens(std::string_view text) const {
  std::string lowered;
  std::vector<std::string_view> tokens;
  tokenize(text, lowered, tokens);
  return {tokens.begin(), tokens.end()};
}

Classification KeywordClassifier::classify(std::string_view interpretation, const AmbiguousWord& word) const {
  struct Scratch {
    std::string text;
    std::vector<std::string_view> text_tokens, with_alpha, with_beta;
    // Glosses repeat across calls; their token lists are kept per thread, keyed by this classifier and gloss.
    std::unordered_map<std::string, std::vector<std::string>> glosses;
    std::uint64_t owner = 0;
  };
  thread_local Scratch s;
  if (s.owner != instance_id_ || s.glosses.size() > 4096) {
    s.glosses.clear();
    s.owner = instance_id_;
  }
  auto gloss_tokens = [&](const std::string& gloss) -> const std::vector<std::string>& {
    auto it = s.glosses.find(gloss);
    if (it == s.glosses.end()) it = s.glosses.emplace(gloss, content_tokens(gloss)).first;
    return it->second;
  };
  const auto& alpha_tokens = gloss_tokens(word.meaning_alpha);
  const auto& beta_tokens = gloss_tokens(word.meaning_beta);
  tokenize(interpretation, s.text, s.text_tokens);
  s.with_alpha.clear();
  s.with_beta.clear();
  auto intersect = [&](const std::vector<std::string>& gloss, std::vector<std::string_view>& out) {
    auto a = s.text_tokens.begin();
    auto b = gloss.begin();
    while (a != s.text_tokens.end() && b != gloss.end()) {
      const int cmp = a->compare(*b);
      if (cmp < 0) {
        ++a;
      } else if (cmp > 0) {
        ++b;
      } else {
        out.push_back(*a);
        ++a;
        ++b;
      }
    }
  };
  intersect(alpha_tokens, s.with_alpha);
  intersect(beta_tokens, s.with_beta);
  const auto& with_alpha = s.with_alpha;
  const auto& with_beta = s.with_beta;

  Classification c;
  if (!with_alpha.empty() && with_beta.empty()) {
    c.verdict = Verdict::alpha;
    c.rationale = "matches alpha on {" + join(with_alpha) + "}";
  } else if (with_alpha.empty() && !with_beta.empty()) {
    c.verdict = Verdict::beta;
    c.rationale = "matches beta on {" + join(with_beta) + "}";
  } else if (!with_alpha.empty()) {
    c.verdict = Verdict::unclear;
    c.rationale = "matches alpha on {" + join(with_alpha) + "} and beta on {" + join(with_beta) + "}";
  } else {
    c.verdict = Verdict::out_of_scope;
    c.rationale = "no content token shared with either gloss";
  }
  return c;
}

nlohmann::json KeywordClassifier::describe() const {
  return {{"backend", "keyword"}, {"stopwords", stopwords_}};
}

RemoteClassifier::RemoteClassifier(ResolvedProvider provider, std::string model,
                                   std::shared_ptr<const ChatTransport> transport, std::string instruction)
    : provider_(std::move(provider)),
      model_(std::move(model)),
      transport_(std::move(transport)),
      instruction_(std::move(instruction)) {
  if (!transport_) throw std::invalid_argument("remote classifier: no transport");
}

std::string RemoteClassifier::default_instruction() {
  return "The word \"{word}\" can mean ALPHA: \"{alpha}\" or BETA: \"{beta}\". Someone interpreted it as: "
         "\"{interpretation}\". Answer with exactly one token: ALPHA if the interpretation matches only the first "
         "meaning, BETA if it matches only the second, UNCLEAR if it matches both or is ambiguous, OUT_OF_SCOPE if "
         "it matches neither.";
}

Classification RemoteClassifier::classify(std::string_view interpretation, const AmbiguousWord& word) const {
  std::string prompt = instruction_;
  prompt = replace_all(prompt, "{word}", word.surface);
  prompt = replace_all(prompt, "{alpha}", word.meaning_alpha);
  prompt = replace_all(prompt, "{beta}", word.meaning_beta);
  prompt = replace_all(prompt, "{interpretation}", interpretation);
  const ChatExchange ex = transport_->complete(provider_, {model_, {{"user", prompt}}});

  std::string token;
  for (unsigned char c : ex.content)
    if (std::isalpha(c) || c == '_') token.push_back(static_cast<char>(std::toupper(c)));
  Classification out;
  out.rationale = ex.content;
  if (token == "ALPHA") {
    out.verdict = Verdict::alpha;
  } else if (token == "BETA") {
    out.verdict = Verdict::beta;
  } else if (token == "UNCLEAR") {
    out.verdict = Verdict::unclear;
  } else if (token == "OUT_OF_SCOPE" || token == "OUTOFSCOPE") {
    out.verdict = Verdict::out_of_scope;
  } else {
    throw MalformedReply("classifier reply is not one of ALPHA, BETA, UNCLEAR, OUT_OF_SCOPE: '" + ex.content + "'");
  }
  return out;
}

nlohmann::json RemoteClassifier::describe() const {
  return {{"backend", "remote"},
          {"provider", provider_.endpoint.name},
          {"base_url", provider_.endpoint.base_url},
          {"model", model_},
          {"instruction", instruction_}};
}

Classification classify(std::string_view interpretation, const AmbiguousWord& word, const ClassifierBackend& backend) {
  if (interpretation.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw std::invalid_argument("classify: empty interpretation");
  return backend.classify(interpretation, word);
}

RetryOutcome classify_with_retry(Agent& agent, const AgentRequest& request,
                                 const std::array<AmbiguousWord, 2>& word_pair, const ClassifierBackend& backend,
                                 int max_attempts) {
  if (max_attempts < 1) throw std::invalid_argument("classify_with_retry: max_attempts must be >= 1");
  RetryOutcome out;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    InterpretationAttempt a;
    a.response = agent.interpret(request);
    const std::array<const std::string*, 2> texts{&a.response.interpretation_word1, &a.response.interpretation_word2};
    for (std::size_t w = 0; w < 2; ++w) {
      // An empty answer cannot be classified; treat it like an out-of-scope one and re-ask.
      if (texts[w]->find_first_not_of(" \t\r\n") == std::string::npos) {
        a.classifications[w] = {Verdict::out_of_scope, "empty interpretation", attempt};
      } else {
        a.classifications[w] = classify(*texts[w], word_pair[w], backend);
        a.classifications[w].attempts_used = attempt;
      }
    }
    const auto v1 = outcome_value(a.classifications[0].verdict);
    const auto v2 = outcome_value(a.classifications[1].verdict);
    out.attempts.push_back(std::move(a));
    if (v1 && v2) {
      out.outcome = OutcomeVector::make(*v1, *v2);
      break;
    }
  }
  return out;
}

}  // namespace sbell
