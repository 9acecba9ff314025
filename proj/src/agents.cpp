#include "sbell/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "sbell/error.hpp"
#include "sbell/semantic_state.hpp"

namespace sbell {
namespace {

const std::string& gloss(const AmbiguousWord& w, int outcome) {
  return outcome > 0 ? w.meaning_alpha : w.meaning_beta;
}

AgentResponse simulated_response(const std::array<AmbiguousWord, 2>& words, OutcomeVector v,
                                 const char* model) {
  AgentResponse r;
  r.interpretation_word1 = gloss(words[0], v.word1);
  r.interpretation_word2 = gloss(words[1], v.word2);
  r.provider_id = "simulated";
  r.model_id = model;
  return r;
}

void require_party(const AgentRequest& request, Party party) {
  if (request.setting.label.party != party) throw std::logic_error("agent received the other party's setting");
}

// Answers a predetermined outcome vector, drawn by the source for this context.
class FixedOutcomeAgent final : public Agent {
 public:
  FixedOutcomeAgent(Party party, std::array<AmbiguousWord, 2> words, OutcomeVector outcome, const char* model)
      : party_(party), words_(std::move(words)), outcome_(outcome), model_(model) {}

  AgentResponse interpret(const AgentRequest& request) override {
    require_party(request, party_);
    return simulated_response(words_, outcome_, model_);
  }

 private:
  Party party_;
  std::array<AmbiguousWord, 2> words_;
  OutcomeVector outcome_;
  const char* model_;
};

// ---------------------------------------------------------------------------

class LocalAgent final : public Agent {
 public:
  LocalAgent(Party party, std::array<AmbiguousWord, 2> words, std::array<LocalStrategy, 2> hidden)
      : party_(party), words_(std::move(words)), hidden_(hidden) {}

  AgentResponse interpret(const AgentRequest& request) override {
    require_party(request, party_);
    const SettingLabel own = request.setting.label;
    return simulated_response(words_, OutcomeVector::make(hidden_[0].answer(own), hidden_[1].answer(own)), "lhv");
  }

 private:
  Party party_;
  std::array<AmbiguousWord, 2> words_;
  std::array<LocalStrategy, 2> hidden_;  // one per word
};

class LhvTrial final : public TrialAgents {
 public:
  LhvTrial(std::array<AmbiguousWord, 2> words, std::array<LocalStrategy, 2> hidden)
      : words_(std::move(words)), hidden_(hidden) {}

  ContextAgents context(Context) override {
    return {std::make_unique<LocalAgent>(Party::alice, words_, hidden_),
            std::make_unique<LocalAgent>(Party::bob, words_, hidden_)};
  }

 private:
  std::array<AmbiguousWord, 2> words_;
  std::array<LocalStrategy, 2> hidden_;
};

class LhvSource final : public AgentSource {
 public:
  explicit LhvSource(StrategyDistribution d) : dist_(std::move(d)) {}

  std::unique_ptr<TrialAgents> begin_trial(const TrialStimulus& s, std::uint64_t seed) const override {
    Rng rng(seed);
    const unsigned first = dist_.sample(rng);
    const unsigned second = dist_.sample(rng);
    return std::make_unique<LhvTrial>(s.word_pair, std::array{LocalStrategy::from_index(first),
                                                              LocalStrategy::from_index(second)});
  }

  nlohmann::json describe() const override {
    return {{"kind", "lhv"}, {"weights", dist_.weights()}};
  }

 private:
  StrategyDistribution dist_;
};

// ---------------------------------------------------------------------------

// Samples (a, b) for one word from a joint distribution over
// (+,+), (+,−), (−,+), (−,−).
std::pair<int, int> sample_joint(const std::array<double, 4>& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0;
  std::size_t k = 3;
  for (std::size_t i = 0; i < 4; ++i) {
    acc += p[i];
    if (u < acc) {
      k = i;
      break;
    }
  }
  while (p[k] <= 0.0 && k > 0) --k;
  return {k < 2 ? 1 : -1, (k % 2 == 0) ? 1 : -1};
}

using JointTable = std::array<std::array<double, 4>, 4>;  // per context

class JointTrial final : public TrialAgents {
 public:
  JointTrial(std::array<AmbiguousWord, 2> words, const JointTable& joint, std::uint64_t seed, const char* model)
      : words_(std::move(words)), joint_(joint), rng_(seed), model_(model) {}

  ContextAgents context(Context c) override {
    const auto& p = joint_[static_cast<std::size_t>(c)];
    const auto [a1, b1] = sample_joint(p, rng_);
    const auto [a2, b2] = sample_joint(p, rng_);
    return {std::make_unique<FixedOutcomeAgent>(Party::alice, words_, OutcomeVector::make(a1, a2), model_),
            std::make_unique<FixedOutcomeAgent>(Party::bob, words_, OutcomeVector::make(b1, b2), model_)};
  }

 private:
  std::array<AmbiguousWord, 2> words_;
  const JointTable& joint_;
  Rng rng_;
  const char* model_;
};

class JointSource final : public AgentSource {
 public:
  JointSource(JointTable joint, nlohmann::json description, const char* model)
      : joint_(joint), description_(std::move(description)), model_(model) {}

  std::unique_ptr<TrialAgents> begin_trial(const TrialStimulus& s, std::uint64_t seed) const override {
    return std::make_unique<JointTrial>(s.word_pair, joint_, seed, model_);
  }
  nlohmann::json describe() const override { return description_; }

 private:
  JointTable joint_;
  nlohmann::json description_;
  const char* model_;
};

// ---------------------------------------------------------------------------

class SignalingBob final : public Agent {
 public:
  SignalingBob(std::array<AmbiguousWord, 2> words, Variant alice_setting, FlipRule rule)
      : words_(std::move(words)), alice_setting_(alice_setting), rule_(rule) {}

  AgentResponse interpret(const AgentRequest& request) override {
    require_party(request, Party::bob);
    const Variant own = request.setting.label.variant;
    const bool flipped = own == Variant::primed ? rule_.flip_b_prime : rule_.flip_b;
    const bool one_primed = (alice_setting_ == Variant::primed) != (own == Variant::primed);
    const int b = flipped && one_primed ? -1 : 1;
    return simulated_response(words_, OutcomeVector::make(b, b), "signaling");
  }

 private:
  std::array<AmbiguousWord, 2> words_;
  Variant alice_setting_;
  FlipRule rule_;
};

class SignalingTrial final : public TrialAgents {
 public:
  SignalingTrial(std::array<AmbiguousWord, 2> words, FlipRule rule) : words_(std::move(words)), rule_(rule) {}

  ContextAgents context(Context c) override {
    return {std::make_unique<FixedOutcomeAgent>(Party::alice, words_, OutcomeVector::make(1, 1), "signaling"),
            std::make_unique<SignalingBob>(words_, alice_variant(c), rule_)};
  }

 private:
  std::array<AmbiguousWord, 2> words_;
  FlipRule rule_;
};

class SignalingSource final : public AgentSource {
 public:
  explicit SignalingSource(FlipRule rule) : rule_(rule) {}
  std::unique_ptr<TrialAgents> begin_trial(const TrialStimulus& s, std::uint64_t) const override {
    return std::make_unique<SignalingTrial>(s.word_pair, rule_);
  }
  nlohmann::json describe() const override {
    return {{"kind", "signaling"}, {"flip_b", rule_.flip_b}, {"flip_b_prime", rule_.flip_b_prime}};
  }

 private:
  FlipRule rule_;
};

// ---------------------------------------------------------------------------

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string strip(std::string_view s, std::string_view chars) {
  const auto b = s.find_first_not_of(chars);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(chars);
  return std::string(s.substr(b, e - b + 1));
}

struct RemoteShared {
  RemoteAgentOptions options;
  std::map<std::string, const ResolvedProvider*> providers;
};

class RemoteAgent final : public Agent {
 public:
  RemoteAgent(const RemoteShared& shared, ModelEntry model, std::uint64_t seed)
      : shared_(shared), model_(std::move(model)), rng_(seed) {}

  AgentResponse interpret(const AgentRequest& request) override {
    if (calls_++ > 0 && shared_.options.reinterpret_model == ReinterpretModel::resample)
      model_ = select_model(shared_.options.pool, rng_);
    const auto it = shared_.providers.find(model_.provider);
    if (it == shared_.providers.end()) throw ConfigError("unknown provider '" + model_.provider + "'");
    const ChatRequest chat = build_chat_request(request, model_.model, shared_.options.instruction);
    ChatExchange ex = shared_.options.transport->complete(*it->second, chat);
    auto interpretations = parse_interpretations(ex.content, request.words);
    AgentResponse r;
    r.interpretation_word1 = std::move(interpretations[0]);
    r.interpretation_word2 = std::move(interpretations[1]);
    r.provider_id = model_.provider;
    r.model_id = ex.model_id;
    r.latency = ex.latency;
    r.raw_request = std::move(ex.request_body);
    r.raw_response = std::move(ex.response_body);
    return r;
  }

 private:
  const RemoteShared& shared_;
  ModelEntry model_;
  Rng rng_;
  int calls_ = 0;
};

class RemoteTrial final : public TrialAgents {
 public:
  RemoteTrial(const RemoteShared& shared, ModelEntry alice, ModelEntry bob, std::uint64_t seed)
      : shared_(shared), alice_(std::move(alice)), bob_(std::move(bob)), seed_(seed) {}

  ContextAgents context(Context c) override {
    const auto k = static_cast<std::uint64_t>(c) * 2;
    return {std::make_unique<RemoteAgent>(shared_, alice_, derive_seed(seed_, k)),
            std::make_unique<RemoteAgent>(shared_, bob_, derive_seed(seed_, k + 1))};
  }

 private:
  const RemoteShared& shared_;
  ModelEntry alice_, bob_;
  std::uint64_t seed_;
};

class RemoteSource final : public AgentSource {
 public:
  explicit RemoteSource(RemoteAgentOptions options) : shared_{std::move(options), {}} {
    if (!shared_.options.transport) throw std::invalid_argument("remote agent: no transport");
    for (const ResolvedProvider& p : shared_.options.providers) shared_.providers[p.endpoint.name] = &p;
    for (const ModelEntry& e : shared_.options.pool.entries())
      if (!shared_.providers.count(e.provider))
        throw ConfigError("model '" + e.id() + "' refers to unknown provider '" + e.provider + "'");
  }

  std::unique_ptr<TrialAgents> begin_trial(const TrialStimulus&, std::uint64_t seed) const override {
    Rng rng(seed);
    ModelEntry alice = select_model(shared_.options.pool, rng);
    ModelEntry bob = shared_.options.pair_models == PairModels::shared ? alice : select_model(shared_.options.pool, rng);
    return std::make_unique<RemoteTrial>(shared_, std::move(alice), std::move(bob), derive_seed(seed, 0xa9e7));
  }

  nlohmann::json describe() const override {
    nlohmann::json pool = nlohmann::json::array();
    for (const ModelEntry& e : shared_.options.pool.entries()) pool.push_back(e.id());
    nlohmann::json providers = nlohmann::json::object();
    for (const ResolvedProvider& p : shared_.options.providers) providers[p.endpoint.name] = p.endpoint.base_url;
    return {{"kind", "remote"},
            {"pool", pool},
            {"providers", providers},
            {"instruction", shared_.options.instruction},
            {"pair_models", shared_.options.pair_models == PairModels::shared ? "shared" : "independent"},
            {"reinterpret_model", shared_.options.reinterpret_model == ReinterpretModel::same ? "same" : "resample"}};
  }

 private:
  RemoteShared shared_;
};

}  // namespace

AgentRequest make_request(const TrialStimulus& stimulus, SettingLabel label) {
  return {label.party == Party::alice ? stimulus.alice : stimulus.bob, stimulus.setting(label),
          stimulus.rendered_sentence, {stimulus.word_pair[0].surface, stimulus.word_pair[1].surface}};
}

LocalStrategy LocalStrategy::from_index(unsigned index) {
  if (index >= kLocalStrategyCount) throw std::invalid_argument("local strategy index out of range");
  LocalStrategy s;
  for (unsigned i = 0; i < 4; ++i) s.response[i] = (index >> i & 1u) ? -1 : 1;
  return s;
}

unsigned LocalStrategy::index() const {
  unsigned k = 0;
  for (unsigned i = 0; i < 4; ++i)
    if (response[i] < 0) k |= 1u << i;
  return k;
}

int strategy_s(const LocalStrategy& s) {
  const int a = s.response[0], ap = s.response[1], b = s.response[2], bp = s.response[3];
  return a * b - a * bp + ap * b + ap * bp;
}

StrategyDistribution::StrategyDistribution(std::array<double, kLocalStrategyCount> weights) : weights_(weights) {
  double total = 0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0) throw std::invalid_argument("strategy weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0)) throw std::invalid_argument("strategy weights sum to zero");
  double acc = 0;
  for (unsigned k = 0; k < kLocalStrategyCount; ++k) {
    weights_[k] /= total;
    acc += weights_[k];
    cumulative_[k] = acc;
  }
}

StrategyDistribution StrategyDistribution::point(unsigned strategy_index) {
  if (strategy_index >= kLocalStrategyCount) throw std::invalid_argument("local strategy index out of range");
  std::array<double, kLocalStrategyCount> w{};
  w[strategy_index] = 1.0;
  return StrategyDistribution(w);
}

StrategyDistribution StrategyDistribution::uniform() {
  std::array<double, kLocalStrategyCount> w;
  w.fill(1.0);
  return StrategyDistribution(w);
}

StrategyDistribution StrategyDistribution::random(Rng& rng) {
  std::array<double, kLocalStrategyCount> w;
  for (double& x : w) x = rng.uniform();
  return StrategyDistribution(w);
}

unsigned StrategyDistribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  for (unsigned k = 0; k < kLocalStrategyCount; ++k)
    if (u < cumulative_[k] && weights_[k] > 0) return k;
  for (unsigned k = kLocalStrategyCount; k-- > 0;)
    if (weights_[k] > 0) return k;
  return 0;
}

double StrategyDistribution::expected_s() const {
  double s = 0;
  for (unsigned k = 0; k < kLocalStrategyCount; ++k) s += weights_[k] * strategy_s(LocalStrategy::from_index(k));
  return s;
}

std::unique_ptr<AgentSource> lhv_agent(StrategyDistribution distribution) {
  return std::make_unique<LhvSource>(std::move(distribution));
}

QuantumAngles QuantumAngles::tsirelson() {
  using std::numbers::pi;
  return {0.0, pi / 2, pi / 4, 3 * pi / 4};
}

double QuantumAngles::angle(SettingLabel label) const {
  switch (label.index()) {
    case 0: return a;
    case 1: return a_prime;
    case 2: return b;
    default: return b_prime;
  }
}

namespace {
std::pair<Observable, Observable> context_observables(const QuantumAngles& angles, Context c) {
  return {planar_spin(angles.angle({Party::alice, alice_variant(c)})),
          planar_spin(angles.angle({Party::bob, bob_variant(c)}))};
}
}  // namespace

std::unique_ptr<AgentSource> quantum_agent(QuantumAngles angles) {
  const SemanticState psi = singlet();
  JointTable joint{};
  for (Context c : kContexts) {
    const auto [oa, ob] = context_observables(angles, c);
    joint[static_cast<std::size_t>(c)] = joint_distribution(psi, oa, ob);
  }
  nlohmann::json d = {{"kind", "quantum"},
                      {"angles", {angles.a, angles.a_prime, angles.b, angles.b_prime}}};
  return std::make_unique<JointSource>(joint, std::move(d), "quantum");
}

double quantum_s(const QuantumAngles& angles) {
  const SemanticState psi = singlet();
  double s = 0;
  for (Context c : kContexts) {
    const auto [oa, ob] = context_observables(angles, c);
    s += kChshSigns[static_cast<std::size_t>(c)] * joint_correlation(psi, oa, ob);
  }
  return s;
}

std::unique_ptr<AgentSource> pr_box_agent() {
  JointTable joint{};
  for (Context c : kContexts) {
    joint[static_cast<std::size_t>(c)] =
        kChshSigns[static_cast<std::size_t>(c)] < 0 ? std::array{0.0, 0.5, 0.5, 0.0} : std::array{0.5, 0.0, 0.0, 0.5};
  }
  return std::make_unique<JointSource>(joint, nlohmann::json{{"kind", "prbox"}}, "prbox");
}

std::unique_ptr<AgentSource> signaling_agent(FlipRule rule) { return std::make_unique<SignalingSource>(rule); }

std::string RemoteAgentOptions::default_instruction() {
  return "State, in a few words each, the single meaning you take {word1} and {word2} to have in this "
         "sentence. Reply with exactly two lines and nothing else:\n{word1}: <meaning>\n{word2}: <meaning>";
}

std::unique_ptr<AgentSource> remote_agent(RemoteAgentOptions options) {
  return std::make_unique<RemoteSource>(std::move(options));
}

ChatRequest build_chat_request(const AgentRequest& request, const std::string& model, const std::string& instruction) {
  const Persona& p = request.persona;
  std::string system = "You are " + p.name + ", a " + std::to_string(p.age) + "-year-old living in " + p.location +
                       " whose primary language is " + p.language + ". " + request.setting.priming_text;
  std::string task = replace_all(replace_all(instruction, "{word1}", request.words[0]), "{word2}", request.words[1]);
  std::string user = "Sentence: \"" + request.sentence + "\"\n" + task;
  return {model, {{"system", std::move(system)}, {"user", std::move(user)}}};
}

std::array<std::string, 2> parse_interpretations(const std::string& reply, const std::array<std::string, 2>& words) {
  std::array<std::string, 2> out;
  std::vector<std::string> ordered;
  std::size_t pos = 0;
  while (pos < reply.size()) {
    auto nl = reply.find('\n', pos);
    if (nl == std::string::npos) nl = reply.size();
    const std::string line = reply.substr(pos, nl - pos);
    pos = nl + 1;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = lower(strip(line.substr(0, colon), " \t\r*-_\"'`0123456789.)"));
    const std::string value = strip(line.substr(colon + 1), " \t\r*\"'`");
    if (value.empty()) continue;
    ordered.push_back(value);
    for (std::size_t i = 0; i < 2; ++i)
      if (out[i].empty() && key == lower(words[i])) out[i] = value;
  }
  if (out[0].empty() || out[1].empty()) {
    if (ordered.size() != 2) throw MalformedReply("could not find one interpretation per word in reply");
    out = {ordered[0], ordered[1]};
  }
  return out;
}

}  // namespace sbell
