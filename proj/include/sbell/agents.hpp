#pragma once

// Observers. An Agent answers one request: given its persona, its own setting
// prompt and the sentence, it names one meaning for each ambiguous word.
// Requests carry neither the glosses nor the partner's setting.
//
// Correlations between Alice and Bob come from an AgentSource, which plays
// the role of the shared preparation: once per trial it fixes whatever
// hidden state the pair shares, then hands out an (Alice, Bob) pair of agents
// for each of the four setting contexts.

#include <array>
#include <chrono>
#include <cstdint>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sbell/chsh_stats.hpp"
#include "sbell/random.hpp"
#include "sbell/remote.hpp"
#include "sbell/stimuli.hpp"

namespace sbell {

struct AgentRequest {
  Persona persona;
  SettingPrompt setting;
  std::string sentence;
  std::array<std::string, 2> words;  // surfaces only
};

AgentRequest make_request(const TrialStimulus& stimulus, SettingLabel label);

struct AgentResponse {
  std::string interpretation_word1;
  std::string interpretation_word2;
  std::string provider_id;
  std::string model_id;
  std::chrono::microseconds latency{0};
  /// Wire transcripts; empty for simulated agents.
  std::string raw_request;
  std::string raw_response;
};

class Agent {
 public:
  virtual ~Agent() = default;
  /// Throws TransportError / MalformedReply for remote failures.
  virtual AgentResponse interpret(const AgentRequest& request) = 0;
};

struct ContextAgents {
  std::unique_ptr<Agent> alice;
  std::unique_ptr<Agent> bob;
};

class TrialAgents {
 public:
  virtual ~TrialAgents() = default;
  virtual ContextAgents context(Context c) = 0;
};

class AgentSource {
 public:
  virtual ~AgentSource() = default;
  /// Must be safe to call concurrently for different trials.
  virtual std::unique_ptr<TrialAgents> begin_trial(const TrialStimulus& stimulus, std::uint64_t trial_seed) const = 0;
  /// Stable description used for the run fingerprint.
  virtual nlohmann::json describe() const = 0;
};

// ---------------------------------------------------------------------------
// Local hidden variables

/// A deterministic local response function: the ±1 answer for each setting in
/// {A, A′, B, B′} order. Strategy k answers −1 on setting i iff bit i of k is set.
struct LocalStrategy {
  std::array<std::int8_t, 4> response{1, 1, 1, 1};

  static LocalStrategy from_index(unsigned index);
  unsigned index() const;
  int answer(SettingLabel label) const { return response[label.index()]; }
};

inline constexpr unsigned kLocalStrategyCount = 16;

class StrategyDistribution {
 public:
  /// Throws std::invalid_argument on negative or non-finite weights or a zero sum.
  explicit StrategyDistribution(std::array<double, kLocalStrategyCount> weights);

  static StrategyDistribution point(unsigned strategy_index);
  static StrategyDistribution uniform();
  /// Weights drawn uniformly from [0,1) then normalized.
  static StrategyDistribution random(Rng& rng);

  const std::array<double, kLocalStrategyCount>& weights() const noexcept { return weights_; }
  unsigned sample(Rng& rng) const;
  /// Exact S of this mixture.
  double expected_s() const;

 private:
  std::array<double, kLocalStrategyCount> weights_;
  std::array<double, kLocalStrategyCount> cumulative_;
};

/// S produced by a single deterministic strategy.
int strategy_s(const LocalStrategy& strategy);

std::unique_ptr<AgentSource> lhv_agent(StrategyDistribution distribution);

// ---------------------------------------------------------------------------
// Quantum (singlet) agents

struct QuantumAngles {
  double a = 0, a_prime = 0, b = 0, b_prime = 0;

  /// (0, π/2, π/4, 3π/4), where |S| reaches 2√2.
  static QuantumAngles tsirelson();
  double angle(SettingLabel label) const;
};

/// Each word is an independent singlet measured with planar spins at the
/// parties' angles; Born joint probabilities come from semantic_state.
std::unique_ptr<AgentSource> quantum_agent(QuantumAngles angles);

/// Exact S for the singlet at these angles, via joint_correlation.
double quantum_s(const QuantumAngles& angles);

// ---------------------------------------------------------------------------
// Diagnostic extremes

/// Uniform ±1 marginals with a·b = −1 exactly in the (A,B′) context, whose
/// term enters S with a minus sign, and +1 elsewhere (S = 4).
std::unique_ptr<AgentSource> pr_box_agent();

/// Which of Bob's settings react to Alice's setting.
struct FlipRule {
  bool flip_b = false;
  bool flip_b_prime = true;
};

/// Alice always answers α. On a flipped setting y, Bob answers β exactly when
/// one of Alice's setting and y is primed; on unflipped settings he answers α.
std::unique_ptr<AgentSource> signaling_agent(FlipRule rule);

// ---------------------------------------------------------------------------
// Remote language-model agents

enum class PairModels { independent, shared };
enum class ReinterpretModel { same, resample };

struct RemoteAgentOptions {
  ModelPool pool;
  std::vector<ResolvedProvider> providers;
  std::shared_ptr<const ChatTransport> transport;
  std::string instruction = default_instruction();
  PairModels pair_models = PairModels::independent;
  ReinterpretModel reinterpret_model = ReinterpretModel::same;

  static std::string default_instruction();
};

std::unique_ptr<AgentSource> remote_agent(RemoteAgentOptions options);

/// System prompt (persona + setting) and user prompt (instruction + sentence).
ChatRequest build_chat_request(const AgentRequest& request, const std::string& model,
                               const std::string& instruction);

/// Parses "<word>: <meaning>" lines; throws MalformedReply.
std::array<std::string, 2> parse_interpretations(const std::string& reply, const std::array<std::string, 2>& words);

}  // namespace sbell
