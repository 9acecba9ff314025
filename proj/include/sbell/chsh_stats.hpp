#pragma once

// CHSH statistics over trials. A trial carries one joint outcome for each of
// the four setting pairs (A,B), (A,B′), (A′,B), (A′,B′); each outcome is a
// ±1 vector with one entry per ambiguous word.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbell/random.hpp"

namespace sbell {

/// Classified interpretations of the two words, α ↦ +1, β ↦ −1.
struct OutcomeVector {
  std::int8_t word1 = 1;
  std::int8_t word2 = 1;

  /// Throws std::invalid_argument unless both entries are ±1.
  static OutcomeVector make(int word1, int word2);
  friend bool operator==(const OutcomeVector&, const OutcomeVector&) = default;
};

enum class Party : std::uint8_t { alice, bob };
enum class Variant : std::uint8_t { unprimed, primed };

struct SettingLabel {
  Party party;
  Variant variant;

  std::string name() const;  // "A", "A'", "B", "B'"
  /// Index in {A, A′, B, B′} order.
  std::size_t index() const { return (party == Party::bob ? 2u : 0u) + (variant == Variant::primed ? 1u : 0u); }
  static SettingLabel from_name(const std::string& name);
  friend bool operator==(const SettingLabel&, const SettingLabel&) = default;
};

inline constexpr std::array<SettingLabel, 4> kSettings{{{Party::alice, Variant::unprimed},
                                                        {Party::alice, Variant::primed},
                                                        {Party::bob, Variant::unprimed},
                                                        {Party::bob, Variant::primed}}};

/// The four setting pairs, in the order the CHSH sum lists them.
enum class Context : std::uint8_t { ab = 0, abp = 1, apb = 2, apbp = 3 };
inline constexpr std::array<Context, 4> kContexts{Context::ab, Context::abp, Context::apb, Context::apbp};
/// Sign of each context's term in S = E(A,B) − E(A,B′) + E(A′,B) + E(A′,B′).
inline constexpr std::array<int, 4> kChshSigns{+1, -1, +1, +1};

constexpr Variant alice_variant(Context c) {
  return (c == Context::apb || c == Context::apbp) ? Variant::primed : Variant::unprimed;
}
constexpr Variant bob_variant(Context c) {
  return (c == Context::abp || c == Context::apbp) ? Variant::primed : Variant::unprimed;
}
constexpr Context context_of(Variant alice, Variant bob) {
  return static_cast<Context>((alice == Variant::primed ? 2 : 0) + (bob == Variant::primed ? 1 : 0));
}
std::string context_name(Context c);  // "AB", "AB'", "A'B", "A'B'"

struct ContextOutcome {
  OutcomeVector alice;
  OutcomeVector bob;
  friend bool operator==(const ContextOutcome&, const ContextOutcome&) = default;
};

/// Outcomes of one complete trial, indexed by Context.
using TrialOutcomes = std::array<ContextOutcome, 4>;

/// Mean of one party-setting's outcome vector within one partner setting.
struct MarginalMean {
  SettingLabel setting;
  Variant partner;
  std::array<double, 2> mean;  // per word
};

struct CorrelationTable {
  double e_ab = 0, e_abp = 0, e_apb = 0, e_apbp = 0;
  std::size_t n_trials = 0;
  /// Eight entries: each party-setting under each partner setting.
  std::vector<MarginalMean> marginals;

  std::array<double, 4> e() const { return {e_ab, e_abp, e_apb, e_apbp}; }
};

struct SignalingReport {
  /// Per party-setting in {A, A′, B, B′} order.
  std::array<double, 4> deltas{};
  double delta_total = 0;
  double s_odd = 0;
  bool contextual_cbd = false;
};

struct Interval {
  double low = 0;
  double high = 0;
};

struct RunningPoint {
  std::size_t trial_index;  // 1-based count of trials included
  double s;
};

/// Mean over pairs of the normalized dot product (a·b)/2. Throws on empty input.
double pair_expectation(std::span<const std::pair<OutcomeVector, OutcomeVector>> pairs);

/// E values and marginals over complete trials. Throws std::invalid_argument on empty input.
CorrelationTable correlation_table(std::span<const TrialOutcomes> trials);

/// E(A,B) − E(A,B′) + E(A′,B) + E(A′,B′)
double chsh_s(const CorrelationTable& table);
double chsh_s(std::span<const TrialOutcomes> trials);

/// Entry k is chsh_s over the first k trials.
std::vector<RunningPoint> running_s(std::span<const TrialOutcomes> trials);

/// S recomputed on `resamples` bootstrap resamples of whole trials.
std::vector<double> bootstrap_replicates(std::span<const TrialOutcomes> trials, std::size_t resamples,
                                         Rng& rng);

/// Percentile bootstrap interval at confidence `level`. Requires ≥ 2 trials and ≥ 100 resamples.
Interval bootstrap_ci(std::span<const TrialOutcomes> trials, std::size_t resamples, double level, Rng& rng);

/// Standard deviation of the bootstrap replicates of S.
double bootstrap_standard_error(std::span<const TrialOutcomes> trials, std::size_t resamples, Rng& rng);

/// Marginal-shift (signaling) diagnostics with the cyclic rank-4
/// contextuality-by-default test s_odd > 2 + Δ.
SignalingReport signaling_report(std::span<const TrialOutcomes> trials);
SignalingReport signaling_report(const CorrelationTable& table);

/// max over sign patterns with an odd number of minus signs of Σ ±E.
double s_odd(const std::array<double, 4>& e);

}  // namespace sbell
