#include "sbell/chsh_stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "sbell/kernels.hpp"

namespace sbell {
namespace {

// Column-major copy of the trial outcomes: for each context, Alice word1,
// Alice word2, Bob word1, Bob word2.
struct Columns {
  std::size_t n = 0;
  std::array<std::array<std::vector<std::int8_t>, 4>, 4> col;

  explicit Columns(std::span<const TrialOutcomes> trials) : n(trials.size()) {
    for (auto& ctx : col)
      for (auto& c : ctx) c.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t c = 0; c < 4; ++c) {
        const ContextOutcome& o = trials[t][c];
        col[c][0][t] = o.alice.word1;
        col[c][1][t] = o.alice.word2;
        col[c][2][t] = o.bob.word1;
        col[c][3][t] = o.bob.word2;
      }
    }
  }
};

double expectation_from_sum(std::int64_t dot_sum, std::size_t n) {
  return static_cast<double>(dot_sum) / (2.0 * static_cast<double>(n));
}

CorrelationTable table_from_sums(const std::array<std::int64_t, 4>& dot_sums, std::size_t n) {
  CorrelationTable t;
  t.e_ab = expectation_from_sum(dot_sums[0], n);
  t.e_abp = expectation_from_sum(dot_sums[1], n);
  t.e_apb = expectation_from_sum(dot_sums[2], n);
  t.e_apbp = expectation_from_sum(dot_sums[3], n);
  t.n_trials = n;
  return t;
}

// s_t = Σ_c sign_c (a·b)_c, in [−8, 8]; S over a weighted sample is Σ w_t s_t / (2 Σ w_t).
std::vector<std::int8_t> per_trial_chsh_terms(std::span<const TrialOutcomes> trials) {
  std::vector<std::int8_t> out(trials.size());
  for (std::size_t t = 0; t < trials.size(); ++t) {
    int s = 0;
    for (std::size_t c = 0; c < 4; ++c) {
      const ContextOutcome& o = trials[t][c];
      s += kChshSigns[c] * (o.alice.word1 * o.bob.word1 + o.alice.word2 * o.bob.word2);
    }
    out[t] = static_cast<std::int8_t>(s);
  }
  return out;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (v[lo] == v[hi]) return v[lo];
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

OutcomeVector OutcomeVector::make(int word1, int word2) {
  auto ok = [](int x) { return x == 1 || x == -1; };
  if (!ok(word1) || !ok(word2)) throw std::invalid_argument("OutcomeVector: entries must be +1 or -1");
  return {static_cast<std::int8_t>(word1), static_cast<std::int8_t>(word2)};
}

std::string SettingLabel::name() const {
  std::string s = party == Party::alice ? "A" : "B";
  if (variant == Variant::primed) s += "'";
  return s;
}

SettingLabel SettingLabel::from_name(const std::string& name) {
  for (const SettingLabel& l : kSettings)
    if (l.name() == name) return l;
  throw std::invalid_argument("unknown setting label '" + name + "'");
}

std::string context_name(Context c) {
  return SettingLabel{Party::alice, alice_variant(c)}.name() + SettingLabel{Party::bob, bob_variant(c)}.name();
}

double pair_expectation(std::span<const std::pair<OutcomeVector, OutcomeVector>> pairs) {
  if (pairs.empty()) throw std::invalid_argument("pair_expectation: empty sequence");
  std::int64_t sum = 0;
  for (const auto& [a, b] : pairs) sum += a.word1 * b.word1 + a.word2 * b.word2;
  return expectation_from_sum(sum, pairs.size());
}

CorrelationTable correlation_table(std::span<const TrialOutcomes> trials) {
  if (trials.empty()) throw std::invalid_argument("correlation_table: no trials");
  const kernels::Table& k = kernels::active();
  const Columns cols(trials);
  const auto n = trials.size();

  std::array<std::int64_t, 4> dots{};
  for (std::size_t c = 0; c < 4; ++c) {
    dots[c] = k.dot_i8(cols.col[c][0], cols.col[c][2]) + k.dot_i8(cols.col[c][1], cols.col[c][3]);
  }
  CorrelationTable table = table_from_sums(dots, n);

  const double dn = static_cast<double>(n);
  for (const SettingLabel& own : kSettings) {
    for (Variant partner : {Variant::unprimed, Variant::primed}) {
      const Context ctx = own.party == Party::alice ? context_of(own.variant, partner)
                                                    : context_of(partner, own.variant);
      const auto& cc = cols.col[static_cast<std::size_t>(ctx)];
      const std::size_t base = own.party == Party::alice ? 0 : 2;
      table.marginals.push_back({own, partner,
                                 {static_cast<double>(k.sum_i8(cc[base])) / dn,
                                  static_cast<double>(k.sum_i8(cc[base + 1])) / dn}});
    }
  }
  return table;
}

double chsh_s(const CorrelationTable& t) { return t.e_ab - t.e_abp + t.e_apb + t.e_apbp; }

double chsh_s(std::span<const TrialOutcomes> trials) { return chsh_s(correlation_table(trials)); }

std::vector<RunningPoint> running_s(std::span<const TrialOutcomes> trials) {
  if (trials.empty()) throw std::invalid_argument("running_s: no trials");
  std::vector<RunningPoint> out;
  out.reserve(trials.size());
  std::array<std::int64_t, 4> dots{};
  for (std::size_t t = 0; t < trials.size(); ++t) {
    for (std::size_t c = 0; c < 4; ++c) {
      const ContextOutcome& o = trials[t][c];
      dots[c] += o.alice.word1 * o.bob.word1 + o.alice.word2 * o.bob.word2;
    }
    out.push_back({t + 1, chsh_s(table_from_sums(dots, t + 1))});
  }
  return out;
}

std::vector<double> bootstrap_replicates(std::span<const TrialOutcomes> trials, std::size_t resamples,
                                         Rng& rng) {
  if (trials.size() < 2) throw std::invalid_argument("bootstrap: need at least 2 trials");
  if (resamples == 0) throw std::invalid_argument("bootstrap: resamples must be positive");
  const kernels::Table& k = kernels::active();
  const std::vector<std::int8_t> terms = per_trial_chsh_terms(trials);
  const std::size_t n = trials.size();
  std::vector<std::int32_t> counts(n);
  std::vector<double> out;
  out.reserve(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    out.push_back(expectation_from_sum(k.weighted_sum_i32_i8(counts, terms), n));
  }
  return out;
}

Interval bootstrap_ci(std::span<const TrialOutcomes> trials, std::size_t resamples, double level, Rng& rng) {
  if (resamples < 100) throw std::invalid_argument("bootstrap_ci: resamples must be >= 100");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap_ci: level must be in (0, 1)");
  std::vector<double> reps = bootstrap_replicates(trials, resamples, rng);
  std::sort(reps.begin(), reps.end());
  return {quantile_sorted(reps, (1.0 - level) / 2.0), quantile_sorted(reps, (1.0 + level) / 2.0)};
}

double bootstrap_standard_error(std::span<const TrialOutcomes> trials, std::size_t resamples, Rng& rng) {
  if (resamples < 2) throw std::invalid_argument("bootstrap_standard_error: need at least 2 resamples");
  const std::vector<double> reps = bootstrap_replicates(trials, resamples, rng);
  double mean = 0;
  for (double x : reps) mean += x;
  mean /= static_cast<double>(reps.size());
  double ss = 0;
  for (double x : reps) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(reps.size() - 1));
}

double s_odd(const std::array<double, 4>& e) {
  double best = -INFINITY;
  for (unsigned mask = 0; mask < 16; ++mask) {
    if (std::popcount(mask) % 2 == 0) continue;
    double s = 0;
    for (unsigned i = 0; i < 4; ++i) s += (mask >> i & 1u) ? -e[i] : e[i];
    best = std::max(best, s);
  }
  return best;
}

SignalingReport signaling_report(const CorrelationTable& table) {
  if (table.marginals.size() != 8) throw std::invalid_argument("signaling_report: table lacks marginals");
  SignalingReport r;
  for (const SettingLabel& own : kSettings) {
    const MarginalMean* under[2] = {nullptr, nullptr};
    for (const MarginalMean& m : table.marginals)
      if (m.setting == own) under[m.partner == Variant::primed ? 1 : 0] = &m;
    if (!under[0] || !under[1])
      throw std::invalid_argument("signaling_report: missing context for " + own.name());
    const double shift = (std::abs(under[0]->mean[0] - under[1]->mean[0]) +
                          std::abs(under[0]->mean[1] - under[1]->mean[1])) / 2.0;
    r.deltas[own.index()] = shift;
    r.delta_total += shift;
  }
  r.s_odd = s_odd(table.e());
  r.contextual_cbd = r.s_odd > 2.0 + r.delta_total;
  return r;
}

SignalingReport signaling_report(std::span<const TrialOutcomes> trials) {
  if (trials.empty()) throw std::invalid_argument("signaling_report: missing context (no trials)");
  return signaling_report(correlation_table(trials));
}

}  // namespace sbell
