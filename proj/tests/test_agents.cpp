#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sbell/agents.hpp"
#include "sbell/error.hpp"
#include "sbell/runner.hpp"

using namespace sbell;

namespace {

ExperimentSummary simulate(const AgentSource& source, std::size_t n, std::uint64_t seed = 1) {
  ExperimentConfig config;
  config.n_trials = n;
  config.seed = seed;
  config.bootstrap_resamples = 200;
  const auto records = run_trials(config, source, KeywordClassifier::bundled());
  return summarize(records, config.analysis());
}

TrialStimulus some_stimulus(std::uint64_t seed = 3) {
  Rng rng(seed);
  return draw_stimulus(StimulusPools::bundled(), rng);
}

}  // namespace

TEST_CASE("requests carry surfaces only, never glosses or the partner's setting") {
  const TrialStimulus s = some_stimulus();
  const AgentRequest r = make_request(s, kSettings[3]);
  CHECK(r.words[0] == s.word_pair[0].surface);
  CHECK(r.words[1] == s.word_pair[1].surface);
  CHECK(r.persona == s.bob);
  CHECK(r.setting == s.settings[3]);
  CHECK(r.sentence == s.rendered_sentence);
  const ChatRequest chat = build_chat_request(r, "m", RemoteAgentOptions::default_instruction());
  std::string all;
  for (const auto& m : chat.messages) all += m.content + "\n";
  CHECK(all.find(s.settings[3].priming_text) != std::string::npos);
  CHECK(all.find(s.settings[2].priming_text) == std::string::npos);
  CHECK(all.find(s.rendered_sentence) != std::string::npos);
  for (const auto& w : s.word_pair) {
    CHECK(all.find(w.meaning_alpha) == std::string::npos);
    CHECK(all.find(w.meaning_beta) == std::string::npos);
  }
}

TEST_CASE("agents reject the other party's request") {
  const TrialStimulus s = some_stimulus();
  const auto trial = pr_box_agent()->begin_trial(s, 9);
  ContextAgents ctx = trial->context(Context::ab);
  CHECK_THROWS_AS(ctx.alice->interpret(make_request(s, kSettings[2])), std::logic_error);
  CHECK_NOTHROW(ctx.alice->interpret(make_request(s, kSettings[0])));
}

TEST_CASE("simulated agents answer with glosses and identify themselves") {
  const TrialStimulus s = some_stimulus();
  const auto trial = lhv_agent(StrategyDistribution::point(0))->begin_trial(s, 1);
  const AgentResponse r = trial->context(Context::apbp).bob->interpret(make_request(s, kSettings[3]));
  CHECK(r.interpretation_word1 == s.word_pair[0].meaning_alpha);
  CHECK(r.interpretation_word2 == s.word_pair[1].meaning_alpha);
  CHECK(r.provider_id == "simulated");
  CHECK(r.model_id == "lhv");
  CHECK(r.raw_request.empty());
}

TEST_CASE("strategy distributions") {
  std::array<double, 16> w{};
  CHECK_THROWS_AS(StrategyDistribution{w}, std::invalid_argument);
  w[3] = -1;
  w[0] = 2;
  CHECK_THROWS_AS(StrategyDistribution{w}, std::invalid_argument);
  w[3] = std::nan("");
  CHECK_THROWS_AS(StrategyDistribution{w}, std::invalid_argument);
  CHECK_THROWS_AS(StrategyDistribution::point(16), std::invalid_argument);
  CHECK(StrategyDistribution::uniform().expected_s() == doctest::Approx(0.0).epsilon(1e-15));
  for (unsigned k = 0; k < 16; ++k) CHECK(StrategyDistribution::point(k).expected_s() == oracle::kStrategyS[k]);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) CHECK(std::abs(StrategyDistribution::random(rng).expected_s()) <= 2.0 + 1e-12);
  const auto half = [] {
    std::array<double, 16> v{};
    v[1] = 1;
    v[6] = 3;
    return StrategyDistribution(v);
  }();
  int six = 0;
  for (int i = 0; i < 8000; ++i) six += half.sample(rng) == 6;
  CHECK(std::abs(six - 6000) < 4 * std::sqrt(8000 * 0.75 * 0.25));
}

TEST_CASE("deterministic local strategies reproduce their S through the pipeline") {
  for (unsigned k = 0; k < 16; ++k) {
    const auto summary = simulate(*lhv_agent(StrategyDistribution::point(k)), 5, k);
    CHECK(summary.n_complete == 5);
    CHECK(summary.s == oracle::kStrategyS[k]);
    CHECK(summary.signaling.delta_total == 0.0);
  }
}

TEST_CASE("uniform local mixture has S near zero") {
  const auto s = simulate(*lhv_agent(StrategyDistribution::uniform()), 4000, 8);
  // Per-trial S has sd ≈ 2, so the mean of 4000 has sd ≈ 0.03.
  CHECK(std::abs(s.s) < 0.15);
}

TEST_CASE("quantum agent") {
  CHECK(std::abs(quantum_s(QuantumAngles::tsirelson()) - oracle::kTsirelsonS) < 1e-10);
  const QuantumAngles aligned{0.3, 0.3, 0.3, 0.3};
  CHECK(quantum_s(aligned) == doctest::Approx(-2.0).epsilon(1e-12));
  const auto s = simulate(*quantum_agent(QuantumAngles::tsirelson()), 5000, 4);
  CHECK(std::abs(s.s - oracle::kTsirelsonS) < 0.12);  // sd ≈ 0.02
  for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(s.table.e()[c] - oracle::kTsirelsonE[c]) < 0.06);
  // Equal angles: perfectly anticorrelated every time.
  const auto same = simulate(*quantum_agent({0.7, 0.7, 0.7, 0.7}), 200, 5);
  for (double e : same.table.e()) CHECK(e == -1.0);
}

TEST_CASE("PR box reaches the algebraic maximum with uniform marginals") {
  const auto s = simulate(*pr_box_agent(), 10000, 6);
  CHECK(s.s == 4.0);
  for (double d : s.signaling.deltas) CHECK(d < 0.05);
  for (const auto& m : s.table.marginals) {
    CHECK(std::abs(m.mean[0]) < 0.05);
    CHECK(std::abs(m.mean[1]) < 0.05);
  }
}

TEST_CASE("signaling agent shifts Bob's marginal by exactly the flip rule") {
  const auto bp = simulate(*signaling_agent({}), 50, 2);
  CHECK(bp.table.e() == std::array<double, 4>{1, -1, 1, 1});
  CHECK(bp.s == 4.0);
  CHECK(bp.signaling.delta_total == 2.0);
  CHECK(bp.signaling.deltas[3] == 2.0);
  CHECK_FALSE(bp.signaling.contextual_cbd);

  const auto both = simulate(*signaling_agent({true, true}), 50, 2);
  CHECK(both.signaling.delta_total == 4.0);
  CHECK(both.table.e() == std::array<double, 4>{1, -1, -1, 1});

  const auto none = simulate(*signaling_agent({false, false}), 50, 2);
  CHECK(none.signaling.delta_total == 0.0);
  CHECK(none.s == 2.0);
}

TEST_CASE("simulated runs are bit-reproducible") {
  ExperimentConfig config;
  config.n_trials = 30;
  config.seed = 99;
  const auto src = quantum_agent(QuantumAngles::tsirelson());
  const auto a = run_trials(config, *src, KeywordClassifier::bundled());
  const auto b = run_trials(config, *src, KeywordClassifier::bundled());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]) == to_json(b[i]));
  config.seed = 100;
  const auto c = run_trials(config, *src, KeywordClassifier::bundled());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || to_json(a[i]) != to_json(c[i]);
  CHECK(differs);
}

TEST_CASE("interpretation parsing") {
  const std::array<std::string, 2> words{"chair", "bank"};
  auto p = parse_interpretations("Chair: leader of a group\nbank: river edge\n", words);
  CHECK(p[0] == "leader of a group");
  CHECK(p[1] == "river edge");
  p = parse_interpretations("**bank**: money\n**chair**: seat", words);
  CHECK(p[0] == "seat");
  CHECK(p[1] == "money");
  p = parse_interpretations("1. first: a seat\n2. second: money", words);
  CHECK(p[0] == "a seat");
  CHECK_THROWS_AS(parse_interpretations("I cannot help with that.", words), MalformedReply);
  CHECK_THROWS_AS(parse_interpretations("chair: seat", words), MalformedReply);
}

TEST_CASE("source descriptions feed the fingerprint") {
  CHECK(quantum_agent(QuantumAngles::tsirelson())->describe()["kind"] == "quantum");
  CHECK(lhv_agent(StrategyDistribution::point(3))->describe() != lhv_agent(StrategyDistribution::point(4))->describe());
  CHECK(signaling_agent({true, false})->describe() != signaling_agent({})->describe());
}
