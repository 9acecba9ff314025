#include <doctest.h>

#include <fstream>

#include "sbell/agents.hpp"
#include "sbell/error.hpp"
#include "sbell/runner.hpp"
#include "support.hpp"

using namespace sbell;
using testing::slurp;
using testing::TempDir;

namespace {

ExperimentConfig config_for(const TempDir& dir, std::size_t n, std::uint64_t seed = 11) {
  ExperimentConfig c;
  c.n_trials = n;
  c.seed = seed;
  c.bootstrap_resamples = 200;
  c.output_dir = dir.path();
  c.label = "t";
  return c;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Fails Bob's interpretation in (A',B') on every odd trial.
class FlakySource final : public AgentSource {
 public:
  std::unique_ptr<TrialAgents> begin_trial(const TrialStimulus& s, std::uint64_t seed) const override {
    struct Trial final : TrialAgents {
      std::unique_ptr<TrialAgents> inner;
      bool fail;
      ContextAgents context(Context c) override {
        ContextAgents a = inner->context(c);
        if (fail && c == Context::apbp) {
          struct Broken final : Agent {
            AgentResponse interpret(const AgentRequest&) override { throw TransportError("HTTP 500 after 3 attempt(s)"); }
          };
          a.bob = std::make_unique<Broken>();
        }
        return a;
      }
    };
    auto t = std::make_unique<Trial>();
    t->inner = base_->begin_trial(s, seed);
    t->fail = (seed >> 7) & 1;
    return t;
  }
  nlohmann::json describe() const override { return {{"kind", "flaky"}}; }

 private:
  std::unique_ptr<AgentSource> base_ = pr_box_agent();
};

}  // namespace

TEST_CASE("a run writes records, summary and series") {
  TempDir dir("run");
  const auto src = quantum_agent(QuantumAngles::tsirelson());
  const RunResult r = run_experiment(config_for(dir, 12), *src, KeywordClassifier::bundled());
  REQUIRE(r.summary);
  CHECK(r.summary->n_complete == 12);
  CHECK(r.summary->label == "t");
  const std::string records = slurp(dir / "records.jsonl");
  CHECK(count_lines(records) == 13);
  const auto header = nlohmann::json::parse(records.substr(0, records.find('\n')));
  CHECK(header["record"] == "header");
  CHECK(header["schema_version"] == kSchemaVersion);
  CHECK(header["fingerprint"].get<std::string>().size() == 16);
  CHECK(slurp(dir / "summary.json") == summary_text(*r.summary));
  const std::string series = slurp(dir / "series.tsv");
  CHECK(count_lines(series) == 13);
  CHECK(series.rfind("trial_index\ts\n", 0) == 0);
}

TEST_CASE("record and summary JSON round trip") {
  TempDir dir("roundtrip");
  const auto src = signaling_agent({});
  run_experiment(config_for(dir, 6), *src, KeywordClassifier::bundled());
  const auto file = read_record_file(dir / "records.jsonl");
  REQUIRE(file);
  CHECK(file->trials.size() == 6);
  for (const auto& t : file->trials) CHECK(trial_from_json(to_json(t)).outcomes() == t.outcomes());
  const auto text = slurp(dir / "summary.json");
  CHECK(summary_text(summary_from_json(nlohmann::json::parse(text))) == text);
  const auto again = summarize(file->trials, file->header.analysis, file->header.label);
  CHECK(summary_text(again) == text);
}

TEST_CASE("interrupted and resumed runs equal the uninterrupted run byte for byte") {
  TempDir whole("whole"), parts("parts");
  const auto src = quantum_agent(QuantumAngles::tsirelson());
  run_experiment(config_for(whole, 25), *src, KeywordClassifier::bundled());

  RunOptions stop;
  stop.stop_after = 9;
  const RunResult first = run_experiment(config_for(parts, 25), *src, KeywordClassifier::bundled(), stop);
  CHECK_FALSE(first.summary);
  CHECK(first.records.size() == 9);
  RunOptions resume;
  resume.resume = true;
  resume.stop_after = 7;
  run_experiment(config_for(parts, 25), *src, KeywordClassifier::bundled(), resume);
  resume.stop_after.reset();
  const RunResult done = run_experiment(config_for(parts, 25), *src, KeywordClassifier::bundled(), resume);
  CHECK(done.records.size() == 25);
  for (const char* f : {"records.jsonl", "summary.json", "series.tsv"}) CHECK(slurp(whole / f) == slurp(parts / f));
}

TEST_CASE("resume drops a torn final line") {
  TempDir whole("whole2"), torn("torn");
  const auto src = lhv_agent(StrategyDistribution::uniform());
  run_experiment(config_for(whole, 10), *src, KeywordClassifier::bundled());
  RunOptions stop;
  stop.stop_after = 6;
  run_experiment(config_for(torn, 10), *src, KeywordClassifier::bundled(), stop);
  const auto path = torn / "records.jsonl";
  const std::string full = slurp(path);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << full.substr(0, full.size() - 40);  // cut into the 6th trial line
  }
  const auto partial = read_record_file(path);
  REQUIRE(partial);
  CHECK(partial->dropped_partial_line);
  CHECK(partial->trials.size() == 5);
  RunOptions resume;
  resume.resume = true;
  run_experiment(config_for(torn, 10), *src, KeywordClassifier::bundled(), resume);
  CHECK(slurp(whole / "records.jsonl") == slurp(path));
}

TEST_CASE("resume refuses a different configuration") {
  TempDir dir("mismatch");
  const auto src = pr_box_agent();
  RunOptions stop;
  stop.stop_after = 2;
  run_experiment(config_for(dir, 5, 1), *src, KeywordClassifier::bundled(), stop);
  RunOptions resume;
  resume.resume = true;
  CHECK_THROWS_AS(run_experiment(config_for(dir, 5, 2), *src, KeywordClassifier::bundled(), resume), ConfigError);
  CHECK_THROWS_AS(run_experiment(config_for(dir, 5, 1), *signaling_agent({}), KeywordClassifier::bundled(), resume),
                  ConfigError);
  auto different_bootstrap = config_for(dir, 5, 1);
  different_bootstrap.bootstrap_resamples = 300;
  CHECK_THROWS_AS(run_experiment(different_bootstrap, *src, KeywordClassifier::bundled(), resume), ConfigError);
  CHECK_NOTHROW(run_experiment(config_for(dir, 5, 1), *src, KeywordClassifier::bundled(), resume));
}

TEST_CASE("resume on an empty or missing file starts fresh") {
  TempDir dir("empty");
  std::ofstream(dir / "records.jsonl").close();
  RunOptions resume;
  resume.resume = true;
  const auto r = run_experiment(config_for(dir, 3), *pr_box_agent(), KeywordClassifier::bundled(), resume);
  CHECK(r.records.size() == 3);
  CHECK(read_record_file(dir / "records.jsonl").has_value());
  CHECK_THROWS_AS(read_record_file(dir / "missing.jsonl"), DataError);

  TempDir fresh("missing");
  const auto f = run_experiment(config_for(fresh, 2), *pr_box_agent(), KeywordClassifier::bundled(), resume);
  CHECK(f.records.size() == 2);
}

TEST_CASE("corrupt record lines are reported with their line number") {
  TempDir dir("corrupt");
  run_experiment(config_for(dir, 4), *pr_box_agent(), KeywordClassifier::bundled());
  std::string text = slurp(dir / "records.jsonl");
  const auto second_nl = text.find('\n', text.find('\n') + 1);
  text.insert(second_nl + 1, "{not json}\n");
  std::ofstream(dir / "records.jsonl", std::ios::binary | std::ios::trunc) << text;
  try {
    read_record_file(dir / "records.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 3);
  }
  std::ofstream(dir / "records.jsonl", std::ios::binary | std::ios::trunc) << "{\"record\":\"trial\"}\n";
  CHECK_THROWS_AS(read_record_file(dir / "records.jsonl"), DataError);
}

TEST_CASE("concurrent execution persists the same records as sequential") {
  TempDir seq("seq"), par("par");
  const auto src = quantum_agent(QuantumAngles::tsirelson());
  run_experiment(config_for(seq, 40), *src, KeywordClassifier::bundled());
  auto c = config_for(par, 40);
  c.concurrency = 4;
  run_experiment(c, *src, KeywordClassifier::bundled());
  // The fingerprint covers the trial stream, not the worker count.
  CHECK(slurp(seq / "records.jsonl") == slurp(par / "records.jsonl"));
  CHECK(slurp(seq / "summary.json") == slurp(par / "summary.json"));
}

TEST_CASE("failed trials are kept, marked and excluded from statistics") {
  TempDir dir("flaky");
  FlakySource src;
  const RunResult r = run_experiment(config_for(dir, 20), src, KeywordClassifier::bundled());
  REQUIRE(r.summary);
  CHECK(r.summary->n_attempted == 20);
  CHECK(r.summary->n_failed > 0);
  CHECK(r.summary->n_complete + r.summary->n_failed == 20);
  CHECK(r.summary->s == 4.0);
  for (const auto& t : r.records) {
    if (t.status == TrialStatus::failed) {
      CHECK(t.failure_reason.find("HTTP 500") != std::string::npos);
      CHECK(t.contexts.size() == 4);
      CHECK_THROWS_AS(t.outcomes(), std::logic_error);
    }
  }
  CHECK(r.summary->running.size() == r.summary->n_complete);
}

TEST_CASE("summaries need at least one complete trial; CI needs two") {
  const auto one = run_trials([] {
    ExperimentConfig c;
    c.n_trials = 1;
    return c;
  }(), *pr_box_agent(), KeywordClassifier::bundled());
  const auto s = summarize(one, {});
  CHECK(s.running.size() == 1);
  CHECK_FALSE(s.ci);
  std::vector<TrialRecord> none = one;
  none[0].status = TrialStatus::failed;
  CHECK_THROWS_AS(summarize(none, {}), Error);
}

TEST_CASE("reclassification re-derives outcomes from stored interpretations") {
  const auto records = run_trials([] {
    ExperimentConfig c;
    c.n_trials = 8;
    c.seed = 3;
    return c;
  }(), *quantum_agent(QuantumAngles::tsirelson()), KeywordClassifier::bundled());
  const auto same = reclassify(records, KeywordClassifier::bundled());
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(to_json(same[i]) == to_json(records[i]));
  // A classifier that ignores every content word leaves nothing classifiable.
  std::set<std::string> everything;
  for (const auto& w : StimulusPools::bundled().lexicon)
    for (const auto& g : {w.meaning_alpha, w.meaning_beta})
      for (const auto& t : KeywordClassifier({}).content_tokens(g)) everything.insert(t);
  const auto blind = reclassify(records, KeywordClassifier(everything));
  for (const auto& t : blind) CHECK(t.status == TrialStatus::failed);
}

TEST_CASE("config validation") {
  ExperimentConfig c;
  c.n_trials = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.n_trials = 1;
  c.max_attempts = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.max_attempts = 3;
  c.ci_level = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
