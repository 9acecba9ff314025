#include "sbell/runner.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <thread>

#include "sbell/error.hpp"

namespace sbell {

using nlohmann::json;

namespace {

constexpr std::uint64_t kBootstrapStream = 0xb0075742ULL;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(ms));
  return buf;
}

AttemptRecord attempt_record(InterpretationAttempt&& a) {
  AttemptRecord r;
  r.interpretations = {std::move(a.response.interpretation_word1), std::move(a.response.interpretation_word2)};
  r.verdicts = {a.classifications[0].verdict, a.classifications[1].verdict};
  r.rationales = {std::move(a.classifications[0].rationale), std::move(a.classifications[1].rationale)};
  r.provider_id = std::move(a.response.provider_id);
  r.model_id = std::move(a.response.model_id);
  r.latency_us = a.response.latency.count();
  r.raw_request = std::move(a.response.raw_request);
  r.raw_response = std::move(a.response.raw_response);
  return r;
}

json header_json(const RecordHeader& h) {
  return {{"schema_version", h.schema_version},
          {"record", "header"},
          {"fingerprint", h.fingerprint},
          {"label", h.label},
          {"analysis",
           {{"seed", h.analysis.seed},
            {"bootstrap_resamples", h.analysis.bootstrap_resamples},
            {"ci_level", h.analysis.ci_level}}},
          {"run", h.run}};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Error("cannot write " + path.string());
}

json pools_json(const StimulusPools& p) {
  json lexicon = json::array();
  for (const AmbiguousWord& w : p.lexicon) lexicon.push_back({w.surface, w.meaning_alpha, w.meaning_beta});
  json templates = json::array();
  for (const SentenceTemplate& t : p.templates) templates.push_back(t.pattern());
  return {{"lexicon", lexicon},
          {"templates", templates},
          {"prompts", {{"alice", p.settings.alice}, {"bob", p.settings.bob}}},
          {"personas",
           {{"locations", p.personas.locations},
            {"age_min", p.personas.age_min},
            {"age_max", p.personas.age_max},
            {"language", p.personas.language}}}};
}

// Re-derives one side's verdicts; returns false when no attempt is usable.
bool reclassify_side(SideRecord& side, const std::array<AmbiguousWord, 2>& words, const ClassifierBackend& backend) {
  side.outcome.reset();
  for (AttemptRecord& a : side.attempts) {
    for (std::size_t w = 0; w < 2; ++w) {
      if (a.interpretations[w].find_first_not_of(" \t\r\n") == std::string::npos) {
        a.verdicts[w] = Verdict::out_of_scope;
        a.rationales[w] = "empty interpretation";
        continue;
      }
      Classification c = backend.classify(a.interpretations[w], words[w]);
      a.verdicts[w] = c.verdict;
      a.rationales[w] = std::move(c.rationale);
    }
    const auto v1 = outcome_value(a.verdicts[0]);
    const auto v2 = outcome_value(a.verdicts[1]);
    if (v1 && v2 && !side.outcome) side.outcome = OutcomeVector::make(*v1, *v2);
  }
  return side.outcome.has_value();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (bootstrap_resamples < 100) throw ConfigError("bootstrap resamples must be >= 100");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw ConfigError("ci level must be in (0, 1)");
  if (pools.lexicon.size() < 2) throw ConfigError("lexicon needs at least 2 words");
  if (pools.templates.empty()) throw ConfigError("no sentence templates");
  if (pools.settings.alice.size() < 2 || pools.settings.bob.size() < 2)
    throw ConfigError("need at least 2 setting prompts per party");
  if (pools.personas.locations.empty()) throw ConfigError("no persona locations");
  if (pools.personas.age_max < pools.personas.age_min) throw ConfigError("empty persona age range");
}

std::vector<TrialOutcomes> complete_outcomes(const std::vector<TrialRecord>& records) {
  std::vector<TrialOutcomes> out;
  out.reserve(records.size());
  for (const TrialRecord& r : records)
    if (r.status == TrialStatus::complete) out.push_back(r.outcomes());
  return out;
}

ExperimentSummary summarize(const std::vector<TrialRecord>& records, const AnalysisParams& params,
                            const std::string& label) {
  const std::vector<TrialOutcomes> trials = complete_outcomes(records);
  if (trials.empty()) throw Error("no complete trials to summarize (" + std::to_string(records.size()) + " attempted)");
  ExperimentSummary s;
  s.label = label;
  s.n_attempted = records.size();
  s.n_complete = trials.size();
  s.n_failed = records.size() - trials.size();
  s.table = correlation_table(trials);
  s.s = chsh_s(s.table);
  s.analysis = params;
  if (trials.size() >= 2) {
    Rng rng(derive_seed(params.seed, kBootstrapStream));
    s.ci = bootstrap_ci(trials, params.bootstrap_resamples, params.ci_level, rng);
  }
  s.signaling = signaling_report(s.table);
  s.running = running_s(trials);
  return s;
}

std::vector<TrialRecord> reclassify(std::vector<TrialRecord> records, const ClassifierBackend& backend) {
  for (TrialRecord& r : records) {
    if (r.contexts.size() != 4) continue;  // failed before every context ran
    bool ok = true;
    for (ContextRecord& c : r.contexts) {
      ok = reclassify_side(c.alice, r.stimulus.word_pair, backend) && ok;
      ok = reclassify_side(c.bob, r.stimulus.word_pair, backend) && ok;
    }
    r.status = ok ? TrialStatus::complete : TrialStatus::failed;
    r.failure_reason = ok ? "" : "reclassification: no attempt classified both words";
  }
  return records;
}

json run_description(const ExperimentConfig& config, const AgentSource& agents, const ClassifierBackend& classifier) {
  return {{"seed", config.seed},
          {"max_attempts", config.max_attempts},
          {"agents", agents.describe()},
          {"classifier", classifier.describe()},
          {"pools", pools_json(config.pools)},
          {"analysis",
           {{"bootstrap_resamples", config.bootstrap_resamples}, {"ci_level", config.ci_level}}}};
}

std::string fingerprint(const json& description) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : description.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TrialRecord run_trial(const ExperimentConfig& config, std::size_t trial_index, const AgentSource& agents,
                      const ClassifierBackend& classifier) {
  const std::uint64_t trial_seed = derive_seed(config.seed, trial_index);
  Rng rng(trial_seed);
  TrialRecord rec;
  rec.trial_index = trial_index;
  if (config.record_timestamps) rec.started_at = utc_now();
  rec.stimulus = draw_stimulus(config.pools, rng);
  const auto trial = agents.begin_trial(rec.stimulus, derive_seed(trial_seed, 1));

  auto fail = [&](std::string reason) {
    rec.status = TrialStatus::failed;
    rec.failure_reason = std::move(reason);
    if (config.record_timestamps) rec.finished_at = utc_now();
    return rec;
  };

  for (Context c : kContexts) {
    ContextAgents pair = trial->context(c);
    ContextRecord& cr = rec.contexts.emplace_back();
    cr.context = c;
    for (Party party : {Party::alice, Party::bob}) {
      SideRecord& side = party == Party::alice ? cr.alice : cr.bob;
      Agent& agent = party == Party::alice ? *pair.alice : *pair.bob;
      side.setting = {party, party == Party::alice ? alice_variant(c) : bob_variant(c)};
      const AgentRequest request = make_request(rec.stimulus, side.setting);
      RetryOutcome outcome;
      try {
        outcome = classify_with_retry(agent, request, rec.stimulus.word_pair, classifier, config.max_attempts);
      } catch (const TransportError& e) {
        return fail(context_name(c) + " " + side.setting.name() + ": " + e.what());
      } catch (const MalformedReply& e) {
        return fail(context_name(c) + " " + side.setting.name() + ": malformed reply: " + e.what());
      }
      for (InterpretationAttempt& a : outcome.attempts) side.attempts.push_back(attempt_record(std::move(a)));
      side.outcome = outcome.outcome;
      if (!side.outcome) {
        return fail(context_name(c) + " " + side.setting.name() + ": no clear interpretation after " +
                    std::to_string(side.attempts.size()) + " attempt(s)");
      }
    }
  }
  rec.status = TrialStatus::complete;
  if (config.record_timestamps) rec.finished_at = utc_now();
  return rec;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& config, const AgentSource& agents,
                                    const ClassifierBackend& classifier) {
  config.validate();
  std::vector<TrialRecord> out;
  out.reserve(config.n_trials);
  for (std::size_t i = 0; i < config.n_trials; ++i) out.push_back(run_trial(config, i, agents, classifier));
  return out;
}

RunResult run_experiment(const ExperimentConfig& config, const AgentSource& agents,
                         const ClassifierBackend& classifier, const RunOptions& options) {
  config.validate();
  if (config.output_dir.empty()) throw ConfigError("no output directory");
  std::filesystem::create_directories(config.output_dir);
  const auto records_path = config.output_dir / "records.jsonl";

  RecordHeader header;
  header.run = run_description(config, agents, classifier);
  header.fingerprint = fingerprint(header.run);
  header.analysis = config.analysis();
  header.label = config.label;

  RunResult result;
  bool fresh = true;
  if (options.resume && std::filesystem::exists(records_path)) {
    if (auto existing = read_record_file(records_path)) {
      if (existing->header.fingerprint != header.fingerprint)
        throw ConfigError("cannot resume " + records_path.string() + ": configuration fingerprint " +
                          existing->header.fingerprint + " does not match " + header.fingerprint);
      if (existing->dropped_partial_line) std::filesystem::resize_file(records_path, existing->valid_bytes);
      result.records = std::move(existing->trials);
      fresh = false;
    }
  }

  std::ofstream out(records_path, std::ios::binary | (fresh ? std::ios::trunc : std::ios::app));
  if (!out) throw Error("cannot open " + records_path.string() + " for writing");
  auto append = [&](const json& j) {
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw Error("write to " + records_path.string() + " failed");
  };
  if (fresh) append(header_json(header));

  const std::size_t start = std::min(result.records.size(), config.n_trials);
  std::size_t end = config.n_trials;
  if (options.stop_after) end = std::min(end, start + *options.stop_after);

  auto persist = [&](TrialRecord&& rec) {
    append(to_json(rec));
    result.records.push_back(std::move(rec));
    if (options.progress) options.progress(result.records.size(), config.n_trials);
  };

  if (config.concurrency <= 1 || end - start <= 1) {
    for (std::size_t i = start; i < end; ++i) persist(run_trial(config, i, agents, classifier));
  } else {
    // Workers run trials out of order; this thread is the single writer and
    // persists them strictly by index.
    const std::size_t count = end - start;
    std::vector<std::optional<TrialRecord>> slots(count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex mu;
    std::condition_variable cv;
    std::exception_ptr error;

    auto worker = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= count || abort.load()) return;
        try {
          TrialRecord rec = run_trial(config, start + k, agents, classifier);
          std::lock_guard lock(mu);
          slots[k] = std::move(rec);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          abort = true;
        }
        cv.notify_all();
      }
    };
    std::vector<std::jthread> pool;
    const std::size_t n_workers = std::min(config.concurrency, count);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);

    try {
      for (std::size_t k = 0; k < count; ++k) {
        std::optional<TrialRecord> rec;
        {
          std::unique_lock lock(mu);
          cv.wait(lock, [&] { return slots[k].has_value() || error; });
          if (!slots[k]) std::rethrow_exception(error);
          rec = std::move(slots[k]);
          slots[k].reset();
        }
        persist(std::move(*rec));
      }
    } catch (...) {
      abort = true;
      throw;
    }
  }
  out.close();

  if (result.records.size() < config.n_trials) return result;

  result.summary = summarize(result.records, config.analysis(), config.label);
  write_file(config.output_dir / "summary.json", summary_text(*result.summary));
  write_file(config.output_dir / "series.tsv", series_text(*result.summary));
  return result;
}

}  // namespace sbell
