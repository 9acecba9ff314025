// JSON encoding of trial records, summaries and the record file.

#include <fstream>
#include <sstream>

#include "sbell/error.hpp"
#include "sbell/runner.hpp"

namespace sbell {

using nlohmann::json;

namespace {

json outcome_json(const std::optional<OutcomeVector>& v) {
  if (!v) return nullptr;
  return json::array({v->word1, v->word2});
}

std::optional<OutcomeVector> outcome_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return OutcomeVector::make(j.at(0).get<int>(), j.at(1).get<int>());
}

json persona_json(const Persona& p) {
  return {{"name", p.name}, {"age", p.age}, {"location", p.location}, {"language", p.language}};
}

Persona persona_from(const json& j) {
  return {j.at("name").get<std::string>(), j.at("age").get<int>(), j.at("location").get<std::string>(),
          j.at("language").get<std::string>()};
}

json attempt_json(const AttemptRecord& a) {
  json j = {{"interpretations", a.interpretations},
            {"verdicts", {to_string(a.verdicts[0]), to_string(a.verdicts[1])}},
            {"rationales", a.rationales},
            {"provider", a.provider_id},
            {"model", a.model_id},
            {"latency_us", a.latency_us}};
  if (!a.raw_request.empty()) j["raw_request"] = a.raw_request;
  if (!a.raw_response.empty()) j["raw_response"] = a.raw_response;
  return j;
}

AttemptRecord attempt_from(const json& j) {
  AttemptRecord a;
  a.interpretations = j.at("interpretations").get<std::array<std::string, 2>>();
  a.verdicts = {verdict_from_string(j.at("verdicts").at(0).get<std::string>()),
                verdict_from_string(j.at("verdicts").at(1).get<std::string>())};
  a.rationales = j.at("rationales").get<std::array<std::string, 2>>();
  a.provider_id = j.at("provider").get<std::string>();
  a.model_id = j.at("model").get<std::string>();
  a.latency_us = j.at("latency_us").get<std::int64_t>();
  a.raw_request = j.value("raw_request", "");
  a.raw_response = j.value("raw_response", "");
  return a;
}

json side_json(const SideRecord& s) {
  json attempts = json::array();
  for (const AttemptRecord& a : s.attempts) attempts.push_back(attempt_json(a));
  return {{"setting", s.setting.name()}, {"outcome", outcome_json(s.outcome)}, {"attempts", attempts}};
}

SideRecord side_from(const json& j) {
  SideRecord s;
  s.setting = SettingLabel::from_name(j.at("setting").get<std::string>());
  s.outcome = outcome_from(j.at("outcome"));
  for (const json& a : j.at("attempts")) s.attempts.push_back(attempt_from(a));
  return s;
}

Context context_from_name(const std::string& name) {
  for (Context c : kContexts)
    if (context_name(c) == name) return c;
  throw std::invalid_argument("unknown context '" + name + "'");
}

json analysis_json(const AnalysisParams& a) {
  return {{"seed", a.seed}, {"bootstrap_resamples", a.bootstrap_resamples}, {"ci_level", a.ci_level}};
}

AnalysisParams analysis_from(const json& j) {
  return {j.at("seed").get<std::uint64_t>(), j.at("bootstrap_resamples").get<std::size_t>(),
          j.at("ci_level").get<double>()};
}

}  // namespace

TrialOutcomes TrialRecord::outcomes() const {
  if (status != TrialStatus::complete || contexts.size() != 4)
    throw std::logic_error("outcomes requested from an incomplete trial");
  TrialOutcomes out;
  for (const ContextRecord& c : contexts) {
    if (!c.alice.outcome || !c.bob.outcome) throw std::logic_error("complete trial lacks an outcome");
    out[static_cast<std::size_t>(c.context)] = {*c.alice.outcome, *c.bob.outcome};
  }
  return out;
}

json to_json(const TrialRecord& r) {
  json settings = json::object();
  for (const SettingPrompt& p : r.stimulus.settings) settings[p.label.name()] = p.priming_text;
  json words = json::array();
  for (const AmbiguousWord& w : r.stimulus.word_pair)
    words.push_back({{"surface", w.surface}, {"alpha", w.meaning_alpha}, {"beta", w.meaning_beta}});
  json contexts = json::array();
  for (const ContextRecord& c : r.contexts)
    contexts.push_back({{"context", context_name(c.context)}, {"alice", side_json(c.alice)}, {"bob", side_json(c.bob)}});

  json j = {{"schema_version", kSchemaVersion},
            {"record", "trial"},
            {"trial_index", r.trial_index},
            {"status", r.status == TrialStatus::complete ? "complete" : "failed"},
            {"personas", {{"alice", persona_json(r.stimulus.alice)}, {"bob", persona_json(r.stimulus.bob)}}},
            {"stimulus",
             {{"words", words},
              {"template", r.stimulus.sentence_template.pattern()},
              {"sentence", r.stimulus.rendered_sentence},
              {"settings", settings}}},
            {"contexts", contexts}};
  if (!r.failure_reason.empty()) j["failure_reason"] = r.failure_reason;
  if (r.started_at) j["started_at"] = *r.started_at;
  if (r.finished_at) j["finished_at"] = *r.finished_at;
  return j;
}

TrialRecord trial_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) throw std::invalid_argument("unsupported schema_version");
  if (j.at("record").get<std::string>() != "trial") throw std::invalid_argument("not a trial record");
  const json& st = j.at("stimulus");
  const json& words = st.at("words");
  std::array<AmbiguousWord, 2> pair;
  for (std::size_t i = 0; i < 2; ++i)
    pair[i] = {words.at(i).at("surface").get<std::string>(), words.at(i).at("alpha").get<std::string>(),
               words.at(i).at("beta").get<std::string>()};
  std::array<SettingPrompt, 4> settings;
  for (const SettingLabel& l : kSettings)
    settings[l.index()] = {l, st.at("settings").at(l.name()).get<std::string>()};

  TrialRecord r{
      j.at("trial_index").get<std::size_t>(),
      std::nullopt,
      std::nullopt,
      TrialStimulus{pair, SentenceTemplate(st.at("template").get<std::string>()),
                    st.at("sentence").get<std::string>(), settings,
                    persona_from(j.at("personas").at("alice")), persona_from(j.at("personas").at("bob"))},
      {},
      TrialStatus::failed,
      j.value("failure_reason", ""),
  };
  const std::string status = j.at("status").get<std::string>();
  if (status == "complete") {
    r.status = TrialStatus::complete;
  } else if (status != "failed") {
    throw std::invalid_argument("unknown trial status '" + status + "'");
  }
  if (j.contains("started_at")) r.started_at = j["started_at"].get<std::string>();
  if (j.contains("finished_at")) r.finished_at = j["finished_at"].get<std::string>();
  for (const json& c : j.at("contexts"))
    r.contexts.push_back({context_from_name(c.at("context").get<std::string>()), side_from(c.at("alice")),
                          side_from(c.at("bob"))});
  if (r.status == TrialStatus::complete) (void)r.outcomes();  // validates shape
  return r;
}

json to_json(const ExperimentSummary& s) {
  json marginals = json::array();
  for (const MarginalMean& m : s.table.marginals)
    marginals.push_back({{"setting", m.setting.name()},
                         {"partner", m.partner == Variant::primed ? "primed" : "unprimed"},
                         {"mean", m.mean}});
  json deltas = json::object();
  for (const SettingLabel& l : kSettings) deltas[l.name()] = s.signaling.deltas[l.index()];
  json running = json::array();
  for (const RunningPoint& p : s.running) running.push_back({p.trial_index, p.s});

  json j = {{"schema_version", kSchemaVersion},
            {"label", s.label},
            {"n_attempted", s.n_attempted},
            {"n_complete", s.n_complete},
            {"n_failed", s.n_failed},
            {"e", {{"AB", s.table.e_ab}, {"AB'", s.table.e_abp}, {"A'B", s.table.e_apb}, {"A'B'", s.table.e_apbp}}},
            {"marginals", marginals},
            {"s", s.s},
            {"abs_s", std::abs(s.s)},
            {"analysis", analysis_json(s.analysis)},
            {"signaling",
             {{"deltas", deltas},
              {"delta_total", s.signaling.delta_total},
              {"s_odd", s.signaling.s_odd},
              {"contextual_cbd", s.signaling.contextual_cbd}}},
            {"bounds",
             {{"classical", kClassicalBound},
              {"quantum", kQuantumBound},
              {"algebraic", kAlgebraicBound},
              {"exceeds_classical", std::abs(s.s) > kClassicalBound},
              {"exceeds_quantum", std::abs(s.s) > kQuantumBound}}},
            {"running_s", running}};
  j["ci"] = s.ci ? json{{"level", s.analysis.ci_level}, {"low", s.ci->low}, {"high", s.ci->high}} : json(nullptr);
  return j;
}

ExperimentSummary summary_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion) throw std::invalid_argument("unsupported schema_version");
  ExperimentSummary s;
  s.label = j.value("label", "");
  s.n_attempted = j.at("n_attempted").get<std::size_t>();
  s.n_complete = j.at("n_complete").get<std::size_t>();
  s.n_failed = j.at("n_failed").get<std::size_t>();
  const json& e = j.at("e");
  s.table.e_ab = e.at("AB").get<double>();
  s.table.e_abp = e.at("AB'").get<double>();
  s.table.e_apb = e.at("A'B").get<double>();
  s.table.e_apbp = e.at("A'B'").get<double>();
  s.table.n_trials = s.n_complete;
  for (const json& m : j.at("marginals"))
    s.table.marginals.push_back({SettingLabel::from_name(m.at("setting").get<std::string>()),
                                 m.at("partner").get<std::string>() == "primed" ? Variant::primed : Variant::unprimed,
                                 m.at("mean").get<std::array<double, 2>>()});
  s.s = j.at("s").get<double>();
  s.analysis = analysis_from(j.at("analysis"));
  if (!j.at("ci").is_null()) s.ci = Interval{j["ci"].at("low").get<double>(), j["ci"].at("high").get<double>()};
  const json& sig = j.at("signaling");
  for (const SettingLabel& l : kSettings) s.signaling.deltas[l.index()] = sig.at("deltas").at(l.name()).get<double>();
  s.signaling.delta_total = sig.at("delta_total").get<double>();
  s.signaling.s_odd = sig.at("s_odd").get<double>();
  s.signaling.contextual_cbd = sig.at("contextual_cbd").get<bool>();
  for (const json& p : j.at("running_s")) s.running.push_back({p.at(0).get<std::size_t>(), p.at(1).get<double>()});
  return s;
}

std::string summary_text(const ExperimentSummary& s) { return to_json(s).dump(2) + "\n"; }

std::string series_text(const ExperimentSummary& s) {
  std::ostringstream out;
  out.precision(17);
  out << "trial_index\ts\n";
  for (const RunningPoint& p : s.running) out << p.trial_index << '\t' << p.s << '\n';
  return out.str();
}

std::optional<RecordFile> read_record_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const std::string source = path.string();
  RecordFile file;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) {
      // No terminating newline: an append interrupted mid-write.
      file.dropped_partial_line = true;
      break;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      file.valid_bytes = pos;
      continue;
    }
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("line is not valid JSON", source, line_no);
    try {
      if (!have_header) {
        if (j.at("record").get<std::string>() != "header") throw std::invalid_argument("first record must be the header");
        file.header.schema_version = j.at("schema_version").get<int>();
        if (file.header.schema_version != kSchemaVersion) throw std::invalid_argument("unsupported schema_version");
        file.header.fingerprint = j.at("fingerprint").get<std::string>();
        file.header.run = j.at("run");
        file.header.analysis = analysis_from(j.at("analysis"));
        file.header.label = j.value("label", "");
        have_header = true;
      } else {
        TrialRecord r = trial_from_json(j);
        if (r.trial_index != file.trials.size())
          throw std::invalid_argument("trial_index " + std::to_string(r.trial_index) + " out of sequence (expected " +
                                      std::to_string(file.trials.size()) + ")");
        file.trials.push_back(std::move(r));
      }
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(e.what(), source, line_no);
    }
    file.valid_bytes = pos;
  }
  if (!have_header) return std::nullopt;
  return file;
}

}  // namespace sbell
