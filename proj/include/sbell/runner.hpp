#pragma once

// Experiment orchestration: the trial loop, append-only persistence, resume
// and summary statistics.
//
// Output directory layout:
//   records.jsonl  header line, then one trial record per line
//   summary.json   ExperimentSummary
//   series.tsv     trial_index <TAB> running S (one row per complete trial)

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sbell/agents.hpp"
#include "sbell/chsh_stats.hpp"
#include "sbell/classifier.hpp"
#include "sbell/stimuli.hpp"

namespace sbell {

inline constexpr int kSchemaVersion = 1;

struct AnalysisParams {
  std::uint64_t seed = 0;
  std::size_t bootstrap_resamples = 1000;
  double ci_level = 0.95;
};

struct ExperimentConfig {
  std::size_t n_trials = 1;
  std::uint64_t seed = 0;
  StimulusPools pools = StimulusPools::bundled();
  int max_attempts = 3;
  std::size_t concurrency = 1;
  std::size_t bootstrap_resamples = 1000;
  double ci_level = 0.95;
  /// Wall-clock timestamps in records; off keeps seeded runs bit-identical.
  bool record_timestamps = false;
  std::filesystem::path output_dir;
  /// Free-form name carried into the summary (e.g. the experiment number).
  std::string label;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
  AnalysisParams analysis() const { return {seed, bootstrap_resamples, ci_level}; }
};

// ---------------------------------------------------------------------------
// Records

struct AttemptRecord {
  std::array<std::string, 2> interpretations;
  std::array<Verdict, 2> verdicts{Verdict::unclear, Verdict::unclear};
  std::array<std::string, 2> rationales;
  std::string provider_id;
  std::string model_id;
  std::int64_t latency_us = 0;
  std::string raw_request;
  std::string raw_response;
};

struct SideRecord {
  SettingLabel setting{Party::alice, Variant::unprimed};
  std::vector<AttemptRecord> attempts;
  std::optional<OutcomeVector> outcome;
};

struct ContextRecord {
  Context context = Context::ab;
  SideRecord alice;
  SideRecord bob;
};

enum class TrialStatus { complete, failed };

struct TrialRecord {
  std::size_t trial_index = 0;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;
  TrialStimulus stimulus;
  /// All four contexts when complete; a failed trial stops at the context that failed.
  std::vector<ContextRecord> contexts;
  TrialStatus status = TrialStatus::failed;
  std::string failure_reason;

  /// Outcomes of a complete trial; throws std::logic_error on a failed one.
  TrialOutcomes outcomes() const;
};

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Summary

struct ExperimentSummary {
  std::string label;
  std::size_t n_attempted = 0;
  std::size_t n_complete = 0;
  std::size_t n_failed = 0;
  CorrelationTable table;
  double s = 0;
  std::optional<Interval> ci;  // absent with fewer than 2 complete trials
  AnalysisParams analysis;
  SignalingReport signaling;
  std::vector<RunningPoint> running;
};

inline constexpr double kClassicalBound = 2.0;
inline constexpr double kQuantumBound = 2.8284271247461903;  // 2√2
inline constexpr double kAlgebraicBound = 4.0;

nlohmann::json to_json(const ExperimentSummary& s);
ExperimentSummary summary_from_json(const nlohmann::json& j);
/// Canonical text of summary.json.
std::string summary_text(const ExperimentSummary& s);
/// Canonical text of series.tsv.
std::string series_text(const ExperimentSummary& s);

/// Statistics over the complete records; throws Error when none is complete.
ExperimentSummary summarize(const std::vector<TrialRecord>& records, const AnalysisParams& params,
                            const std::string& label = {});

/// Re-derives verdicts and outcomes from the persisted interpretations with
/// another backend. Each context takes the first attempt whose two
/// interpretations both classify as alpha or beta; none fails the trial.
std::vector<TrialRecord> reclassify(std::vector<TrialRecord> records, const ClassifierBackend& backend);

// ---------------------------------------------------------------------------
// Record file

struct RecordHeader {
  int schema_version = kSchemaVersion;
  std::string fingerprint;
  nlohmann::json run;  // description the fingerprint is computed from
  AnalysisParams analysis;
  std::string label;
};

struct RecordFile {
  RecordHeader header;
  std::vector<TrialRecord> trials;
  /// Byte offset just past the last complete line.
  std::uintmax_t valid_bytes = 0;
  /// True when a final line without newline was dropped.
  bool dropped_partial_line = false;
};

/// Parses a record file. A trailing line without '\n' is treated as an
/// interrupted write and dropped; any other bad line throws DataError with its
/// line number. An empty file yields nullopt.
std::optional<RecordFile> read_record_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Running

/// Description of everything that determines the trial stream.
nlohmann::json run_description(const ExperimentConfig& config, const AgentSource& agents,
                               const ClassifierBackend& classifier);
std::string fingerprint(const nlohmann::json& description);

/// Executes one trial. Pure function of (config, index) for simulated agents.
TrialRecord run_trial(const ExperimentConfig& config, std::size_t trial_index, const AgentSource& agents,
                      const ClassifierBackend& classifier);

struct RunOptions {
  bool resume = false;
  /// Called after each trial is persisted, with (persisted so far, target).
  std::function<void(std::size_t, std::size_t)> progress;
  /// Stop after persisting this many trials in this invocation (for interruption tests).
  std::optional<std::size_t> stop_after;
};

struct RunResult {
  std::vector<TrialRecord> records;
  std::optional<ExperimentSummary> summary;  // absent only when stopped early
};

/// Runs (or resumes) an experiment, writing records.jsonl, summary.json and
/// series.tsv into config.output_dir. Throws ConfigError on a resume
/// fingerprint mismatch, DataError on a corrupt record file, Error when every
/// trial failed.
RunResult run_experiment(const ExperimentConfig& config, const AgentSource& agents,
                         const ClassifierBackend& classifier, const RunOptions& options = {});

/// In-memory variant: no files, no concurrency. Used by the acceptance checks.
std::vector<TrialRecord> run_trials(const ExperimentConfig& config, const AgentSource& agents,
                                    const ClassifierBackend& classifier);

/// Outcomes of the complete trials in order.
std::vector<TrialOutcomes> complete_outcomes(const std::vector<TrialRecord>& records);

}  // namespace sbell
