#pragma once

// JSON run configuration for live experiments. Example:
//
// {
//   "trials": 50, "seed": 7, "out": "runs/exp7", "label": "7",
//   "data_dir": "data",                       // optional, relative to this file
//   "max_attempts": 3, "concurrency": 4,
//   "pair_models": "independent",             // or "shared"
//   "reinterpret_model": "same",              // or "resample"
//   "bootstrap": {"resamples": 1000, "level": 0.95},
//   "persona": {"age_min": 25, "age_max": 70, "locations": ["Bloomington, IN"]},
//   "transport": {"max_attempts": 3, "base_delay_ms": 500},
//   "providers": [{"name": "openai", "base_url": "https://api.openai.com/v1",
//                  "api_key_env": "OPENAI_API_KEY", "timeout_s": 60}],
//   "pools": {"default": [{"provider": "openai", "model": "gpt-4o-mini"}]},
//   "pool": "default",
//   "instruction": "...",                     // optional agent task text
//   "classifier": {"backend": "keyword"}      // or {"backend": "remote", "provider": ..., "model": ...}
// }
//
// Credentials never appear in the file, only the names of the environment
// variables that hold them.

#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sbell/agents.hpp"
#include "sbell/classifier.hpp"
#include "sbell/remote.hpp"
#include "sbell/runner.hpp"

namespace sbell {

struct ClassifierSettings {
  std::string backend = "keyword";
  std::string provider;
  std::string model;
  std::string instruction = RemoteClassifier::default_instruction();
};

struct RunSettings {
  ExperimentConfig experiment;
  std::vector<ProviderEndpoint> providers;
  std::map<std::string, std::vector<ModelEntry>> pools;
  std::string pool = "default";
  PairModels pair_models = PairModels::independent;
  ReinterpretModel reinterpret_model = ReinterpretModel::same;
  RetryPolicy transport_retry;
  std::string instruction = RemoteAgentOptions::default_instruction();
  ClassifierSettings classifier;
};

/// Throws ConfigError (bad values) or DataError (unreadable / unparsable file).
RunSettings load_run_settings(const std::filesystem::path& path);
RunSettings parse_run_settings(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Resolves credentials for the selected pool; throws ConfigError when one is missing.
std::unique_ptr<AgentSource> build_remote_agents(const RunSettings& settings,
                                                 std::shared_ptr<const ChatTransport> transport);

/// Keyword or remote backend per settings.classifier.
std::unique_ptr<ClassifierBackend> build_classifier(const RunSettings& settings,
                                                    std::shared_ptr<const ChatTransport> transport);

}  // namespace sbell
