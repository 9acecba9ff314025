#include "sbell/config.hpp"

#include "sbell/error.hpp"

namespace sbell {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

const ProviderEndpoint& find_provider(const std::vector<ProviderEndpoint>& providers, const std::string& name) {
  for (const ProviderEndpoint& p : providers)
    if (p.name == name) return p;
  throw ConfigError("unknown provider '" + name + "'");
}

}  // namespace

RunSettings parse_run_settings(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunSettings s;
  ExperimentConfig& e = s.experiment;

  if (j.contains("data_dir")) {
    std::filesystem::path dir = get_or<std::string>(j, "data_dir", "");
    if (dir.is_relative()) dir = base_dir / dir;
    if (!std::filesystem::is_directory(dir)) throw ConfigError("data_dir " + dir.string() + " is not a directory");
    e.pools = StimulusPools::load(dir);
  }
  const auto trials = get_or<long long>(j, "trials", 1);
  if (trials < 1) throw ConfigError("trials must be >= 1");
  e.n_trials = static_cast<std::size_t>(trials);
  e.seed = get_or<std::uint64_t>(j, "seed", 0);
  e.max_attempts = get_or<int>(j, "max_attempts", 3);
  const auto concurrency = get_or<long long>(j, "concurrency", 1);
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  e.concurrency = static_cast<std::size_t>(concurrency);
  e.label = get_or<std::string>(j, "label", "");
  e.record_timestamps = get_or<bool>(j, "record_timestamps", true);
  if (j.contains("out")) {
    std::filesystem::path out = get_or<std::string>(j, "out", "");
    e.output_dir = out.is_relative() ? base_dir / out : out;
  }
  if (j.contains("bootstrap")) {
    const json& b = j["bootstrap"];
    e.bootstrap_resamples = get_or<std::size_t>(b, "resamples", e.bootstrap_resamples);
    e.ci_level = get_or<double>(b, "level", e.ci_level);
  }
  if (j.contains("persona")) {
    const json& p = j["persona"];
    e.pools.personas.age_min = get_or<int>(p, "age_min", e.pools.personas.age_min);
    e.pools.personas.age_max = get_or<int>(p, "age_max", e.pools.personas.age_max);
    e.pools.personas.language = get_or<std::string>(p, "language", e.pools.personas.language);
    e.pools.personas.locations = get_or<std::vector<std::string>>(p, "locations", e.pools.personas.locations);
  }

  const std::string pair = get_or<std::string>(j, "pair_models", "independent");
  if (pair == "shared") {
    s.pair_models = PairModels::shared;
  } else if (pair != "independent") {
    throw ConfigError("pair_models must be 'independent' or 'shared'");
  }
  const std::string re = get_or<std::string>(j, "reinterpret_model", "same");
  if (re == "resample") {
    s.reinterpret_model = ReinterpretModel::resample;
  } else if (re != "same") {
    throw ConfigError("reinterpret_model must be 'same' or 'resample'");
  }

  if (j.contains("transport")) {
    const json& t = j["transport"];
    s.transport_retry.max_attempts = get_or<int>(t, "max_attempts", s.transport_retry.max_attempts);
    s.transport_retry.base_delay = std::chrono::milliseconds(get_or<long long>(t, "base_delay_ms", 500));
    if (s.transport_retry.max_attempts < 1) throw ConfigError("transport.max_attempts must be >= 1");
  }

  for (const json& p : j.value("providers", json::array())) {
    ProviderEndpoint ep;
    ep.name = get_or<std::string>(p, "name", "");
    ep.base_url = get_or<std::string>(p, "base_url", "");
    ep.api_key_env = get_or<std::string>(p, "api_key_env", "");
    ep.timeout = std::chrono::milliseconds(static_cast<long long>(get_or<double>(p, "timeout_s", 60.0) * 1000));
    if (ep.name.empty() || ep.base_url.empty()) throw ConfigError("provider needs 'name' and 'base_url'");
    if (p.contains("api_key")) throw ConfigError("provider '" + ep.name + "': put credentials in the environment (api_key_env), not in the config file");
    s.providers.push_back(std::move(ep));
  }
  if (j.contains("pools")) {
    for (const auto& [name, entries] : j["pools"].items()) {
      auto& pool = s.pools[name];
      for (const json& m : entries) pool.push_back({get_or<std::string>(m, "provider", ""), get_or<std::string>(m, "model", "")});
    }
  }
  s.pool = get_or<std::string>(j, "pool", s.pool);
  s.instruction = get_or<std::string>(j, "instruction", s.instruction);

  if (j.contains("classifier")) {
    const json& c = j["classifier"];
    s.classifier.backend = get_or<std::string>(c, "backend", "keyword");
    s.classifier.provider = get_or<std::string>(c, "provider", "");
    s.classifier.model = get_or<std::string>(c, "model", "");
    s.classifier.instruction = get_or<std::string>(c, "instruction", s.classifier.instruction);
  }
  if (s.classifier.backend != "keyword" && s.classifier.backend != "remote")
    throw ConfigError("classifier.backend must be 'keyword' or 'remote'");

  e.validate();
  return s;
}

RunSettings load_run_settings(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(path.string() + ": " + err.what());
  }
  return parse_run_settings(j, path.parent_path());
}

std::unique_ptr<AgentSource> build_remote_agents(const RunSettings& settings,
                                                 std::shared_ptr<const ChatTransport> transport) {
  const auto it = settings.pools.find(settings.pool);
  if (it == settings.pools.end()) throw ConfigError("model pool '" + settings.pool + "' is not defined");
  std::vector<ProviderEndpoint> used;
  for (const ModelEntry& m : it->second) {
    const ProviderEndpoint& p = find_provider(settings.providers, m.provider);
    bool seen = false;
    for (const auto& u : used) seen = seen || u.name == p.name;
    if (!seen) used.push_back(p);
  }
  RemoteAgentOptions opts{[&] {
                            try {
                              return ModelPool(it->second);
                            } catch (const std::invalid_argument& e) {
                              throw ConfigError(std::string("pool '") + settings.pool + "': " + e.what());
                            }
                          }(),
                          resolve_credentials(used),
                          std::move(transport),
                          settings.instruction,
                          settings.pair_models,
                          settings.reinterpret_model};
  return remote_agent(std::move(opts));
}

std::unique_ptr<ClassifierBackend> build_classifier(const RunSettings& settings,
                                                    std::shared_ptr<const ChatTransport> transport) {
  if (settings.classifier.backend == "keyword") return std::make_unique<KeywordClassifier>(KeywordClassifier::bundled());
  if (settings.classifier.provider.empty() || settings.classifier.model.empty())
    throw ConfigError("remote classifier needs 'provider' and 'model'");
  const ProviderEndpoint& p = find_provider(settings.providers, settings.classifier.provider);
  auto resolved = resolve_credentials({p});
  return std::make_unique<RemoteClassifier>(std::move(resolved.front()), settings.classifier.model,
                                            std::move(transport), settings.classifier.instruction);
}

}  // namespace sbell
