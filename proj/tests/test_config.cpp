#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "sbell/config.hpp"
#include "sbell/error.hpp"
#include "support.hpp"

using namespace sbell;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "trials": 5, "seed": 7, "out": "runs/x", "label": "7",
    "providers": [{"name": "p", "base_url": "http://127.0.0.1:9/v1", "api_key_env": "SBELL_CFG_TEST_KEY"}],
    "pools": {"default": [{"provider": "p", "model": "m1"}, {"provider": "p", "model": "m2"}]}
  })");
}

}  // namespace

TEST_CASE("parses a minimal config with defaults") {
  const RunSettings s = parse_run_settings(minimal(), "/base");
  CHECK(s.experiment.n_trials == 5);
  CHECK(s.experiment.seed == 7);
  CHECK(s.experiment.output_dir == std::filesystem::path("/base/runs/x"));
  CHECK(s.experiment.max_attempts == 3);
  CHECK(s.experiment.record_timestamps);
  CHECK(s.pool == "default");
  CHECK(s.pools.at("default").size() == 2);
  CHECK(s.pair_models == PairModels::independent);
  CHECK(s.reinterpret_model == ReinterpretModel::same);
  CHECK(s.classifier.backend == "keyword");
  CHECK(s.providers[0].api_key_env == "SBELL_CFG_TEST_KEY");
}

TEST_CASE("rejects credentials in the file and bad enumerations") {
  json j = minimal();
  j["providers"][0]["api_key"] = "sk-oops";
  CHECK_THROWS_AS(parse_run_settings(j, "."), ConfigError);
  j = minimal();
  j["pair_models"] = "sometimes";
  CHECK_THROWS_AS(parse_run_settings(j, "."), ConfigError);
  j = minimal();
  j["classifier"] = {{"backend", "oracle"}};
  CHECK_THROWS_AS(parse_run_settings(j, "."), ConfigError);
  j = minimal();
  j["trials"] = 0;
  CHECK_THROWS_AS(parse_run_settings(j, "."), ConfigError);
  j = minimal();
  j["seed"] = "seven";
  CHECK_THROWS_AS(parse_run_settings(j, "."), ConfigError);
  CHECK_THROWS_AS(parse_run_settings(json::array(), "."), ConfigError);
}

TEST_CASE("missing credential fails before anything runs") {
  ::unsetenv("SBELL_CFG_TEST_KEY");
  const RunSettings s = parse_run_settings(minimal(), ".");
  CHECK_THROWS_AS(build_remote_agents(s, std::make_shared<HttpChatTransport>()), ConfigError);
  ::setenv("SBELL_CFG_TEST_KEY", "k", 1);
  CHECK_NOTHROW(build_remote_agents(s, std::make_shared<HttpChatTransport>()));
}

TEST_CASE("pool and provider references are checked") {
  ::setenv("SBELL_CFG_TEST_KEY", "k", 1);
  RunSettings s = parse_run_settings(minimal(), ".");
  s.pool = "nope";
  CHECK_THROWS_AS(build_remote_agents(s, std::make_shared<HttpChatTransport>()), ConfigError);
  json j = minimal();
  j["pools"]["default"].push_back({{"provider", "ghost"}, {"model", "m"}});
  CHECK_THROWS_AS(build_remote_agents(parse_run_settings(j, "."), std::make_shared<HttpChatTransport>()), ConfigError);
  j = minimal();
  j["classifier"] = {{"backend", "remote"}};
  CHECK_THROWS_AS(build_classifier(parse_run_settings(j, "."), std::make_shared<HttpChatTransport>()), ConfigError);
  j["classifier"] = {{"backend", "remote"}, {"provider", "p"}, {"model", "judge"}};
  CHECK(build_classifier(parse_run_settings(j, "."), std::make_shared<HttpChatTransport>())->describe()["backend"] ==
        "remote");
}

TEST_CASE("loading from disk resolves relative paths against the file") {
  testing::TempDir dir("cfg");
  std::filesystem::create_directories(dir / "data");
  std::ofstream(dir / "data" / "lexicon.tsv") << "one\tfirst sense\tsecond sense\ntwo\tthird sense\tfourth sense\n";
  json j = minimal();
  j["data_dir"] = "data";
  std::ofstream(dir / "run.json") << j.dump();
  const RunSettings s = load_run_settings(dir / "run.json");
  CHECK(s.experiment.pools.lexicon.size() == 2);
  CHECK(s.experiment.output_dir == dir / "runs/x");
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_run_settings(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_settings(dir / "absent.json"), DataError);
}
