#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "hyperlabel/config.hpp"
#include "hyperlabel/error.hpp"

using namespace hyperlabel;

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const RunConfig c = RunConfig::from_json(nlohmann::json::object());
  CHECK(c.labels.histogram.delta_t == 100);
  CHECK(c.labels.propagation.alpha1 == 0.99);
  CHECK(c.labels.propagation.alpha2 == 0.9);
  CHECK(c.labels.hypergraph.k_list == std::vector<int>{10, 20, 30, 40, 50});
  CHECK(c.train.objective.tau == 0.07);
  CHECK(c.train.momentum == 0.2);
  CHECK(c.train.weights.inst == 10.0);
  CHECK(c.train.warmup_epochs == 5);
  CHECK(c.train.lr == 3.5e-4);
  CHECK(c.eval.cross_camera);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("partial sections override single fields") {
  const auto j = nlohmann::json::parse(R"({
    "synth": {"n_identities": 12, "prototype_mode": "twins",
              "topology": [[{"mean": 10, "stddev": 1}, {"mean": 20, "stddev": 2}],
                           [{"mean": 20, "stddev": 2}, {"mean": 10, "stddev": 1}]],
              "cameras": 2},
    "dbscan": {"eps": 0.45},
    "hypergraph": {"k_list": [3, 6]},
    "objectives": {"ap_variant": "difference", "lambda_inst": 5},
    "train": {"epochs": 7, "seed": 99}
  })");
  const RunConfig c = RunConfig::from_json(j);
  CHECK(c.synth.n_identities == 12);
  CHECK(c.synth.prototype_mode == PrototypeMode::kTwinPairs);
  CHECK(c.synth.timing(0, 1).mean == 20.0);
  CHECK(c.synth.images_per_identity == 20);
  CHECK(c.labels.dbscan.eps == 0.45);
  CHECK(c.labels.dbscan.min_samples == 4);
  CHECK(c.labels.hypergraph.k_list == std::vector<int>{3, 6});
  CHECK(c.train.objective.ap.variant == ApVariant::kDifference);
  CHECK(c.train.weights.inst == 5.0);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.seed == 99u);
}

TEST_CASE("unknown or mistyped keys are rejected") {
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"dbscan": {"epsilon": 1}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"clustering": {}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"train": {"epochs": "ten"}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"train": []})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"([1, 2])")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"synth": {"prototype_mode": "x"}})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::parse(R"({"objectives": {"ap_variant": "x"}})")), ConfigError);
}

TEST_CASE("cross-field validation") {
  RunConfig c;
  c.labels.propagation.alpha1 = 1.5;
  CHECK_THROWS(c.validate());
  c = {};
  c.train.epochs = 2;  // warmup 5
  CHECK_THROWS(c.validate());
  c = {};
  c.train.weights = {0.0, 0.0, 0.0};
  CHECK_THROWS(c.validate());
}

TEST_CASE("effective config round trip") {
  RunConfig c;
  c.synth.noise = 0.123456789012345;
  c.labels.rerank.lambda = 0.25;
  c.train.objective.soft_label_power = 8.0;
  c.train.seed = 123456789012345ull;
  c.synth.topology = {{{1, 1}, {5, 0.5}}, {{5, 0.5}, {1, 1}}};
  c.synth.cameras = 2;
  const auto first = c.to_json();
  const RunConfig back = RunConfig::from_json(nlohmann::json::parse(first.dump()));
  CHECK(back.to_json().dump() == first.dump());
  CHECK(back.train.seed == c.train.seed);
  CHECK(back.synth.noise == c.synth.noise);

  for (const char* section : {"synth", "similarity", "rerank", "dbscan", "hypergraph",
                              "propagation", "objectives", "train", "eval"}) {
    CHECK(first.contains(section));
  }

  const auto dir = testutil::temp_dir("config");
  std::ofstream(dir / "run.json") << first.dump(2);
  CHECK(load_run_config(dir / "run.json").to_json().dump() == first.dump());
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("prototype mode names") {
  for (auto m : {PrototypeMode::kRandom, PrototypeMode::kAntipodalPairs, PrototypeMode::kTwinPairs}) {
    CHECK(parse_prototype_mode(to_string(m)) == m);
  }
}

}  // TEST_SUITE
