#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log = "/dev/null") {
  const std::string cmd = std::string(HYPERLABEL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmall = R"({
  "synth": {"n_identities": 20, "cameras": 3, "images_per_identity": 8, "embed_dim": 16,
            "noise": 0.3, "seed": 4},
  "rerank": {"k1": 10, "k2": 3},
  "dbscan": {"eps": 0.5, "min_samples": 3},
  "hypergraph": {"k_list": [4, 8]},
  "train": {"epochs": 2, "warmup_epochs": 1, "iters_per_epoch": 4, "batch_size": 16}
})";

const char* kNoiseless = R"({
  "synth": {"n_identities": 20, "cameras": 3, "images_per_identity": 12, "embed_dim": 16,
            "noise": 0.0, "camera_shift": 0.0},
  "rerank": {"k1": 10, "k2": 3},
  "dbscan": {"eps": 0.5, "min_samples": 3},
  "hypergraph": {"k_list": [4, 8]}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate, refine, train and evaluate") {
  const fs::path dir = testutil::temp_dir("cli");
  write(dir / "small.json", kSmall);
  const std::string cfg = "--config " + (dir / "small.json").string();

  REQUIRE(run("generate " + cfg + " --out " + (dir / "data").string()) == 0);
  for (const char* f : {"embeddings.emb", "metadata.jsonl", "transitions.csv", "config.json"}) {
    CHECK(fs::exists(dir / "data" / f));
  }
  const std::string emb = slurp(dir / "data" / "embeddings.emb");
  const std::string meta = slurp(dir / "data" / "metadata.jsonl");

  REQUIRE(run("refine " + cfg + " --data " + (dir / "data").string() + " --out " + (dir / "refine").string()) == 0);
  for (const char* f : {"labels_raw.json", "labels_refined.json", "histogram.json",
                        "hyperedges.json", "config.json", "report.json"}) {
    CHECK(fs::exists(dir / "refine" / f));
  }
  const auto report = read_json(dir / "refine" / "report.json");
  CHECK(report["pairwise_f1"].is_number());
  CHECK(report["records"] == 160);

  REQUIRE(run("train " + cfg + " --data " + (dir / "data").string() + " --out " + (dir / "train").string()) == 0);
  for (const char* f : {"loss.csv", "adapter.bin", "histogram.json", "labels_final.json",
                        "epochs.json", "config.json", "labels/epoch_000.json", "labels/epoch_001.json"}) {
    CHECK(fs::exists(dir / "train" / f));
  }
  CHECK(slurp(dir / "train" / "loss.csv").rfind("epoch,iter,L_intra,L_inter,L_inst,total", 0) == 0);

  REQUIRE(run("evaluate " + cfg + " --data " + (dir / "data").string() + " --run " + (dir / "train").string() +
              " --out " + (dir / "eval").string(), dir / "table.txt") == 0);
  const auto metrics = read_json(dir / "eval" / "metrics.json");
  for (const char* key : {"mAP", "R1", "R5", "R10"}) {
    REQUIRE(metrics.contains(key));
    CHECK(metrics[key].get<double>() >= 0.0);
    CHECK(metrics[key].get<double>() <= 1.0);
  }
  CHECK(metrics["pairwise_f1"].is_number());
  CHECK(metrics.contains("joint"));
  CHECK(slurp(dir / "table.txt").find("mAP") != std::string::npos);

  // Inputs are never modified.
  CHECK(slurp(dir / "data" / "embeddings.emb") == emb);
  CHECK(slurp(dir / "data" / "metadata.jsonl") == meta);
  fs::remove_all(dir);
}

TEST_CASE("reruns are byte identical") {
  const fs::path dir = testutil::temp_dir("cli_det");
  write(dir / "small.json", kSmall);
  const std::string cfg = "--config " + (dir / "small.json").string();
  REQUIRE(run("generate " + cfg + " --seed 8 --out " + (dir / "a").string()) == 0);
  REQUIRE(run("generate " + cfg + " --seed 8 --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "embeddings.emb") == slurp(dir / "b" / "embeddings.emb"));
  CHECK(slurp(dir / "a" / "metadata.jsonl") == slurp(dir / "b" / "metadata.jsonl"));
  REQUIRE(run("generate " + cfg + " --seed 9 --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "a" / "embeddings.emb") != slurp(dir / "c" / "embeddings.emb"));

  const std::string data = " --data " + (dir / "a").string();
  REQUIRE(run("refine " + cfg + data + " --out " + (dir / "r1").string()) == 0);
  REQUIRE(run("refine " + cfg + data + " --out " + (dir / "r2").string()) == 0);
  for (const char* f : {"labels_raw.json", "labels_refined.json", "report.json", "hyperedges.json"}) {
    CHECK(slurp(dir / "r1" / f) == slurp(dir / "r2" / f));
  }

  // The echoed effective config reproduces the run.
  REQUIRE(run("refine --config " + (dir / "r1" / "config.json").string() + data + " --out " +
              (dir / "r3").string()) == 0);
  CHECK(slurp(dir / "r1" / "labels_refined.json") == slurp(dir / "r3" / "labels_refined.json"));
  CHECK(slurp(dir / "r1" / "config.json") == slurp(dir / "r3" / "config.json"));
  fs::remove_all(dir);
}

TEST_CASE("refine on noiseless data is exact") {
  const fs::path dir = testutil::temp_dir("cli_clean");
  write(dir / "clean.json", kNoiseless);
  const std::string cfg = "--config " + (dir / "clean.json").string();
  REQUIRE(run("generate " + cfg + " --out " + (dir / "data").string()) == 0);
  REQUIRE(run("refine " + cfg + " --data " + (dir / "data").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(read_json(dir / "out" / "report.json")["pairwise_f1"].get<double>() == 1.0);
  fs::remove_all(dir);
}

TEST_CASE("exit codes") {
  const fs::path dir = testutil::temp_dir("cli_codes");
  CHECK(run("--help") == 0);
  CHECK(run("train --help", dir / "help.txt") == 0);
  const std::string help = slurp(dir / "help.txt");
  CHECK(help.find("published setting") != std::string::npos);
  CHECK(help.find("implementation default") != std::string::npos);
  CHECK(run("generate") == 1);  // --out missing
  CHECK(run("bogus --out x") == 1);

  write(dir / "bad.json", R"({"dbscan": {"epsilon": 0.5}})");
  CHECK(run("generate --config " + (dir / "bad.json").string() + " --out " + (dir / "g").string()) == 1);
  write(dir / "invalid.json", R"({"propagation": {"alpha1": 2.0}})");
  CHECK(run("generate --config " + (dir / "invalid.json").string() + " --out " + (dir / "g").string()) == 1);
  CHECK(run("refine --data " + (dir / "missing").string() + " --out " + (dir / "r").string()) == 2);

  write(dir / "small.json", kSmall);
  REQUIRE(run("generate --config " + (dir / "small.json").string() + " --out " + (dir / "data").string()) == 0);
  std::ofstream(dir / "data" / "metadata.jsonl", std::ios::app) << "{broken\n";
  CHECK(run("refine --data " + (dir / "data").string() + " --out " + (dir / "r").string()) == 2);

  // Joint similarities spanning many orders of magnitude overflow the edge weights.
  REQUIRE(run("generate --config " + (dir / "small.json").string() + " --out " + (dir / "data2").string()) == 0);
  write(dir / "overflow.json", R"({"similarity": {"lambda0": 1e30, "gamma0": 100},
    "rerank": {"k1": 10, "k2": 3}, "dbscan": {"eps": 0.5, "min_samples": 3},
    "hypergraph": {"k_list": [4, 8]}})");
  CHECK(run("refine --config " + (dir / "overflow.json").string() + " --data " + (dir / "data2").string() +
            " --out " + (dir / "r2").string()) == 3);
  fs::remove_all(dir);
}

}  // TEST_SUITE
