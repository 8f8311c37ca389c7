#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "hyperlabel/evalkit.hpp"
#include "hyperlabel/label_pipeline.hpp"
#include "hyperlabel/synthgen.hpp"
#include "hyperlabel/trainer.hpp"

namespace hyperlabel {

// Every tunable of a run. JSON sections: synth, similarity, rerank, dbscan,
// hypergraph, propagation, objectives, train, eval. Missing keys keep their
// defaults; unknown keys are rejected.
struct RunConfig {
  SynthConfig synth;
  LabelGenerationConfig labels;
  TrainConfig train;
  RetrievalProtocol eval;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

RunConfig load_run_config(const std::filesystem::path& path);

PrototypeMode parse_prototype_mode(const std::string& name);
std::string to_string(PrototypeMode mode);

}  // namespace hyperlabel
