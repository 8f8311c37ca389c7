#include "hyperlabel/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Typed access to one JSON object that remembers which keys were consumed.
class Section {
 public:
  Section(const json& root, const std::string& name) : name_(name) {
    if (root.contains(name)) {
      node_ = &root.at(name);
      if (!node_->is_object()) throw ConfigError("config: section '" + name + "' must be an object");
    }
  }

  template <typename T>
  void get(const char* key, T& value) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      value = node_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: " + name_ + "." + key + ": " + e.what());
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return nullptr;
    return &node_->at(key);
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& item : node_->items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("config: unknown key '" + name_ + "." + item.key() + "'");
      }
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

PrototypeMode parse_prototype_mode(const std::string& name) {
  if (name == "random") return PrototypeMode::kRandom;
  if (name == "antipodal") return PrototypeMode::kAntipodalPairs;
  if (name == "twins") return PrototypeMode::kTwinPairs;
  throw ConfigError("config: unknown prototype mode '" + name + "'");
}

std::string to_string(PrototypeMode mode) {
  switch (mode) {
    case PrototypeMode::kRandom: return "random";
    case PrototypeMode::kAntipodalPairs: return "antipodal";
    case PrototypeMode::kTwinPairs: return "twins";
  }
  return "random";
}

void RunConfig::validate() const {
  synth.validate();
  labels.dbscan.validate();
  labels.histogram.validate();
  labels.joint.validate();
  labels.hypergraph.validate();
  labels.propagation.validate();
  if (labels.rerank.k1 < labels.rerank.k2 || labels.rerank.k2 < 1) {
    throw ParameterError("config: rerank needs k1 >= k2 >= 1");
  }
  if (!(labels.rerank.lambda >= 0.0 && labels.rerank.lambda <= 1.0)) {
    throw ParameterError("config: rerank.lambda must be in [0, 1]");
  }
  if (labels.joint_build.dense_limit < 1 || labels.joint_build.top_k < 1) {
    throw ParameterError("config: similarity.dense_limit and top_k must be >= 1");
  }
  train.validate();
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> sections{"synth",       "similarity", "rerank",
                                              "dbscan",      "hypergraph", "propagation",
                                              "objectives",  "train",      "eval"};
  for (const auto& item : j.items()) {
    if (!sections.count(item.key())) throw ConfigError("config: unknown section '" + item.key() + "'");
  }

  RunConfig c;
  {
    Section s(j, "synth");
    auto& x = c.synth;
    s.get("n_identities", x.n_identities);
    s.get("cameras", x.cameras);
    s.get("images_per_identity", x.images_per_identity);
    s.get("embed_dim", x.embed_dim);
    s.get("noise", x.noise);
    s.get("camera_shift", x.camera_shift);
    s.get("visits_per_identity", x.visits_per_identity);
    s.get("dwell_frames", x.dwell_frames);
    s.get("frame_horizon", x.frame_horizon);
    s.get("twin_noise", x.twin_noise);
    s.get("twin_gap_min", x.twin_gap_min);
    s.get("twin_gap_max", x.twin_gap_max);
    s.get("seed", x.seed);
    std::string mode = to_string(x.prototype_mode);
    s.get("prototype_mode", mode);
    x.prototype_mode = parse_prototype_mode(mode);
    if (const json* topo = s.raw("topology")) {
      try {
        for (const auto& row : *topo) {
          std::vector<TransitionTiming> r;
          for (const auto& cell : row) {
            r.push_back({cell.at("mean").get<double>(), cell.at("stddev").get<double>()});
          }
          x.topology.push_back(std::move(r));
        }
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config: synth.topology: ") + e.what());
      }
    }
    s.finish();
  }
  {
    Section s(j, "similarity");
    s.get("lambda0", c.labels.joint.lambda0);
    s.get("gamma0", c.labels.joint.gamma0);
    s.get("lambda1_st", c.labels.joint.lambda1_st);
    s.get("gamma1_st", c.labels.joint.gamma1_st);
    s.get("delta_t", c.labels.histogram.delta_t);
    s.get("max_bins", c.labels.histogram.max_bins);
    s.get("smoothing_eps", c.labels.histogram.smoothing_eps);
    s.get("dense_limit", c.labels.joint_build.dense_limit);
    s.get("top_k", c.labels.joint_build.top_k);
    s.finish();
  }
  {
    Section s(j, "rerank");
    s.get("k1", c.labels.rerank.k1);
    s.get("k2", c.labels.rerank.k2);
    s.get("lambda", c.labels.rerank.lambda);
    s.finish();
  }
  {
    Section s(j, "dbscan");
    s.get("eps", c.labels.dbscan.eps);
    s.get("min_samples", c.labels.dbscan.min_samples);
    s.finish();
  }
  {
    Section s(j, "hypergraph");
    s.get("k_list", c.labels.hypergraph.k_list);
    s.get("global_clustering", c.labels.hypergraph.global_clustering);
    s.get("intra_camera", c.labels.hypergraph.intra_camera);
    s.get("global_knn", c.labels.hypergraph.global_knn);
    s.finish();
  }
  {
    Section s(j, "propagation");
    auto& p = c.labels.propagation;
    s.get("alpha1", p.alpha1);
    s.get("alpha2", p.alpha2);
    s.get("scale_s", p.scale_s);
    s.get("reliable_per_cluster", p.reliable_per_cluster);
    s.get("max_iters", p.max_iters);
    s.get("tol", p.tol);
    s.finish();
  }
  {
    Section s(j, "objectives");
    auto& o = c.train.objective;
    s.get("tau", o.tau);
    s.get("hard_negatives", o.hard_negatives);
    s.get("soft_label_power", o.soft_label_power);
    s.get("pool_size", o.ap.pool_size);
    s.get("difference_temperature", o.ap.difference_temperature);
    std::string variant = to_string(o.ap.variant);
    s.get("ap_variant", variant);
    try {
      o.ap.variant = parse_ap_variant(variant);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    s.get("lambda_intra", c.train.weights.intra);
    s.get("lambda_inter", c.train.weights.inter);
    s.get("lambda_inst", c.train.weights.inst);
    s.get("momentum", c.train.momentum);
    s.finish();
  }
  {
    Section s(j, "train");
    auto& t = c.train;
    s.get("epochs", t.epochs);
    s.get("iters_per_epoch", t.iters_per_epoch);
    s.get("batch_size", t.batch_size);
    s.get("instances", t.instances);
    s.get("lr", t.lr);
    s.get("lr_step", t.lr_step);
    s.get("lr_gamma", t.lr_gamma);
    s.get("warmup_epochs", t.warmup_epochs);
    s.get("weight_decay", t.adam.weight_decay);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("adam_epsilon", t.adam.epsilon);
    s.get("output_dim", t.output_dim);
    s.get("init_noise", t.init_noise);
    s.get("seed", t.seed);
    s.finish();
  }
  {
    Section s(j, "eval");
    s.get("cross_camera", c.eval.cross_camera);
    s.finish();
  }
  c.validate();
  return c;
}

ojson RunConfig::to_json() const {
  ojson j;
  ojson topo = ojson::array();
  for (const auto& row : synth.topology) {
    ojson r = ojson::array();
    for (const auto& t : row) r.push_back({{"mean", t.mean}, {"stddev", t.stddev}});
    topo.push_back(r);
  }
  j["synth"] = {{"n_identities", synth.n_identities},
                {"cameras", synth.cameras},
                {"images_per_identity", synth.images_per_identity},
                {"embed_dim", synth.embed_dim},
                {"noise", synth.noise},
                {"camera_shift", synth.camera_shift},
                {"visits_per_identity", synth.visits_per_identity},
                {"dwell_frames", synth.dwell_frames},
                {"topology", topo},
                {"frame_horizon", synth.frame_horizon},
                {"prototype_mode", to_string(synth.prototype_mode)},
                {"twin_noise", synth.twin_noise},
                {"twin_gap_min", synth.twin_gap_min},
                {"twin_gap_max", synth.twin_gap_max},
                {"seed", synth.seed}};
  j["similarity"] = {{"lambda0", labels.joint.lambda0},
                     {"gamma0", labels.joint.gamma0},
                     {"lambda1_st", labels.joint.lambda1_st},
                     {"gamma1_st", labels.joint.gamma1_st},
                     {"delta_t", labels.histogram.delta_t},
                     {"max_bins", labels.histogram.max_bins},
                     {"smoothing_eps", labels.histogram.smoothing_eps},
                     {"dense_limit", labels.joint_build.dense_limit},
                     {"top_k", labels.joint_build.top_k}};
  j["rerank"] = {{"k1", labels.rerank.k1}, {"k2", labels.rerank.k2}, {"lambda", labels.rerank.lambda}};
  j["dbscan"] = {{"eps", labels.dbscan.eps}, {"min_samples", labels.dbscan.min_samples}};
  j["hypergraph"] = {{"k_list", labels.hypergraph.k_list},
                     {"global_clustering", labels.hypergraph.global_clustering},
                     {"intra_camera", labels.hypergraph.intra_camera},
                     {"global_knn", labels.hypergraph.global_knn}};
  const auto& p = labels.propagation;
  j["propagation"] = {{"alpha1", p.alpha1},     {"alpha2", p.alpha2},
                      {"scale_s", p.scale_s},   {"reliable_per_cluster", p.reliable_per_cluster},
                      {"max_iters", p.max_iters}, {"tol", p.tol}};
  const auto& o = train.objective;
  j["objectives"] = {{"tau", o.tau},
                     {"hard_negatives", o.hard_negatives},
                     {"soft_label_power", o.soft_label_power},
                     {"pool_size", o.ap.pool_size},
                     {"ap_variant", hyperlabel::to_string(o.ap.variant)},
                     {"difference_temperature", o.ap.difference_temperature},
                     {"lambda_intra", train.weights.intra},
                     {"lambda_inter", train.weights.inter},
                     {"lambda_inst", train.weights.inst},
                     {"momentum", train.momentum}};
  j["train"] = {{"epochs", train.epochs},
                {"iters_per_epoch", train.iters_per_epoch},
                {"batch_size", train.batch_size},
                {"instances", train.instances},
                {"lr", train.lr},
                {"lr_step", train.lr_step},
                {"lr_gamma", train.lr_gamma},
                {"warmup_epochs", train.warmup_epochs},
                {"weight_decay", train.adam.weight_decay},
                {"beta1", train.adam.beta1},
                {"beta2", train.adam.beta2},
                {"adam_epsilon", train.adam.epsilon},
                {"output_dim", train.output_dim},
                {"init_noise", train.init_noise},
                {"seed", train.seed}};
  j["eval"] = {{"cross_camera", eval.cross_camera}};
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace hyperlabel
