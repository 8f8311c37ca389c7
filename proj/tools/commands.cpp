#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hyperlabel/config.hpp"
#include "hyperlabel/dataset.hpp"
#include "hyperlabel/error.hpp"
#include "hyperlabel/evalkit.hpp"
#include "hyperlabel/label_pipeline.hpp"
#include "hyperlabel/parallel.hpp"
#include "hyperlabel/synthgen.hpp"
#include "hyperlabel/trainer.hpp"

namespace hyperlabel::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Options {
  std::string config;
  std::string data;
  std::string out;
  std::string run_dir;
  std::string labels;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string ap_variant;
  bool desk_scale = false;
};

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hyperlabel");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("HYPERLABEL_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour real level names.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(LoadErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw LoadError(LoadErrorKind::kIo, "write failed: " + path.string());
}

void write_json(const fs::path& path, const ojson& j) { write_text(path, j.dump(2) + "\n"); }

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LoadError(LoadErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

RunConfig effective_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) {
    c.synth.seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (!o.ap_variant.empty()) {
    try {
      c.train.objective.ap.variant = parse_ap_variant(o.ap_variant);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.desk_scale) {
    c.train.epochs = 15;
    c.train.iters_per_epoch = 100;
  }
  c.validate();
  return c;
}

Dataset load_data(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--data is required");
  return load_dataset_dir(dir);
}

ojson to_ojson(const nlohmann::json& j) { return ojson::parse(j.dump()); }

ojson labels_json(const LabelMatrix& labels) {
  return ojson{{"n_clusters", labels.n_clusters}, {"assignments", labels.assignments}};
}

int count_noise(const LabelMatrix& labels) {
  return static_cast<int>(std::count(labels.assignments.begin(), labels.assignments.end(), kNoise));
}

ojson pairwise_json(const PairwiseScores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

int cmd_generate(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path dir = prepare_out(o.out);
  spdlog::info("generate: {} identities x {} images over {} cameras (seed {})",
               c.synth.n_identities, c.synth.images_per_identity, c.synth.cameras, c.synth.seed);
  const SynthResult r = generate(c.synth);
  save_dataset_dir(r.dataset, dir);
  std::string transitions = "identity,from,to,frames\n";
  for (const auto& t : r.transitions) {
    transitions += fmt::format("{},{},{},{}\n", t.identity, t.from, t.to, t.frames);
  }
  write_text(dir / "transitions.csv", transitions);
  write_json(dir / "config.json", c.to_json());
  spdlog::info("generate: wrote {} records to {}", r.dataset.size(), dir.string());
  return 0;
}

int cmd_refine(const Options& o) {
  const RunConfig c = effective_config(o);
  const Dataset data = load_data(o.data);
  const fs::path dir = prepare_out(o.out);
  spdlog::info("refine: {} records, {} cameras", data.size(), data.num_cameras);
  const LabelGenerationResult r = generate_labels(data.embeddings, data, c.labels);

  save_labels(r.raw, dir / "labels_raw.json");
  save_labels(r.labels(), dir / "labels_refined.json");
  write_json(dir / "histogram.json", to_ojson(r.histogram.to_json()));
  write_json(dir / "hyperedges.json", to_ojson(r.graph.edges_json()));
  write_json(dir / "config.json", c.to_json());

  ojson report;
  report["records"] = data.size();
  report["hyperedges"] = r.graph.num_edges();
  report["raw"] = {{"clusters", r.raw.n_clusters}, {"noise", count_noise(r.raw)}};
  report["refined"] = {{"clusters", r.labels().n_clusters}, {"noise", count_noise(r.labels())}};
  report["residual_iterations"] = r.residual_trace.iterations;
  report["residual_converged"] = r.residual_trace.converged;
  report["smoothing_iterations"] = r.refined.trace.iterations;
  report["smoothing_converged"] = r.refined.trace.converged;
  if (data.ground_truth) {
    const auto raw = pairwise_scores(r.raw.assignments, *data.ground_truth);
    const auto refined = pairwise_scores(r.labels().assignments, *data.ground_truth);
    report["raw"]["pairwise"] = pairwise_json(raw);
    report["refined"]["pairwise"] = pairwise_json(refined);
    report["pairwise_f1"] = refined.f1;
    spdlog::info("refine: pairwise F1 raw {:.4f} -> refined {:.4f}", raw.f1, refined.f1);
  } else {
    report["pairwise_f1"] = nullptr;
  }
  write_json(dir / "report.json", report);
  spdlog::info("refine: {} raw clusters -> {} refined clusters", r.raw.n_clusters,
               r.labels().n_clusters);
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig c = effective_config(o);
  const Dataset data = load_data(o.data);
  const fs::path dir = prepare_out(o.out);
  fs::create_directories(dir / "labels");
  write_json(dir / "config.json", c.to_json());

  const auto on_epoch = [&](const EpochArtifacts& a) {
    save_labels(*a.labels, dir / "labels" / fmt::format("epoch_{:03d}.json", a.epoch));
  };
  const TrainResult r = train(data, c.labels, c.train, on_epoch);

  std::string csv = "epoch,iter,L_intra,L_inter,L_inst,total\n";
  for (const auto& l : r.losses) {
    csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", l.epoch, l.iteration, l.intra,
                       l.inter, l.inst, l.total);
  }
  write_text(dir / "loss.csv", csv);
  r.adapter.save(dir / "adapter.bin");
  write_json(dir / "histogram.json", to_ojson(r.histogram.to_json()));
  save_labels(r.labels, dir / "labels_final.json");

  ojson epochs = ojson::array();
  for (const auto& m : r.epochs) {
    ojson e{{"epoch", m.epoch},         {"lr", m.lr},
            {"iterations", m.iterations}, {"clusters", m.clusters},
            {"noise", m.noise},         {"reused_labels", m.reused_labels},
            {"mean_loss", m.mean_total}};
    e["mAP"] = m.map ? ojson(*m.map) : ojson(nullptr);
    e["pairwise_f1"] = m.pairwise_f1 ? ojson(*m.pairwise_f1) : ojson(nullptr);
    epochs.push_back(e);
  }
  write_json(dir / "epochs.json", epochs);
  spdlog::info("train: wrote run to {}", dir.string());
  return 0;
}

int cmd_evaluate(const Options& o) {
  const RunConfig c = effective_config(o);
  const Dataset data = load_data(o.data);
  if (!data.ground_truth) throw ValidationError("evaluate: dataset has no identity field");
  const fs::path dir = prepare_out(o.out);

  std::optional<Matrix> features;
  std::optional<StHistogram> hist;
  std::optional<LabelMatrix> labels;
  if (!o.run_dir.empty()) {
    const fs::path run(o.run_dir);
    features = Adapter::load(run / "adapter.bin").embed(data.embeddings);
    std::ifstream in(run / "histogram.json");
    if (!in) throw LoadError(LoadErrorKind::kIo, "cannot open " + (run / "histogram.json").string());
    try {
      hist = StHistogram::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(LoadErrorKind::kMalformedMetadata, std::string("histogram.json: ") + e.what());
    }
    if (fs::exists(run / "labels_final.json")) labels = load_labels(run / "labels_final.json");
  }
  if (!o.labels.empty()) labels = load_labels(o.labels);
  if (labels && labels->assignments.size() != static_cast<std::size_t>(data.size())) {
    throw ValidationError("evaluate: label count differs from dataset size");
  }

  const DatasetEvaluation e = evaluate_dataset(data, features ? &*features : nullptr,
                                               hist ? &*hist : nullptr, c.labels.joint, c.eval);
  ojson out{{"mAP", e.visual.map}, {"R1", e.visual.rank1}, {"R5", e.visual.rank5},
            {"R10", e.visual.rank10}};
  if (labels) {
    out["pairwise_f1"] = pairwise_f1(labels->assignments, *data.ground_truth);
  } else {
    out["pairwise_f1"] = nullptr;
  }
  out["queries"] = e.visual.queries;
  if (e.joint) {
    out["joint"] = {{"mAP", e.joint->map}, {"R1", e.joint->rank1}, {"R5", e.joint->rank5},
                    {"R10", e.joint->rank10}};
  }
  write_json(dir / "metrics.json", out);

  std::cout << fmt::format("{:<8}{:>8}{:>8}{:>8}{:>8}\n", "scores", "mAP", "R1", "R5", "R10");
  std::cout << fmt::format("{:<8}{:>8.4f}{:>8.4f}{:>8.4f}{:>8.4f}\n", "visual", e.visual.map,
                           e.visual.rank1, e.visual.rank5, e.visual.rank10);
  if (e.joint) {
    std::cout << fmt::format("{:<8}{:>8.4f}{:>8.4f}{:>8.4f}{:>8.4f}\n", "joint", e.joint->map,
                             e.joint->rank1, e.joint->rank5, e.joint->rank10);
  }
  if (labels) std::cout << fmt::format("pairwise F1 {:.4f}\n", out["pairwise_f1"].get<double>());
  return 0;
}

std::string defaults_footer() {
  const RunConfig d;
  const auto& l = d.labels;
  const auto& t = d.train;
  std::string s = "\nDefaults (override through --config JSON):\n";
  auto line = [&](const std::string& key, const std::string& value, bool published) {
    s += fmt::format("  {:<34} {:<14} {}\n", key, value,
                     published ? "(published setting)" : "(implementation default)");
  };
  line("similarity.delta_t", std::to_string(l.histogram.delta_t), true);
  line("similarity.max_bins", std::to_string(l.histogram.max_bins), false);
  line("similarity.smoothing_eps", fmt::format("{}", l.histogram.smoothing_eps), false);
  line("similarity.lambda0 / gamma0", fmt::format("{} / {}", l.joint.lambda0, l.joint.gamma0), false);
  line("similarity.lambda1_st / gamma1_st",
       fmt::format("{} / {}", l.joint.lambda1_st, l.joint.gamma1_st), false);
  line("similarity.dense_limit / top_k",
       fmt::format("{} / {}", l.joint_build.dense_limit, l.joint_build.top_k), false);
  line("rerank.k1 / k2 / lambda",
       fmt::format("{} / {} / {}", l.rerank.k1, l.rerank.k2, l.rerank.lambda), false);
  line("dbscan.eps / min_samples", fmt::format("{} / {}", l.dbscan.eps, l.dbscan.min_samples), false);
  line("hypergraph.k_list", fmt::format("{}", fmt::join(l.hypergraph.k_list, ",")), true);
  line("propagation.alpha1", fmt::format("{}", l.propagation.alpha1), true);
  line("propagation.alpha2", fmt::format("{}", l.propagation.alpha2), true);
  line("propagation.scale_s", fmt::format("{}", l.propagation.scale_s), false);
  line("propagation.reliable_per_cluster", std::to_string(l.propagation.reliable_per_cluster), false);
  line("propagation.max_iters / tol",
       fmt::format("{} / {}", l.propagation.max_iters, l.propagation.tol), false);
  line("objectives.tau", fmt::format("{}", t.objective.tau), true);
  line("objectives.momentum", fmt::format("{}", t.momentum), true);
  line("objectives.lambda_intra/inter/inst",
       fmt::format("{} / {} / {}", t.weights.intra, t.weights.inter, t.weights.inst), true);
  line("objectives.hard_negatives", std::to_string(t.objective.hard_negatives), false);
  line("objectives.soft_label_power", fmt::format("{}", t.objective.soft_label_power), false);
  line("objectives.pool_size", std::to_string(t.objective.ap.pool_size), false);
  line("objectives.ap_variant", to_string(t.objective.ap.variant), false);
  line("train.epochs / iters_per_epoch",
       fmt::format("{} / {}", t.epochs, t.iters_per_epoch), true);
  line("train.lr", fmt::format("{}", t.lr), true);
  line("train.lr_step / lr_gamma", fmt::format("{} / {}", t.lr_step, t.lr_gamma), true);
  line("train.warmup_epochs", std::to_string(t.warmup_epochs), true);
  line("train.weight_decay", fmt::format("{}", t.adam.weight_decay), true);
  line("train.batch_size", std::to_string(t.batch_size), true);
  line("train.instances", std::to_string(t.instances), false);
  line("eval.cross_camera", d.eval.cross_camera ? "true" : "false", false);
  return s;
}

}  // namespace

int run(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Hypergraph pseudo-label refinement and memory-based metric learning"};
  app.require_subcommand(1);
  app.footer(defaults_footer());

  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Run configuration JSON");
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--seed", o.seed, "Overrides synth.seed and train.seed");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all available cores)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* gen = app.add_subcommand("generate", "Write a synthetic camera-network dataset");
  common(gen);
  auto* refine = app.add_subcommand("refine", "Cluster embeddings and refine labels on the hypergraph");
  common(refine);
  refine->add_option("--data", o.data, "Dataset directory (embeddings.emb + metadata.jsonl)")->required();
  auto* tr = app.add_subcommand("train", "Alternate label generation and adapter training");
  common(tr);
  tr->add_option("--data", o.data, "Dataset directory")->required();
  tr->add_option("--ap-variant", o.ap_variant, "Smooth-AP form: paper or difference");
  tr->add_flag("--desk-scale", o.desk_scale, "Short schedule: 15 epochs x 100 iterations");
  auto* ev = app.add_subcommand("evaluate", "Retrieval metrics and pseudo-label F1");
  common(ev);
  ev->add_option("--data", o.data, "Dataset directory with identities")->required();
  ev->add_option("--run", o.run_dir, "Training run directory (adapter, histogram, labels)");
  ev->add_option("--labels", o.labels, "Label file to score with pairwise F1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    set_num_threads(o.threads);
    if (gen->parsed()) return cmd_generate(o);
    if (refine->parsed()) return cmd_refine(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_evaluate(o);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const NumericError& e) {
    spdlog::error("numeric failure: {}", e.what());
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("error: {}", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace hyperlabel::cli
