#include "hyperlabel/evalkit.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

QueryGallerySplit split_first_sighting(std::span<const int> identities,
                                       std::span<const int> cameras) {
  if (identities.size() != cameras.size()) {
    throw ValidationError("evalkit: identity and camera counts differ");
  }
  QueryGallerySplit out;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < identities.size(); ++i) {
    if (seen.insert({identities[i], cameras[i]}).second) {
      out.query.push_back(static_cast<int>(i));
    } else {
      out.gallery.push_back(static_cast<int>(i));
    }
  }
  return out;
}

nlohmann::json RetrievalMetrics::to_json() const {
  return {{"mAP", map}, {"R1", rank1}, {"R5", rank5}, {"R10", rank10}, {"queries", queries}};
}

QueryResult evaluate_query(std::span<const double> scores, int query_id, int query_camera,
                           std::span<const int> gallery_ids, std::span<const int> gallery_cameras,
                           const RetrievalProtocol& protocol) {
  const std::size_t g = gallery_ids.size();
  std::vector<int> order;
  order.reserve(g);
  for (std::size_t j = 0; j < g; ++j) {
    if (protocol.cross_camera && gallery_ids[j] == query_id && gallery_cameras[j] == query_camera) {
      continue;
    }
    order.push_back(static_cast<int>(j));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  QueryResult r;
  int hits = 0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (gallery_ids[order[rank]] != query_id) continue;
    if (hits == 0) r.first_hit = static_cast<int>(rank);
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) return r;
  r.valid = true;
  r.ap = sum / hits;
  return r;
}

RetrievalMetrics evaluate(const Matrix& scores, std::span<const int> query_ids,
                          std::span<const int> query_cameras, std::span<const int> gallery_ids,
                          std::span<const int> gallery_cameras, const RetrievalProtocol& protocol) {
  if (scores.rows() != static_cast<Index>(query_ids.size()) ||
      scores.cols() != static_cast<Index>(gallery_ids.size()) ||
      query_ids.size() != query_cameras.size() || gallery_ids.size() != gallery_cameras.size()) {
    throw ValidationError("evalkit: score matrix does not match query/gallery metadata");
  }
  RetrievalMetrics m;
  for (Index q = 0; q < scores.rows(); ++q) {
    const std::span<const double> row(scores.data() + q * scores.cols(),
                                      static_cast<std::size_t>(scores.cols()));
    const QueryResult r =
        evaluate_query(row, query_ids[q], query_cameras[q], gallery_ids, gallery_cameras, protocol);
    if (!r.valid) continue;
    ++m.queries;
    m.map += r.ap;
    if (r.first_hit < 1) m.rank1 += 1.0;
    if (r.first_hit < 5) m.rank5 += 1.0;
    if (r.first_hit < 10) m.rank10 += 1.0;
  }
  if (m.queries > 0) {
    m.map /= m.queries;
    m.rank1 /= m.queries;
    m.rank5 /= m.queries;
    m.rank10 /= m.queries;
  }
  return m;
}

Matrix rescore_joint(const Matrix& visual, const StHistogram& hist, const Dataset& dataset,
                     std::span<const int> query, std::span<const int> gallery,
                     const JointSimilarityParams& params) {
  if (visual.rows() != static_cast<Index>(query.size()) ||
      visual.cols() != static_cast<Index>(gallery.size())) {
    throw ValidationError("evalkit: visual block does not match query/gallery sizes");
  }
  Matrix out(visual.rows(), visual.cols());
  for (Index q = 0; q < visual.rows(); ++q) {
    const int qi = query[q];
    for (Index g = 0; g < visual.cols(); ++g) {
      const int gi = gallery[g];
      const double st = hist.lookup(dataset.cameras[qi], dataset.cameras[gi],
                                    dataset.timestamps[qi], dataset.timestamps[gi]);
      out(q, g) = joint_score(visual(q, g), st, params);
    }
  }
  return out;
}

namespace {

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

PairwiseScores pairwise_scores(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ValidationError("evalkit: label lengths differ");
  std::map<int, double> pred_sizes;
  std::map<int, double> true_sizes;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != kNoise) pred_sizes[predicted[i]] += 1.0;
    if (truth[i] != kNoise) true_sizes[truth[i]] += 1.0;
    if (predicted[i] != kNoise && truth[i] != kNoise) joint[{predicted[i], truth[i]}] += 1.0;
  }
  double tp = 0.0, pp = 0.0, tt = 0.0;
  for (const auto& [k, n] : joint) tp += pairs(n);
  for (const auto& [k, n] : pred_sizes) pp += pairs(n);
  for (const auto& [k, n] : true_sizes) tt += pairs(n);
  PairwiseScores s;
  s.precision = pp > 0.0 ? tp / pp : 1.0;
  s.recall = tt > 0.0 ? tp / tt : 1.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

DatasetEvaluation evaluate_dataset(const Dataset& dataset, const Matrix* features,
                                   const StHistogram* hist, const JointSimilarityParams& params,
                                   const RetrievalProtocol& protocol) {
  if (!dataset.ground_truth) throw ValidationError("evalkit: dataset has no identities");
  const Matrix& f = features != nullptr ? *features : dataset.embeddings;
  if (f.rows() != dataset.size()) throw ValidationError("evalkit: feature rows differ from dataset");
  const auto& ids = *dataset.ground_truth;
  const QueryGallerySplit split = split_first_sighting(ids, dataset.cameras);

  auto gather = [](const std::vector<int>& src, const std::vector<int>& at) {
    std::vector<int> out(at.size());
    for (std::size_t i = 0; i < at.size(); ++i) out[i] = src[at[i]];
    return out;
  };
  const auto q_ids = gather(ids, split.query);
  const auto g_ids = gather(ids, split.gallery);
  const auto q_cams = gather(dataset.cameras, split.query);
  const auto g_cams = gather(dataset.cameras, split.gallery);

  Matrix qf(static_cast<Index>(split.query.size()), f.cols());
  Matrix gf(static_cast<Index>(split.gallery.size()), f.cols());
  for (std::size_t i = 0; i < split.query.size(); ++i) qf.row(i) = f.row(split.query[i]);
  for (std::size_t i = 0; i < split.gallery.size(); ++i) gf.row(i) = f.row(split.gallery[i]);
  const Matrix visual = cross_similarity(qf, gf);

  DatasetEvaluation out;
  out.visual = evaluate(visual, q_ids, q_cams, g_ids, g_cams, protocol);
  if (hist != nullptr) {
    const Matrix joint = rescore_joint(visual, *hist, dataset, split.query, split.gallery, params);
    out.joint = evaluate(joint, q_ids, q_cams, g_ids, g_cams, protocol);
  }
  return out;
}

}  // namespace hyperlabel
