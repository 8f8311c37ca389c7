#pragma once

#include <vector>

// Brute-force retrieval metrics: every rank is counted pairwise instead of
// sorting. Gallery item k outranks j when its score is higher, or equal with
// a smaller index. Items sharing identity and camera with the query are
// ignored when cross_camera is set.
namespace oracle {

struct QueryOutcome {
  bool valid = false;
  double ap = 0.0;
  int first_hit = -1;
};

inline QueryOutcome query(const std::vector<double>& scores, int qid, int qcam,
                          const std::vector<int>& gid, const std::vector<int>& gcam,
                          bool cross_camera) {
  const int n = static_cast<int>(scores.size());
  auto kept = [&](int k) { return !(cross_camera && gid[k] == qid && gcam[k] == qcam); };
  auto above = [&](int k, int j) {
    return scores[k] > scores[j] || (scores[k] == scores[j] && k < j);
  };
  QueryOutcome out;
  int positives = 0;
  std::vector<double> terms(static_cast<std::size_t>(n), 0.0);  // by rank, summed in rank order
  for (int j = 0; j < n; ++j) {
    if (!kept(j) || gid[j] != qid) continue;
    ++positives;
    int rank = 0, hits_above = 0;
    for (int k = 0; k < n; ++k) {
      if (k == j || !kept(k) || !above(k, j)) continue;
      ++rank;
      hits_above += gid[k] == qid;
    }
    terms[rank] = (hits_above + 1.0) / (rank + 1.0);
    if (out.first_hit < 0 || rank < out.first_hit) out.first_hit = rank;
  }
  if (positives == 0) return out;
  out.valid = true;
  for (double t : terms) out.ap += t;
  out.ap /= positives;
  return out;
}

struct SmallInstance {
  std::vector<double> scores;
  std::vector<int> ids;
  std::vector<int> cams;
};

// Every ranking over galleries of up to max_size items for a query with
// identity 0 in camera 0. Each item is a cross-camera positive, a negative or
// a same-camera positive. Up to tie_size items, scores range over {0,1,2}
// so ties are covered; above that, scores are distinct and descending, which
// enumerates every distinct ranking.
template <class F>
void for_each_small_instance(int max_size, int tie_size, F&& f) {
  SmallInstance inst;
  for (int g = 1; g <= max_size; ++g) {
    int patterns = 1;
    for (int k = 0; k < g; ++k) patterns *= 3;
    const int score_patterns = g <= tie_size ? patterns : 1;
    inst.scores.assign(g, 0.0);
    inst.ids.assign(g, 0);
    inst.cams.assign(g, 0);
    for (int p = 0; p < patterns; ++p) {
      for (int k = 0, code = p; k < g; ++k, code /= 3) {
        inst.ids[k] = code % 3 == 1 ? 1 : 0;
        inst.cams[k] = code % 3 == 2 ? 0 : 1;
      }
      for (int s = 0; s < score_patterns; ++s) {
        for (int k = 0, code = s; k < g; ++k, code /= 3) {
          inst.scores[k] = g <= tie_size ? static_cast<double>(code % 3) : static_cast<double>(g - k);
        }
        f(inst);
      }
    }
  }
}

}  // namespace oracle
