#pragma once

#include <cstdint>
#include <vector>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/types.hpp"

namespace hyperlabel {

struct TransitionTiming {
  double mean = 800.0;  // frames
  double stddev = 80.0;
};

enum class PrototypeMode {
  kRandom,          // independent uniform directions
  kAntipodalPairs,  // identity 2k+1 = -identity 2k
  kTwinPairs,       // identity 2k+1 close to 2k, shifted far away in time
};

struct SynthConfig {
  int n_identities = 200;
  int cameras = 6;
  int images_per_identity = 20;
  int embed_dim = 32;
  double noise = 0.35;         // expected norm of the per-image Gaussian noise
  double camera_shift = 0.35;  // norm of each camera's appearance offset
  int visits_per_identity = 4;
  int dwell_frames = 5;        // mean gap between images of one visit
  // C x C transition timing; empty selects a ring layout where the mean
  // grows with ring distance between cameras.
  std::vector<std::vector<TransitionTiming>> topology;
  std::int64_t frame_horizon = 100000;
  PrototypeMode prototype_mode = PrototypeMode::kRandom;
  double twin_noise = 0.25;              // kTwinPairs: offset norm between twin prototypes
  std::int64_t twin_gap_min = 5000;      // kTwinPairs: start-time offset range of a twin
  std::int64_t twin_gap_max = 15000;
  std::uint64_t seed = 0;

  void validate() const;
  TransitionTiming timing(int from, int to) const;
};

struct Transition {
  int identity = 0;
  int from = 0;
  int to = 0;
  std::int64_t frames = 0;
};

struct SynthResult {
  Dataset dataset;  // ground_truth holds identity ids
  std::vector<Transition> transitions;
  Matrix prototypes;     // n_identities x d
  Matrix camera_shifts;  // cameras x d
};

SynthResult generate(const SynthConfig& config);

}  // namespace hyperlabel
