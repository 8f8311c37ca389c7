#include "hyperlabel/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hyperlabel/error.hpp"

namespace hyperlabel {

void SynthConfig::validate() const {
  if (n_identities < 2) throw ConfigError("synth: n_identities must be >= 2");
  if (cameras < 2) throw ConfigError("synth: cameras must be >= 2");
  if (images_per_identity < 1) throw ConfigError("synth: images_per_identity must be >= 1");
  if (embed_dim < 1) throw ConfigError("synth: embed_dim must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("synth: noise must be >= 0");
  if (!(camera_shift >= 0.0)) throw ConfigError("synth: camera_shift must be >= 0");
  if (visits_per_identity < 1) throw ConfigError("synth: visits_per_identity must be >= 1");
  if (dwell_frames < 1) throw ConfigError("synth: dwell_frames must be >= 1");
  if (frame_horizon < 1) throw ConfigError("synth: frame_horizon must be >= 1");
  if (!topology.empty()) {
    if (topology.size() != static_cast<std::size_t>(cameras)) {
      throw ConfigError("synth: topology must be cameras x cameras");
    }
    for (const auto& row : topology) {
      if (row.size() != static_cast<std::size_t>(cameras)) {
        throw ConfigError("synth: topology must be cameras x cameras");
      }
      for (const auto& t : row) {
        if (!(t.mean > 0.0) || !(t.stddev >= 0.0)) {
          throw ConfigError("synth: transition timings need mean > 0 and stddev >= 0");
        }
      }
    }
  }
  if (prototype_mode != PrototypeMode::kRandom && n_identities % 2 != 0) {
    throw ConfigError("synth: paired prototype modes need an even identity count");
  }
  if (prototype_mode == PrototypeMode::kTwinPairs &&
      (twin_gap_min < 0 || twin_gap_max < twin_gap_min)) {
    throw ConfigError("synth: invalid twin gap range");
  }
}

TransitionTiming SynthConfig::timing(int from, int to) const {
  if (!topology.empty()) return topology[from][to];
  const int raw = std::abs(from - to);
  const int ring = std::min(raw, cameras - raw);
  const double mean = 200.0 + 400.0 * ring;
  return {mean, 0.1 * mean};
}

namespace {

Vector random_unit(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(d);
  double norm = 0.0;
  do {
    for (Index k = 0; k < d; ++k) v[k] = gauss(rng);
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

std::int64_t sample_transition(const TransitionTiming& t, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(t.mean, t.stddev);
  for (;;) {
    const double x = std::round(gauss(rng));
    if (x >= 1.0) return static_cast<std::int64_t>(x);
  }
}

}  // namespace

SynthResult generate(const SynthConfig& config) {
  config.validate();
  const Index d = config.embed_dim;
  std::mt19937_64 world(config.seed);

  SynthResult out;
  out.camera_shifts.resize(config.cameras, d);
  for (int c = 0; c < config.cameras; ++c) {
    out.camera_shifts.row(c) = config.camera_shift * random_unit(d, world).transpose();
  }
  out.prototypes.resize(config.n_identities, d);
  for (int id = 0; id < config.n_identities; ++id) {
    const bool second = id % 2 == 1;
    Vector p = random_unit(d, world);
    if (second && config.prototype_mode == PrototypeMode::kAntipodalPairs) {
      p = -out.prototypes.row(id - 1).transpose();
    } else if (second && config.prototype_mode == PrototypeMode::kTwinPairs) {
      p = (out.prototypes.row(id - 1).transpose() + config.twin_noise * p).normalized();
    }
    out.prototypes.row(id) = p.transpose();
  }

  struct Sighting {
    int identity;
    int camera;
    std::int64_t time;
    Vector embedding;
  };
  std::vector<Sighting> sightings;
  sightings.reserve(static_cast<std::size_t>(config.n_identities) * config.images_per_identity);

  const int visits = std::min(config.visits_per_identity, config.images_per_identity);
  std::vector<std::int64_t> starts(static_cast<std::size_t>(config.n_identities), 0);
  for (int id = 0; id < config.n_identities; ++id) {
    // Per-identity stream keeps trajectories independent of identity count.
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(id) + 1, std::uint64_t{0x5eed}};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<int> first_camera(0, config.cameras - 1);
    std::uniform_int_distribution<int> other_camera(0, config.cameras - 2);
    std::uniform_int_distribution<int> gap(1, 2 * config.dwell_frames - 1 > 0 ? 2 * config.dwell_frames - 1 : 1);
    std::normal_distribution<double> gauss(0.0, config.noise / std::sqrt(static_cast<double>(d)));

    std::vector<Sighting> local;
    int camera = first_camera(rng);
    std::int64_t t = 0;
    for (int v = 0; v < visits; ++v) {
      if (v > 0) {
        int next = other_camera(rng);
        if (next >= camera) ++next;
        const std::int64_t dt = sample_transition(config.timing(camera, next), rng);
        out.transitions.push_back({id, camera, next, dt});
        camera = next;
        t += dt;
      }
      const int count = config.images_per_identity / visits +
                        (v < config.images_per_identity % visits ? 1 : 0);
      for (int k = 0; k < count; ++k) {
        if (k > 0) t += gap(rng);
        Vector e = out.prototypes.row(id).transpose() + out.camera_shifts.row(camera).transpose();
        for (Index j = 0; j < d; ++j) e[j] += gauss(rng);
        local.push_back({id, camera, t, std::move(e)});
      }
    }
    const std::int64_t span = t;
    if (span > config.frame_horizon) {
      throw ConfigError("synth: trajectory of " + std::to_string(span) +
                        " frames does not fit frame_horizon " +
                        std::to_string(config.frame_horizon));
    }
    std::int64_t start = std::uniform_int_distribution<std::int64_t>(0, config.frame_horizon - span)(rng);
    if (config.prototype_mode == PrototypeMode::kTwinPairs && id % 2 == 1) {
      const std::int64_t offset =
          std::uniform_int_distribution<std::int64_t>(config.twin_gap_min, config.twin_gap_max)(rng);
      start = starts[id - 1] + offset;
    }
    starts[id] = start;
    for (auto& s : local) {
      s.time += start;
      sightings.push_back(std::move(s));
    }
  }

  // Records ordered by time so that indices carry no identity information.
  std::stable_sort(sightings.begin(), sightings.end(),
                   [](const Sighting& a, const Sighting& b) { return a.time < b.time; });
  const auto n = static_cast<Index>(sightings.size());
  Matrix raw(n, d);
  std::vector<int> cameras(static_cast<std::size_t>(n));
  std::vector<std::int64_t> times(static_cast<std::size_t>(n));
  std::vector<int> identities(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    raw.row(i) = sightings[i].embedding.transpose();
    cameras[i] = sightings[i].camera;
    times[i] = sightings[i].time;
    identities[i] = sightings[i].identity;
  }
  out.dataset = make_dataset(std::move(raw), std::move(cameras), std::move(times),
                             std::move(identities), config.cameras);
  return out;
}

}  // namespace hyperlabel
