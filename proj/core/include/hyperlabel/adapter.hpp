#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "hyperlabel/types.hpp"

namespace hyperlabel {

// Trainable embedding head: f(x) = normalize(Wᵀx + b).
class Adapter {
 public:
  Adapter() = default;
  Adapter(Matrix weight, Vector bias);

  // W = I (d_in x d_out, truncated or zero-padded) plus N(0, noise^2), b = 0.
  static Adapter near_identity(Index input_dim, Index output_dim, std::mt19937_64& rng,
                               double noise = 1e-3);

  Index input_dim() const { return weight_.rows(); }
  Index output_dim() const { return weight_.cols(); }
  const Matrix& weight() const { return weight_; }
  const Vector& bias() const { return bias_; }

  struct Activations {
    Matrix pre;   // Wᵀx + b per row
    Matrix unit;  // normalized rows
  };

  Activations forward(const Matrix& inputs) const;
  Matrix embed(const Matrix& inputs) const { return forward(inputs).unit; }

  struct Gradients {
    Matrix weight;
    Vector bias;
  };

  Gradients backward(const Matrix& inputs, const Activations& acts, const Matrix& grad_unit) const;

  // Flattened (W row-major, then b) view used by the optimizer.
  Vector parameters() const;
  void set_parameters(const Vector& flat);
  static Vector flatten(const Gradients& g);

  // "HLAD" matrix file holding W with b appended as a final row.
  void save(const std::filesystem::path& path) const;
  static Adapter load(const std::filesystem::path& path);

 private:
  Matrix weight_;
  Vector bias_;
};

// Pulls a gradient taken w.r.t. unit rows back through row normalization:
// g_pre = (g - u (uᵀg)) / ‖pre‖.
Matrix normalize_backward(const Matrix& pre, const Matrix& unit, const Matrix& grad_unit);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 3e-4;
};

// First/second-moment adaptive optimizer with decoupled weight decay.
class AdamW {
 public:
  AdamW(Index size, AdamParams params);

  void step(Vector& params, const Vector& grad, double lr);
  std::int64_t steps() const { return t_; }

 private:
  AdamParams params_;
  Vector m_;
  Vector v_;
  std::int64_t t_ = 0;
};

}  // namespace hyperlabel
