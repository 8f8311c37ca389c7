#include "hyperlabel/adapter.hpp"

#include <cmath>

#include "hyperlabel/dataset.hpp"
#include "hyperlabel/error.hpp"

namespace hyperlabel {

Adapter::Adapter(Matrix weight, Vector bias) : weight_(std::move(weight)), bias_(std::move(bias)) {
  if (bias_.size() != weight_.cols()) throw ValidationError("adapter: bias/weight shape mismatch");
}

Adapter Adapter::near_identity(Index input_dim, Index output_dim, std::mt19937_64& rng,
                               double noise) {
  std::normal_distribution<double> gauss(0.0, noise);
  Matrix w = Matrix::Identity(input_dim, output_dim);
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) w(i, j) += gauss(rng);
  }
  return Adapter(std::move(w), Vector::Zero(output_dim));
}

Adapter::Activations Adapter::forward(const Matrix& inputs) const {
  if (inputs.cols() != input_dim()) throw ValidationError("adapter: input dimension mismatch");
  Activations a;
  a.pre = inputs * weight_;
  a.pre.rowwise() += bias_.transpose();
  a.unit.resize(a.pre.rows(), a.pre.cols());
  for (Index i = 0; i < a.pre.rows(); ++i) {
    const double norm = a.pre.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericError("adapter: degenerate output for row " + std::to_string(i));
    }
    a.unit.row(i) = a.pre.row(i) / norm;
  }
  return a;
}

Matrix normalize_backward(const Matrix& pre, const Matrix& unit, const Matrix& grad_unit) {
  Matrix out(pre.rows(), pre.cols());
  for (Index i = 0; i < pre.rows(); ++i) {
    const double radial = unit.row(i).dot(grad_unit.row(i));
    out.row(i) = (grad_unit.row(i) - radial * unit.row(i)) / pre.row(i).norm();
  }
  return out;
}

Adapter::Gradients Adapter::backward(const Matrix& inputs, const Activations& acts,
                                     const Matrix& grad_unit) const {
  const Matrix g_pre = normalize_backward(acts.pre, acts.unit, grad_unit);
  return Gradients{inputs.transpose() * g_pre, g_pre.colwise().sum().transpose()};
}

Vector Adapter::parameters() const {
  Vector flat(weight_.size() + bias_.size());
  flat.head(weight_.size()) = Eigen::Map<const Vector>(weight_.data(), weight_.size());
  flat.tail(bias_.size()) = bias_;
  return flat;
}

void Adapter::set_parameters(const Vector& flat) {
  if (flat.size() != weight_.size() + bias_.size()) {
    throw ValidationError("adapter: parameter vector size mismatch");
  }
  Eigen::Map<Vector>(weight_.data(), weight_.size()) = flat.head(weight_.size());
  bias_ = flat.tail(bias_.size());
}

Vector Adapter::flatten(const Gradients& g) {
  Vector flat(g.weight.size() + g.bias.size());
  flat.head(g.weight.size()) = Eigen::Map<const Vector>(g.weight.data(), g.weight.size());
  flat.tail(g.bias.size()) = g.bias;
  return flat;
}

void Adapter::save(const std::filesystem::path& path) const {
  Matrix packed(weight_.rows() + 1, weight_.cols());
  packed.topRows(weight_.rows()) = weight_;
  packed.bottomRows(1) = bias_.transpose();
  write_f32_matrix(path, kAdapterMagic, packed);
}

Adapter Adapter::load(const std::filesystem::path& path) {
  const Matrix packed = read_f32_matrix(path, kAdapterMagic);
  if (packed.rows() < 2) throw ValidationError("adapter file has no weight rows");
  return Adapter(packed.topRows(packed.rows() - 1), packed.bottomRows(1).transpose());
}

AdamW::AdamW(Index size, AdamParams params)
    : params_(params), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void AdamW::step(Vector& params, const Vector& grad, double lr) {
  ++t_;
  m_ = params_.beta1 * m_ + (1.0 - params_.beta1) * grad;
  v_ = params_.beta2 * v_ + (1.0 - params_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t_));
  const Vector update =
      (m_ / c1).array() / ((v_ / c2).array().sqrt() + params_.epsilon);
  params -= lr * (update + params_.weight_decay * params);
}

}  // namespace hyperlabel
