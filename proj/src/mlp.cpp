#include "ega/mlp.hpp"

#include <cmath>
#include <random>

namespace ega {

MlpSubmodel::MlpSubmodel(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)), params_(sizes_) {
  require(sizes_.front() == sizes_.back(), "MlpSubmodel: output width must equal input width");
}

MlpSubmodel MlpSubmodel::random(std::vector<int> layer_sizes, std::uint64_t seed) {
  MlpSubmodel m(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < m.params_.layout().size(); ++l) {
    const double bound = std::sqrt(1.0 / static_cast<double>(m.params_.layout()[l].cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = m.params_.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    auto b = m.params_.bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
  }
  return m;
}

Eigen::VectorXd MlpSubmodel::forward(const Eigen::VectorXd& u) const {
  return forward_batch(u);
}

Eigen::MatrixXd MlpSubmodel::forward_batch(const Eigen::MatrixXd& u) const {
  require(u.rows() == input_dim(), "MlpSubmodel::forward: input width mismatch");
  const std::size_t layers = params_.layout().size();
  Eigen::MatrixXd x = u;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params_.weight(l) * x;
    z.colwise() += params_.bias(l);
    if (l + 1 < layers) z = z.array().tanh().matrix();
    x = std::move(z);
  }
  if (!x.allFinite()) throw NonFiniteError("MlpSubmodel::forward: non-finite output");
  return x;
}

DualVec MlpSubmodel::forward(const DualVec& u) const {
  require(static_cast<int>(u.size()) == input_dim(), "MlpSubmodel::forward: input width mismatch");
  const std::size_t layers = params_.layout().size();
  DualVec x = u;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto w = params_.weight(l);
    const auto b = params_.bias(l);
    DualVec z(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      Dual acc(b(i));
      for (Eigen::Index j = 0; j < w.cols(); ++j) acc += w(i, j) * x[static_cast<std::size_t>(j)];
      z[static_cast<std::size_t>(i)] = (l + 1 < layers) ? tanh(acc) : acc;
    }
    x = std::move(z);
  }
  for (const auto& v : x) {
    if (!v.finite()) throw NonFiniteError("MlpSubmodel::forward: non-finite output");
  }
  return x;
}

Var MlpSubmodel::forward(Tape& tape, Var theta, Var u) const {
  require(theta.rows() == param_count() && theta.cols() == 1, "MlpSubmodel: theta node has wrong shape");
  require(u.rows() == input_dim(), "MlpSubmodel::forward: input width mismatch");
  const auto& layout = params_.layout();
  Var x = u;
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& s = layout[l];
    Var w = tape.slice(theta, s.weight_offset, s.rows, s.cols);
    Var b = tape.slice(theta, s.bias_offset, s.rows, 1);
    x = tape.add_column(tape.matmul(w, x), b);
    if (l + 1 < layout.size()) x = tape.tanh(x);
  }
  return x;
}

Eigen::MatrixXd MlpSubmodel::input_jacobian(const Eigen::VectorXd& u) const {
  return jacobian_input([this](const DualVec& x) { return forward(x); }, u);
}

Eigen::MatrixXd MlpSubmodel::param_jacobian(const Eigen::VectorXd& u) const {
  return jacobian_params(
      [this, &u](Tape& tape, Var theta) { return forward(tape, theta, tape.constant(u)); },
      params_.values());
}

Eigen::VectorXd MlpSubmodel::param_vjp(const Eigen::MatrixXd& u, const Eigen::MatrixXd& cotangent) const {
  require(cotangent.rows() == output_dim() && cotangent.cols() == u.cols(),
          "MlpSubmodel::param_vjp: cotangent shape mismatch");
  Tape tape;
  Var theta = tape.variable(params_.values());
  Var out = forward(tape, theta, tape.constant(u));
  return tape.backward(out, cotangent)[theta].col(0);
}

}  // namespace ega
