#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "ega/jacobian.hpp"
#include "ega/params.hpp"
#include "ega/tape.hpp"

namespace ega {

/// Fully connected network: tanh on hidden layers, linear output, biases on
/// every layer. Output width equals input width so the network can be added
/// to a vector field.
class MlpSubmodel {
 public:
  /// Zero-initialised network with the given widths (input first).
  explicit MlpSubmodel(std::vector<int> layer_sizes);

  /// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) per layer.
  static MlpSubmodel random(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Eigen::Index param_count() const { return params_.size(); }

  const ParamVector& params() const { return params_; }
  ParamVector& params() { return params_; }
  void set_params(const Eigen::VectorXd& theta) { params_.assign(theta); }

  Eigen::VectorXd forward(const Eigen::VectorXd& u) const;
  /// One state per column.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& u) const;
  DualVec forward(const DualVec& u) const;
  /// Forward on the tape with theta supplied as an a x 1 node.
  Var forward(Tape& tape, Var theta, Var u) const;

  /// d x d input Jacobian at u (forward mode).
  Eigen::MatrixXd input_jacobian(const Eigen::VectorXd& u) const;
  /// d x a parameter Jacobian at u (reverse mode).
  Eigen::MatrixXd param_jacobian(const Eigen::VectorXd& u) const;
  /// sum_k cotangent.col(k)^T * dM(u.col(k))/dtheta, one reverse sweep.
  Eigen::VectorXd param_vjp(const Eigen::MatrixXd& u, const Eigen::MatrixXd& cotangent) const;

 private:
  std::vector<int> sizes_;
  ParamVector params_;
};

}  // namespace ega
