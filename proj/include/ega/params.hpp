#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace ega {

/// Position of one dense layer's weights and bias inside the flat vector.
/// Weights are stored column-major.
struct LayerSlot {
  Eigen::Index rows = 0;  // fan-out
  Eigen::Index cols = 0;  // fan-in
  Eigen::Index weight_offset = 0;
  Eigen::Index bias_offset = 0;
};

struct LayerParams {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// Where a flat index lands inside the layered network.
struct ParamLocation {
  std::size_t layer = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;  // -1 for a bias entry
};

/// Flat parameter vector theta plus the layout that maps it onto layers.
class ParamVector {
 public:
  ParamVector() = default;
  /// Zero parameters for a network with the given widths (input first).
  explicit ParamVector(const std::vector<int>& layer_sizes);

  static ParamVector flatten(const std::vector<LayerParams>& layers);
  std::vector<LayerParams> unflatten() const;

  Eigen::Index size() const { return theta_.size(); }
  const Eigen::VectorXd& values() const { return theta_; }
  Eigen::VectorXd& values() { return theta_; }
  void assign(const Eigen::VectorXd& theta);

  const std::vector<LayerSlot>& layout() const { return layout_; }
  ParamLocation locate(Eigen::Index flat) const;

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

 private:
  Eigen::VectorXd theta_;
  std::vector<LayerSlot> layout_;
};

}  // namespace ega
