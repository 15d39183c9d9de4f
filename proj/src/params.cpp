#include "ega/params.hpp"

#include "ega/errors.hpp"

namespace ega {

ParamVector::ParamVector(const std::vector<int>& layer_sizes) {
  require(layer_sizes.size() >= 2, "ParamVector: need at least input and output widths");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    require(layer_sizes[l] > 0 && layer_sizes[l + 1] > 0, "ParamVector: widths must be positive");
    LayerSlot slot;
    slot.cols = layer_sizes[l];
    slot.rows = layer_sizes[l + 1];
    slot.weight_offset = offset;
    offset += slot.rows * slot.cols;
    slot.bias_offset = offset;
    offset += slot.rows;
    layout_.push_back(slot);
  }
  theta_ = Eigen::VectorXd::Zero(offset);
}

ParamVector ParamVector::flatten(const std::vector<LayerParams>& layers) {
  require(!layers.empty(), "ParamVector::flatten: no layers");
  std::vector<int> sizes{static_cast<int>(layers.front().weight.cols())};
  for (const auto& l : layers) {
    require(l.bias.size() == l.weight.rows(), "ParamVector::flatten: bias length mismatch");
    require(static_cast<int>(l.weight.cols()) == sizes.back(), "ParamVector::flatten: widths do not chain");
    sizes.push_back(static_cast<int>(l.weight.rows()));
  }
  ParamVector p(sizes);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    p.weight(i) = layers[i].weight;
    p.bias(i) = layers[i].bias;
  }
  return p;
}

std::vector<LayerParams> ParamVector::unflatten() const {
  std::vector<LayerParams> out;
  out.reserve(layout_.size());
  for (std::size_t i = 0; i < layout_.size(); ++i) out.push_back({weight(i), bias(i)});
  return out;
}

void ParamVector::assign(const Eigen::VectorXd& theta) {
  require(theta.size() == theta_.size(), "ParamVector::assign: length mismatch");
  theta_ = theta;
}

ParamLocation ParamVector::locate(Eigen::Index flat) const {
  require(flat >= 0 && flat < theta_.size(), "ParamVector::locate: index out of range");
  for (std::size_t l = 0; l < layout_.size(); ++l) {
    const auto& s = layout_[l];
    if (flat < s.bias_offset) {
      const Eigen::Index k = flat - s.weight_offset;
      return {l, k % s.rows, k / s.rows};
    }
    if (flat < s.bias_offset + s.rows) return {l, flat - s.bias_offset, -1};
  }
  throw ContractViolation("ParamVector::locate: inconsistent layout");
}

Eigen::Map<const Eigen::MatrixXd> ParamVector::weight(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return {theta_.data() + s.weight_offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::VectorXd> ParamVector::bias(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return {theta_.data() + s.bias_offset, s.rows};
}

Eigen::Map<Eigen::MatrixXd> ParamVector::weight(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return {theta_.data() + s.weight_offset, s.rows, s.cols};
}

Eigen::Map<Eigen::VectorXd> ParamVector::bias(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return {theta_.data() + s.bias_offset, s.rows};
}

}  // namespace ega
