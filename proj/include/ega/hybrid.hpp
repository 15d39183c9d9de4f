#pragma once

#include <optional>

#include "ega/fields.hpp"
#include "ega/mlp.hpp"

namespace ega {

/// Physical core F plus an additive neural correction M_theta. Without a
/// sub-model the system is the core alone.
class HybridSystem {
 public:
  explicit HybridSystem(CoreFieldPtr core, std::optional<MlpSubmodel> submodel = std::nullopt);

  int dim() const { return core_->dim(); }
  const CoreField& core() const { return *core_; }
  const CoreFieldPtr& core_ptr() const { return core_; }
  bool has_submodel() const { return submodel_.has_value(); }
  const MlpSubmodel& submodel() const;
  MlpSubmodel& submodel();
  Eigen::Index param_count() const { return submodel_ ? submodel_->param_count() : 0; }

  /// F(u) + M_theta(u).
  StateVec field(const StateVec& u) const;
  Eigen::MatrixXd field_batch(const Eigen::MatrixXd& u) const;
  DualVec field(const DualVec& u) const;
  /// Tape evaluation; `theta` is the a x 1 parameter node.
  Var field(Tape& tape, Var theta, Var u) const;

  /// The same system with the sub-model removed.
  HybridSystem core_only() const { return HybridSystem(core_); }

 private:
  CoreFieldPtr core_;
  std::optional<MlpSubmodel> submodel_;
};

StateVec hybrid_field(const HybridSystem& sys, const StateVec& u);

}  // namespace ega
