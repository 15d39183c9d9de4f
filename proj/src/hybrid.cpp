#include "ega/hybrid.hpp"

namespace ega {

HybridSystem::HybridSystem(CoreFieldPtr core, std::optional<MlpSubmodel> submodel)
    : core_(std::move(core)), submodel_(std::move(submodel)) {
  require(core_ != nullptr, "HybridSystem: null core");
  if (submodel_) {
    require(submodel_->input_dim() == core_->dim(), "HybridSystem: sub-model width differs from core dimension");
  }
}

const MlpSubmodel& HybridSystem::submodel() const {
  require(submodel_.has_value(), "HybridSystem: no sub-model attached");
  return *submodel_;
}

MlpSubmodel& HybridSystem::submodel() {
  require(submodel_.has_value(), "HybridSystem: no sub-model attached");
  return *submodel_;
}

StateVec HybridSystem::field(const StateVec& u) const {
  StateVec f = core_->eval(u);
  if (submodel_) f += submodel_->forward(u);
  return f;
}

Eigen::MatrixXd HybridSystem::field_batch(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd f = core_->eval_batch(u);
  if (submodel_) f += submodel_->forward_batch(u);
  return f;
}

DualVec HybridSystem::field(const DualVec& u) const {
  DualVec f = core_->eval(u);
  if (submodel_) {
    const DualVec m = submodel_->forward(u);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += m[i];
  }
  return f;
}

Var HybridSystem::field(Tape& tape, Var theta, Var u) const {
  Var f = core_->eval(tape, u);
  if (submodel_) f = f + submodel_->forward(tape, theta, u);
  return f;
}

StateVec hybrid_field(const HybridSystem& sys, const StateVec& u) { return sys.field(u); }

}  // namespace ega
