#include "ega/solvers.hpp"

namespace ega {

std::string scheme_name(Scheme s) { return s == Scheme::ExplicitEuler ? "euler" : "rk4"; }

Scheme parse_scheme(const std::string& s) {
  if (s == "euler") return Scheme::ExplicitEuler;
  if (s == "rk4") return Scheme::RK4;
  throw ContractViolation("unknown solver scheme '" + s + "' (expected euler or rk4)");
}

void SolverKind::validate() const { require(substeps >= 1, "SolverKind: substeps must be >= 1"); }

bool exceeds_blowup(const Eigen::MatrixXd& u) {
  return !u.allFinite() || (u.size() > 0 && u.cwiseAbs().maxCoeff() > kBlowUpThreshold);
}

StateVec step(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h) {
  kind.validate();
  require(h > 0.0, "step: h must be positive");
  require(u.size() == sys.dim(), "step: state dimension mismatch");
  StateVec next;
  try {
    next = detail::advance(kind, [&](const StateVec& x) { return sys.field(x); }, u, h);
  } catch (const NonFiniteError&) {
    throw BlowUpError(1, {u});
  }
  if (exceeds_blowup(next)) throw BlowUpError(1, {u});
  return next;
}

Eigen::MatrixXd step_batch(const SolverKind& kind, const HybridSystem& sys, const Eigen::MatrixXd& u, double h) {
  kind.validate();
  require(h > 0.0, "step_batch: h must be positive");
  require(u.rows() == sys.dim(), "step_batch: state dimension mismatch");
  return detail::advance(kind, [&](const Eigen::MatrixXd& x) { return sys.field_batch(x); }, u, h);
}

StateVec euler_step(const HybridSystem& sys, const StateVec& u, double h) {
  return step({Scheme::ExplicitEuler, 1}, sys, u, h);
}

Trajectory rollout(const SolverKind& kind, const HybridSystem& sys, const StateVec& u0, std::size_t n, double h) {
  kind.validate();
  require(n >= 1, "rollout: n must be >= 1");
  require(h > 0.0, "rollout: h must be positive");
  require(u0.size() == sys.dim(), "rollout: state dimension mismatch");
  Trajectory traj;
  traj.h = h;
  traj.kind = kind;
  traj.states.reserve(n + 1);
  traj.states.push_back(u0);
  for (std::size_t j = 1; j <= n; ++j) {
    StateVec next;
    try {
      next = detail::advance(kind, [&](const StateVec& x) { return sys.field(x); }, traj.states.back(), h);
    } catch (const NonFiniteError&) {
      throw BlowUpError(j, traj.states);
    }
    if (exceeds_blowup(next)) throw BlowUpError(j, traj.states);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Eigen::MatrixXd step_jacobian(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h) {
  kind.validate();
  return jacobian_input(
      [&](const DualVec& x) { return detail::advance(kind, [&](const DualVec& y) { return sys.field(y); }, x, h); },
      u);
}

Eigen::MatrixXd tlm_core(const SolverKind& kind, const CoreField& core, const StateVec& u, double h) {
  kind.validate();
  return jacobian_input(
      [&](const DualVec& x) { return detail::advance(kind, [&](const DualVec& y) { return core.eval(y); }, x, h); },
      u);
}

Eigen::MatrixXd extended_tlm(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h) {
  Eigen::MatrixXd j = tlm_core(kind, sys.core(), u, h);
  if (sys.has_submodel()) j += h * sys.submodel().input_jacobian(u);
  return j;
}

Var step_tape(const SolverKind& kind, const HybridSystem& sys, Tape& tape, Var theta, Var u, double h) {
  kind.validate();
  return detail::advance(kind, [&](Var x) { return sys.field(tape, theta, x); }, u, h);
}

}  // namespace ega
