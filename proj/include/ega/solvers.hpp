#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ega/hybrid.hpp"

namespace ega {

enum class Scheme { ExplicitEuler, RK4 };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

/// Time-stepping scheme plus the number of internal steps per reported step.
struct SolverKind {
  Scheme scheme = Scheme::RK4;
  int substeps = 1;

  void validate() const;
};

/// States with infinity norm above this abort a rollout.
inline constexpr double kBlowUpThreshold = 1e6;

/// u_t, Psi(u_t), ..., Psi^n(u_t) recorded at the reported stride h.
struct Trajectory {
  std::vector<StateVec> states;
  double h = 0.0;
  SolverKind kind;

  std::size_t n() const { return states.empty() ? 0 : states.size() - 1; }
  const StateVec& last() const { return states.back(); }
};

namespace detail {

inline Eigen::VectorXd axpy(const Eigen::VectorXd& u, double c, const Eigen::VectorXd& k) { return u + c * k; }
inline Eigen::MatrixXd axpy(const Eigen::MatrixXd& u, double c, const Eigen::MatrixXd& k) { return u + c * k; }
inline DualVec axpy(const DualVec& u, double c, const DualVec& k) {
  DualVec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + c * k[i];
  return out;
}
inline Var axpy(Var u, double c, Var k) { return u + c * k; }

/// One reported step of length h of du/dt = f(u), split into kind.substeps
/// internal steps.
template <class State, class F>
State advance(const SolverKind& kind, F&& f, const State& u0, double h) {
  const double dt = h / kind.substeps;
  State u = u0;
  for (int s = 0; s < kind.substeps; ++s) {
    if (kind.scheme == Scheme::ExplicitEuler) {
      u = axpy(u, dt, f(u));
    } else {
      const State k1 = f(u);
      const State k2 = f(axpy(u, 0.5 * dt, k1));
      const State k3 = f(axpy(u, 0.5 * dt, k2));
      const State k4 = f(axpy(u, dt, k3));
      u = axpy(axpy(axpy(axpy(u, dt / 6.0, k1), dt / 3.0, k2), dt / 3.0, k3), dt / 6.0, k4);
    }
  }
  return u;
}

}  // namespace detail

/// One reported step Psi(u).
StateVec step(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h);
/// One reported step for each column of u.
Eigen::MatrixXd step_batch(const SolverKind& kind, const HybridSystem& sys, const Eigen::MatrixXd& u, double h);
/// Explicit Euler reference Psi_E(u) = u + h (F + M)(u).
StateVec euler_step(const HybridSystem& sys, const StateVec& u, double h);

/// n reported steps from u0. Throws BlowUpError with the partial trajectory.
Trajectory rollout(const SolverKind& kind, const HybridSystem& sys, const StateVec& u0, std::size_t n, double h);

/// Exact dPsi(u)/du by forward mode through the solver.
Eigen::MatrixXd step_jacobian(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h);
/// Jacobian of the core-only step Psi_o (tangent linear model).
Eigen::MatrixXd tlm_core(const SolverKind& kind, const CoreField& core, const StateVec& u, double h);
/// tlm_core(u) + h dM(u)/du.
Eigen::MatrixXd extended_tlm(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h);

/// One reported step recorded on a tape; `theta` is the parameter node.
Var step_tape(const SolverKind& kind, const HybridSystem& sys, Tape& tape, Var theta, Var u, double h);

bool exceeds_blowup(const Eigen::MatrixXd& u);

}  // namespace ega
