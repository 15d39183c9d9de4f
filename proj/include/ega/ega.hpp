#pragma once

// Euler gradient approximation of dPsi^n(u)/dtheta for a black-box solver Psi.
//
// For a trajectory u_0 = u, u_j = Psi(u_{j-1}) the approximation is
//
//   A = sum_{j=1}^{n-1} J_j h dM(u_{j-1})/dtheta + h dM(u_{n-1})/dtheta,
//   J_j = D(u_{n-1}) D(u_{n-2}) ... D(u_j),
//
// where D(u) stands for the one-step flow Jacobian dPsi(u)/du or one of its
// approximations (identity, extended TLM, ensemble regression).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ega/solvers.hpp"

namespace ega {

enum class JacobianMethod { Exact, Static, Tlm, Etlm };

std::string method_name(JacobianMethod m);
JacobianMethod parse_method(const std::string& s);

struct JacobianMode {
  JacobianMethod method = JacobianMethod::Static;
  int etlm_members = 5;
  double etlm_scale = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// d x a approximation of dPsi^n(u)/dtheta.
struct SolverGradient {
  Eigen::MatrixXd matrix;
  JacobianMode mode;
  std::size_t n = 0;
  double h = 0.0;
};

struct EtlmEstimate {
  Eigen::MatrixXd jacobian;
  int rank = 0;
  bool truncated = false;  // some directions fell under the eigenvalue cut
};

/// Least-squares Jacobian fit from K perturbed one-step forecasts.
EtlmEstimate etlm_jacobian(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h, int members,
                           double scale, std::uint64_t seed);

/// D(u_i) for recorded state i under the selected method.
Eigen::MatrixXd flow_step_jacobian(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode,
                                   std::size_t i, int* rank_deficient = nullptr);

struct FlowJacobianChain {
  /// products[j-1] = J_j for j = 1 .. n-1.
  std::vector<Eigen::MatrixXd> products;
  /// Number of ETLM fits that needed eigenvalue truncation.
  int rank_deficient = 0;
};

FlowJacobianChain flow_jacobian_chain(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode);

SolverGradient assemble_solver_gradient(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode);

/// A_j for every horizon j = 1 .. n, built incrementally:
/// A_1 = h dM(u_0), A_j = D(u_{j-1}) A_{j-1} + h dM(u_{j-1}).
std::vector<SolverGradient> assemble_horizon_gradients(const Trajectory& traj, const HybridSystem& sys,
                                                       const JacobianMode& mode);

/// Reverse-mode dPsi^n(u0)/dtheta through the solver unrolled on a tape.
SolverGradient exact_solver_gradient(const HybridSystem& sys, const StateVec& u0, std::size_t n, double h,
                                     const SolverKind& kind, std::size_t tape_cap = Tape::kDefaultMaxElements);

/// v + w A for a single observed horizon.
Eigen::VectorXd online_gradient(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const SolverGradient& a);
/// v + sum_j w_j A_j for a loss over every intermediate horizon.
Eigen::VectorXd online_gradient(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& w,
                                const std::vector<SolverGradient>& a);

/// w_j = (2/n)(u_j - target_j) for the mean-over-horizon squared error.
std::vector<Eigen::VectorXd> loss_state_gradients(const Trajectory& traj, const std::vector<StateVec>& targets);

/// Cotangents that contract the horizon gradients with w in one backward
/// recursion: column i-1 holds h * lambda_i with lambda_n = w_n and
/// lambda_i = w_i + D(u_i)^T lambda_{i+1}. Then
/// sum_j w_j A_j = sum_i (h lambda_i)^T dM(u_{i-1})/dtheta.
Eigen::MatrixXd contracted_cotangents(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode,
                                      const std::vector<Eigen::VectorXd>& w);

/// Online-loss gradient for one sample through the EGA assembly.
Eigen::VectorXd ega_loss_gradient(const HybridSystem& sys, const SolverKind& kind, const StateVec& anchor,
                                  const std::vector<StateVec>& targets, double h, const JacobianMode& mode);

/// Online loss (1/n) sum_j |target_j - Psi^j(anchor)|^2 differentiated on the tape.
Eigen::VectorXd exact_loss_gradient(const HybridSystem& sys, const SolverKind& kind, const StateVec& anchor,
                                    const std::vector<StateVec>& targets, double h);

}  // namespace ega
