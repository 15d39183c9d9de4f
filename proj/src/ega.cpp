#include "ega/ega.hpp"

#include <random>

namespace ega {

std::string method_name(JacobianMethod m) {
  switch (m) {
    case JacobianMethod::Exact: return "exact";
    case JacobianMethod::Static: return "static";
    case JacobianMethod::Tlm: return "tlm";
    case JacobianMethod::Etlm: return "etlm";
  }
  return "unknown";
}

JacobianMethod parse_method(const std::string& s) {
  if (s == "exact") return JacobianMethod::Exact;
  if (s == "static") return JacobianMethod::Static;
  if (s == "tlm") return JacobianMethod::Tlm;
  if (s == "etlm") return JacobianMethod::Etlm;
  throw ContractViolation("unknown Jacobian method '" + s + "' (expected exact, static, tlm or etlm)");
}

void JacobianMode::validate() const {
  if (method == JacobianMethod::Etlm) {
    require(etlm_members >= 2, "ETLM needs at least 2 ensemble members");
    require(etlm_scale >= 0.0, "ETLM perturbation scale must be non-negative");
  }
}

EtlmEstimate etlm_jacobian(const SolverKind& kind, const HybridSystem& sys, const StateVec& u, double h, int members,
                           double scale, std::uint64_t seed) {
  require(members >= 2, "etlm_jacobian: need K >= 2");
  const Eigen::Index d = u.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd x0(d, members);
  for (int k = 0; k < members; ++k)
    for (Eigen::Index i = 0; i < d; ++i) x0(i, k) = u(i) + scale * normal(rng);
  Eigen::MatrixXd x1(d, members);
  for (int k = 0; k < members; ++k) x1.col(k) = step(kind, sys, x0.col(k), h);

  const Eigen::MatrixXd du0 = x0.colwise() - x0.rowwise().mean();
  const Eigen::MatrixXd du1 = x1.colwise() - x1.rowwise().mean();

  const Eigen::MatrixXd cov = du0 * du0.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  if (!(top > 0.0)) throw DegenerateEnsembleError("etlm_jacobian: ensemble perturbations have no spread");

  const double cut = 1e-10 * top;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(d);
  EtlmEstimate out;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda(i) > cut) {
      inv(i) = 1.0 / lambda(i);
      ++out.rank;
    }
  }
  out.truncated = out.rank < d;
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::MatrixXd pinv = v * inv.asDiagonal() * v.transpose();
  out.jacobian = du1 * du0.transpose() * pinv;
  return out;
}

namespace {

std::uint64_t state_seed(std::uint64_t seed, std::size_t i) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(i)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

void check_traj(const Trajectory& traj, const HybridSystem& sys) {
  require(traj.n() >= 1, "trajectory must hold at least one step");
  require(traj.states.front().size() == sys.dim(), "trajectory dimension differs from the system");
  require(sys.has_submodel(), "EGA needs a sub-model");
}

}  // namespace

Eigen::MatrixXd flow_step_jacobian(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode,
                                   std::size_t i, int* rank_deficient) {
  const StateVec& u = traj.states.at(i);
  switch (mode.method) {
    case JacobianMethod::Exact:
      return step_jacobian(traj.kind, sys, u, traj.h);
    case JacobianMethod::Static:
      return Eigen::MatrixXd::Identity(u.size(), u.size());
    case JacobianMethod::Tlm:
      return extended_tlm(traj.kind, sys, u, traj.h);
    case JacobianMethod::Etlm: {
      auto est = etlm_jacobian(traj.kind, sys, u, traj.h, mode.etlm_members, mode.etlm_scale,
                               state_seed(mode.seed, i));
      if (est.truncated && rank_deficient) ++*rank_deficient;
      return est.jacobian;
    }
  }
  throw ContractViolation("flow_step_jacobian: unknown method");
}

FlowJacobianChain flow_jacobian_chain(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode) {
  mode.validate();
  require(traj.n() >= 1, "flow_jacobian_chain: trajectory must hold at least one step");
  const std::size_t n = traj.n();
  FlowJacobianChain chain;
  if (n < 2) return chain;
  chain.products.resize(n - 1);
  // J_{n-1} = D(u_{n-1}); J_j = J_{j+1} D(u_j).
  chain.products[n - 2] = flow_step_jacobian(traj, sys, mode, n - 1, &chain.rank_deficient);
  for (std::size_t j = n - 2; j >= 1; --j) {
    chain.products[j - 1] = chain.products[j] * flow_step_jacobian(traj, sys, mode, j, &chain.rank_deficient);
  }
  return chain;
}

SolverGradient assemble_solver_gradient(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode) {
  check_traj(traj, sys);
  const std::size_t n = traj.n();
  const double h = traj.h;
  const MlpSubmodel& m = sys.submodel();
  const FlowJacobianChain chain = flow_jacobian_chain(traj, sys, mode);

  Eigen::MatrixXd a = h * m.param_jacobian(traj.states[n - 1]);
  for (std::size_t j = 1; j <= n - 1; ++j) {
    a.noalias() += chain.products[j - 1] * (h * m.param_jacobian(traj.states[j - 1]));
  }
  return {std::move(a), mode, n, h};
}

std::vector<SolverGradient> assemble_horizon_gradients(const Trajectory& traj, const HybridSystem& sys,
                                                       const JacobianMode& mode) {
  check_traj(traj, sys);
  mode.validate();
  const std::size_t n = traj.n();
  const double h = traj.h;
  const MlpSubmodel& m = sys.submodel();
  std::vector<SolverGradient> out;
  out.reserve(n);
  Eigen::MatrixXd a = h * m.param_jacobian(traj.states[0]);
  out.push_back({a, mode, 1, h});
  for (std::size_t j = 2; j <= n; ++j) {
    const Eigen::MatrixXd d = flow_step_jacobian(traj, sys, mode, j - 1);
    Eigen::MatrixXd next = d * a;
    next.noalias() += h * m.param_jacobian(traj.states[j - 1]);
    a = std::move(next);
    out.push_back({a, mode, j, h});
  }
  return out;
}

SolverGradient exact_solver_gradient(const HybridSystem& sys, const StateVec& u0, std::size_t n, double h,
                                     const SolverKind& kind, std::size_t tape_cap) {
  require(sys.has_submodel(), "exact_solver_gradient: needs a sub-model");
  require(n >= 1 && h > 0.0, "exact_solver_gradient: need n >= 1 and h > 0");
  require(u0.size() == sys.dim(), "exact_solver_gradient: state dimension mismatch");
  Tape tape(tape_cap);
  Var theta = tape.variable(sys.submodel().params().values());
  Var u = tape.constant(u0);
  for (std::size_t j = 0; j < n; ++j) u = step_tape(kind, sys, tape, theta, u, h);
  const Eigen::Index d = u0.size();
  Eigen::MatrixXd jac(d, theta.rows());
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(d, 1);
    seed(i, 0) = 1.0;
    jac.row(i) = tape.backward(u, seed)[theta].col(0).transpose();
  }
  JacobianMode mode;
  mode.method = JacobianMethod::Exact;
  return {std::move(jac), mode, n, h};
}

Eigen::VectorXd online_gradient(const Eigen::VectorXd& v, const Eigen::VectorXd& w, const SolverGradient& a) {
  require(w.size() == a.matrix.rows(), "online_gradient: w length differs from state dimension");
  require(v.size() == a.matrix.cols(), "online_gradient: v length differs from parameter count");
  return v + a.matrix.transpose() * w;
}

Eigen::VectorXd online_gradient(const Eigen::VectorXd& v, const std::vector<Eigen::VectorXd>& w,
                                const std::vector<SolverGradient>& a) {
  require(w.size() == a.size(), "online_gradient: horizon mismatch between w and A");
  Eigen::VectorXd g = v;
  for (std::size_t j = 0; j < w.size(); ++j) {
    require(w[j].size() == a[j].matrix.rows() && v.size() == a[j].matrix.cols(),
            "online_gradient: shape mismatch");
    g.noalias() += a[j].matrix.transpose() * w[j];
  }
  return g;
}

std::vector<Eigen::VectorXd> loss_state_gradients(const Trajectory& traj, const std::vector<StateVec>& targets) {
  const std::size_t n = traj.n();
  require(targets.size() >= n, "loss_state_gradients: fewer targets than steps");
  std::vector<Eigen::VectorXd> w(n);
  for (std::size_t j = 1; j <= n; ++j) {
    w[j - 1] = (2.0 / static_cast<double>(n)) * (traj.states[j] - targets[j - 1]);
  }
  return w;
}

Eigen::MatrixXd contracted_cotangents(const Trajectory& traj, const HybridSystem& sys, const JacobianMode& mode,
                                      const std::vector<Eigen::VectorXd>& w) {
  mode.validate();
  const std::size_t n = traj.n();
  require(w.size() == n, "contracted_cotangents: need one w per step");
  Eigen::MatrixXd out(sys.dim(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd lambda = w[n - 1];
  out.col(static_cast<Eigen::Index>(n - 1)) = traj.h * lambda;
  for (std::size_t i = n - 1; i >= 1; --i) {
    if (mode.method == JacobianMethod::Static) {
      lambda += w[i - 1];
    } else {
      lambda = flow_step_jacobian(traj, sys, mode, i).transpose() * lambda + w[i - 1];
    }
    out.col(static_cast<Eigen::Index>(i - 1)) = traj.h * lambda;
  }
  return out;
}

Eigen::VectorXd ega_loss_gradient(const HybridSystem& sys, const SolverKind& kind, const StateVec& anchor,
                                  const std::vector<StateVec>& targets, double h, const JacobianMode& mode) {
  const Trajectory traj = rollout(kind, sys, anchor, targets.size(), h);
  const auto w = loss_state_gradients(traj, targets);
  const auto a = assemble_horizon_gradients(traj, sys, mode);
  return online_gradient(Eigen::VectorXd::Zero(sys.param_count()), w, a);
}

Eigen::VectorXd exact_loss_gradient(const HybridSystem& sys, const SolverKind& kind, const StateVec& anchor,
                                    const std::vector<StateVec>& targets, double h) {
  require(!targets.empty(), "exact_loss_gradient: no targets");
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  return grad_scalar(
      [&](Tape& tape, Var theta) {
        Var u = tape.constant(anchor);
        Var loss = tape.constant(Eigen::MatrixXd::Zero(1, 1));
        for (const auto& target : targets) {
          u = step_tape(kind, sys, tape, theta, u, h);
          loss = loss + tape.sum(square(u - tape.constant(target)));
        }
        return inv_n * loss;
      },
      sys.submodel().params().values());
}

}  // namespace ega
