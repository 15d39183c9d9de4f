#include "ega/experiments.hpp"

#include <cmath>

namespace ega {

std::vector<double> log_spaced(double hi, double lo, std::size_t count) {
  require(hi > 0.0 && lo > 0.0 && count >= 1, "log_spaced: need positive bounds and count >= 1");
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = hi;
    return out;
  }
  const double a = std::log10(hi), b = std::log10(lo);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

GradCheckResult run_grad_check(const GradCheckSpec& spec) {
  require(!spec.hs.empty() && !spec.methods.empty(), "run_grad_check: need h values and methods");
  require(spec.anchors >= 1 && spec.seeds >= 1, "run_grad_check: need anchors and seeds >= 1");
  const Testbed bed = lorenz63_testbed(spec.system);
  const HybridSystem truth(bed.truth);
  const SolverKind truth_kind{Scheme::RK4, spec.truth_substeps};
  StateVec z = StateVec::Ones(3);
  z = rollout(truth_kind, truth, z, spec.burn_in, 0.01).last();

  const std::size_t nm = spec.methods.size();
  GradCheckResult result;
  std::vector<std::vector<std::pair<double, double>>> loss_pts(nm), solver_pts(nm);
  for (double h : spec.hs) {
    const std::size_t n = spec.horizon_time > 0.0
                              ? static_cast<std::size_t>(std::llround(spec.horizon_time / h))
                              : spec.horizon;
    require(n >= 1, "run_grad_check: horizon rounds to zero");
    const Trajectory data = rollout(truth_kind, truth, z, spec.anchors + n, h);
    std::vector<double> eps(nm, 0.0), seps(nm, 0.0);
    for (std::size_t s = 0; s < spec.seeds; ++s) {
      const HybridSystem sys(bed.core, MlpSubmodel::random(spec.layers, spec.seed + s));
      const Eigen::Index a = sys.param_count();
      Eigen::VectorXd g_exact = Eigen::VectorXd::Zero(a);
      std::vector<Eigen::VectorXd> g(nm, Eigen::VectorXd::Zero(a));
      for (std::size_t k = 0; k < spec.anchors; ++k) {
        const StateVec& anchor = data.states[k];
        const std::vector<StateVec> targets(data.states.begin() + static_cast<std::ptrdiff_t>(k + 1),
                                            data.states.begin() + static_cast<std::ptrdiff_t>(k + 1 + n));
        g_exact += exact_loss_gradient(sys, spec.solver, anchor, targets, h);
        const SolverGradient exact = exact_solver_gradient(sys, anchor, n, h, spec.solver);
        const Trajectory traj = rollout(spec.solver, sys, anchor, n, h);
        for (std::size_t q = 0; q < nm; ++q) {
          JacobianMode mode;
          mode.method = spec.methods[q];
          mode.seed = spec.seed + k;
          g[q] += ega_loss_gradient(sys, spec.solver, anchor, targets, h, mode);
          const SolverGradient approx = assemble_solver_gradient(traj, sys, mode);
          seps[q] += (exact.matrix - approx.matrix).cwiseAbs().mean();
        }
      }
      const double inv = 1.0 / static_cast<double>(spec.anchors);
      for (std::size_t q = 0; q < nm; ++q) eps[q] += gradient_error(inv * g_exact, inv * g[q]);
    }
    for (std::size_t q = 0; q < nm; ++q) {
      GradCheckRow row;
      row.h = h;
      row.n = n;
      row.method = spec.methods[q];
      row.epsilon = eps[q] / static_cast<double>(spec.seeds);
      row.solver_epsilon = seps[q] / static_cast<double>(spec.seeds * spec.anchors);
      result.rows.push_back(row);
      loss_pts[q].emplace_back(h, row.epsilon);
      solver_pts[q].emplace_back(h, row.solver_epsilon);
    }
  }
  if (spec.hs.size() >= 3) {
    for (std::size_t q = 0; q < nm; ++q) {
      bool positive = true;
      for (const auto& p : loss_pts[q]) positive = positive && p.second > 0.0;
      for (const auto& p : solver_pts[q]) positive = positive && p.second > 0.0;
      if (!positive) continue;
      result.fits.push_back({spec.methods[q], fit_convergence_order(loss_pts[q]), fit_convergence_order(solver_pts[q])});
    }
  }
  return result;
}

}  // namespace ega
