#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ega/ega.hpp"
#include "ega/metrics.hpp"

namespace ega {

/// Gradient-error sweep on the Lorenz 63 hybrid: for each h, the online-loss
/// gradient of a seeded random sub-model averaged over a window of anchors,
/// compared against reverse mode through the solver.
struct GradCheckSpec {
  std::vector<double> hs;
  std::size_t horizon = 10;
  double horizon_time = 0.0;  // when > 0, n = round(horizon_time / h)
  std::size_t anchors = 100;
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
  std::vector<int> layers{3, 3, 3, 3};
  SolverKind solver;
  int truth_substeps = 10;
  std::size_t burn_in = 2000;
  std::vector<JacobianMethod> methods{JacobianMethod::Exact, JacobianMethod::Static};
  Lorenz63Params system;
};

struct GradCheckRow {
  double h = 0.0;
  std::size_t n = 0;
  JacobianMethod method = JacobianMethod::Static;
  double epsilon = 0.0;         // online-loss gradient error
  double solver_epsilon = 0.0;  // mean |dPsi^n/dtheta - A| entry error
};

struct GradCheckFit {
  JacobianMethod method;
  ConvergenceSeries loss;
  ConvergenceSeries solver;
};

struct GradCheckResult {
  std::vector<GradCheckRow> rows;
  std::vector<GradCheckFit> fits;  // empty when fewer than 3 h values
};

/// `count` log-spaced values from hi down to lo.
std::vector<double> log_spaced(double hi, double lo, std::size_t count);

GradCheckResult run_grad_check(const GradCheckSpec& spec);

}  // namespace ega
