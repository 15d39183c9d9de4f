#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ega/dataset.hpp"

namespace ega {

/// (1/a) |exact - approx|_1.
double gradient_error(const Eigen::VectorXd& exact, const Eigen::VectorXd& approx);

struct ConvergenceSeries {
  std::vector<std::pair<double, double>> points;  // (h, epsilon)
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  // in log space
};

/// Least-squares slope of log(epsilon) against log(h).
ConvergenceSeries fit_convergence_order(std::vector<std::pair<double, double>> points);

struct LyapunovProtocol {
  double h = 0.01;
  std::size_t transient = 10'000;
  std::size_t steps = 1'000'000;
  std::size_t qr_interval = 10;
  SolverKind kind;
};

struct LyapunovResult {
  Eigen::VectorXd exponents;  // descending
  double dimension = 0.0;
  LyapunovProtocol protocol;  // qr_interval holds the interval actually used
  bool retried = false;
};

double kaplan_yorke_dimension(const Eigen::VectorXd& exponents_desc);

/// Benettin-style spectrum: state and tangent basis advanced together with
/// the one-step map Jacobian, QR re-orthonormalisation every qr_interval steps.
LyapunovResult lyapunov_spectrum(const HybridSystem& sys, const StateVec& u0, const LyapunovProtocol& protocol);

/// Reference trajectories of the observed state: `count` windows of
/// horizon+1 states spaced `spacing` steps apart along one true run.
std::vector<std::vector<StateVec>> reference_trajectories(const Testbed& bed, const SolverKind& truth_kind,
                                                          const StateVec& z0, std::size_t burn_in, std::size_t count,
                                                          std::size_t spacing, std::size_t horizon, double h);

struct MegCurve {
  std::vector<double> mean;        // lead i = 1 .. horizon
  std::vector<double> stddev;      // raw spread across trajectories
  std::vector<double> scaled_std;  // stddev / 20
  std::vector<double> raw_mean;    // unnormalised squared error per lead
  std::size_t used = 0;
  std::size_t excluded = 0;  // zero initial error
  std::size_t diverged = 0;  // model rollout blew up

  bool empty() const { return used == 0; }
};

/// MEG(i) = |u_true(i) - Psi^i(u0)|^2 / |u_true(1) - Psi(u0)|^2 averaged over
/// every (model, reference) pair.
MegCurve mean_error_growth(const std::vector<HybridSystem>& models, const SolverKind& kind,
                           const std::vector<std::vector<StateVec>>& references, double h);

/// Two-sample Kolmogorov-Smirnov statistic.
double distribution_distance(std::vector<double> a, std::vector<double> b);

/// Values of one state component along a long run after a transient.
std::vector<double> component_series(const HybridSystem& sys, const SolverKind& kind, const StateVec& u0,
                                     std::size_t transient, std::size_t steps, double h, int component);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  double width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double density(std::size_t bin) const;
};

/// Values outside [lo, hi] go to the end bins.
Histogram histogram(const std::vector<double>& samples, std::size_t bins, double lo, double hi);

}  // namespace ega
