#include "ega/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ega {

double gradient_error(const Eigen::VectorXd& exact, const Eigen::VectorXd& approx) {
  require(exact.size() == approx.size(), "gradient_error: length mismatch");
  require(exact.size() > 0, "gradient_error: empty vectors");
  return (exact - approx).lpNorm<1>() / static_cast<double>(exact.size());
}

ConvergenceSeries fit_convergence_order(std::vector<std::pair<double, double>> points) {
  require(points.size() >= 3, "fit_convergence_order: need at least 3 points");
  const auto n = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& [h, e] : points) {
    require(h > 0.0 && e > 0.0 && std::isfinite(h) && std::isfinite(e),
            "fit_convergence_order: h and epsilon must be positive");
    sx += std::log(h);
    sy += std::log(e);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [h, e] : points) {
    sxx += (std::log(h) - mx) * (std::log(h) - mx);
    sxy += (std::log(h) - mx) * (std::log(e) - my);
  }
  require(sxx > 0.0, "fit_convergence_order: all h values coincide");
  ConvergenceSeries s;
  s.slope = sxy / sxx;
  s.intercept = my - s.slope * mx;
  for (const auto& [h, e] : points)
    s.max_residual = std::max(s.max_residual, std::abs(std::log(e) - (s.intercept + s.slope * std::log(h))));
  s.points = std::move(points);
  return s;
}

double kaplan_yorke_dimension(const Eigen::VectorXd& l) {
  if (l.size() == 0 || l(0) < 0.0) return 0.0;
  double partial = 0.0;
  for (Eigen::Index j = 0; j < l.size(); ++j) {
    if (partial + l(j) < 0.0) return static_cast<double>(j) + partial / std::abs(l(j));
    partial += l(j);
  }
  return static_cast<double>(l.size());
}

namespace {

bool run_spectrum(const HybridSystem& sys, const StateVec& u0, const LyapunovProtocol& p, Eigen::VectorXd* out) {
  const Eigen::Index d = sys.dim();
  StateVec u = u0;
  for (std::size_t k = 0; k < p.transient; ++k) u = step(p.kind, sys, u, p.h);

  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd sum_log = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 1; k <= p.steps; ++k) {
    q = step_jacobian(p.kind, sys, u, p.h) * q;
    u = step(p.kind, sys, u, p.h);
    if (k % p.qr_interval == 0 || k == p.steps) {
      if (!q.allFinite() || q.cwiseAbs().maxCoeff() > 1e150) return false;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
      const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
      Eigen::MatrixXd qq = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double rii = r(i, i);
        if (rii == 0.0) return false;
        sum_log(i) += std::log(std::abs(rii));
        if (rii < 0.0) qq.col(i) = -qq.col(i);
      }
      q = std::move(qq);
    }
  }
  *out = sum_log / (static_cast<double>(p.steps) * p.h);
  return true;
}

}  // namespace

LyapunovResult lyapunov_spectrum(const HybridSystem& sys, const StateVec& u0, const LyapunovProtocol& protocol) {
  require(u0.size() == sys.dim(), "lyapunov_spectrum: state dimension mismatch");
  require(protocol.h > 0.0 && protocol.steps >= 1 && protocol.qr_interval >= 1,
          "lyapunov_spectrum: need h > 0, steps >= 1, qr_interval >= 1");
  LyapunovResult res;
  res.protocol = protocol;
  Eigen::VectorXd ex;
  if (!run_spectrum(sys, u0, protocol, &ex)) {
    res.retried = true;
    res.protocol.qr_interval = std::max<std::size_t>(1, protocol.qr_interval / 2);
    if (!run_spectrum(sys, u0, res.protocol, &ex))
      throw NonFiniteError("lyapunov_spectrum: tangent basis blew up between re-orthonormalisations");
  }
  std::sort(ex.data(), ex.data() + ex.size(), std::greater<double>());
  res.exponents = ex;
  res.dimension = kaplan_yorke_dimension(ex);
  return res;
}

std::vector<std::vector<StateVec>> reference_trajectories(const Testbed& bed, const SolverKind& truth_kind,
                                                          const StateVec& z0, std::size_t burn_in, std::size_t count,
                                                          std::size_t spacing, std::size_t horizon, double h) {
  require(count >= 1 && horizon >= 1 && spacing >= 1, "reference_trajectories: need count, horizon, spacing >= 1");
  const HybridSystem truth(bed.truth);
  StateVec z = z0;
  if (burn_in > 0) z = rollout(truth_kind, truth, z, burn_in, h).last();
  std::vector<std::vector<StateVec>> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const Trajectory t = rollout(truth_kind, truth, z, std::max(horizon, spacing), h);
    std::vector<StateVec> ref;
    ref.reserve(horizon + 1);
    for (std::size_t i = 0; i <= horizon; ++i) ref.push_back(bed.observe(t.states[i]));
    out.push_back(std::move(ref));
    z = t.states[spacing];
  }
  return out;
}

MegCurve mean_error_growth(const std::vector<HybridSystem>& models, const SolverKind& kind,
                           const std::vector<std::vector<StateVec>>& references, double h) {
  require(!models.empty() && !references.empty(), "mean_error_growth: need models and references");
  const std::size_t horizon = references.front().size() - 1;
  require(horizon >= 1, "mean_error_growth: references need at least two states");
  MegCurve curve;
  std::vector<std::vector<double>> rows;
  std::vector<double> raw;
  for (const auto& model : models) {
    for (const auto& ref : references) {
      require(ref.size() == horizon + 1, "mean_error_growth: references differ in length");
      Trajectory t;
      try {
        t = rollout(kind, model, ref[0], horizon, h);
      } catch (const BlowUpError&) {
        ++curve.diverged;
        continue;
      }
      const double e1 = (ref[1] - t.states[1]).squaredNorm();
      if (e1 == 0.0) {
        ++curve.excluded;
        continue;
      }
      std::vector<double> row(horizon);
      raw.resize(horizon, 0.0);
      for (std::size_t i = 1; i <= horizon; ++i) {
        const double e = (ref[i] - t.states[i]).squaredNorm();
        row[i - 1] = e / e1;
        raw[i - 1] += e;
      }
      rows.push_back(std::move(row));
    }
  }
  curve.used = rows.size();
  if (rows.empty()) return curve;
  curve.mean.assign(horizon, 0.0);
  curve.stddev.assign(horizon, 0.0);
  curve.scaled_std.assign(horizon, 0.0);
  const auto m = static_cast<double>(rows.size());
  curve.raw_mean = raw;
  for (double& r : curve.raw_mean) r /= m;
  for (std::size_t i = 0; i < horizon; ++i) {
    double s = 0.0;
    for (const auto& r : rows) s += r[i];
    const double mean = s / m;
    double v = 0.0;
    for (const auto& r : rows) v += (r[i] - mean) * (r[i] - mean);
    curve.mean[i] = mean;
    curve.stddev[i] = std::sqrt(v / m);
    curve.scaled_std[i] = curve.stddev[i] / 20.0;
  }
  return curve;
}

double distribution_distance(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "distribution_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

std::vector<double> component_series(const HybridSystem& sys, const SolverKind& kind, const StateVec& u0,
                                     std::size_t transient, std::size_t steps, double h, int component) {
  require(component >= 0 && component < sys.dim(), "component_series: component out of range");
  StateVec u = u0;
  for (std::size_t k = 0; k < transient; ++k) u = step(kind, sys, u, h);
  std::vector<double> out;
  out.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    u = step(kind, sys, u, h);
    out.push_back(u(component));
  }
  return out;
}

double Histogram::density(std::size_t bin) const {
  return total ? static_cast<double>(counts.at(bin)) / (static_cast<double>(total) * width()) : 0.0;
}

Histogram histogram(const std::vector<double>& samples, std::size_t bins, double lo, double hi) {
  require(bins >= 1 && hi > lo, "histogram: need bins >= 1 and hi > lo");
  Histogram hgm;
  hgm.lo = lo;
  hgm.hi = hi;
  hgm.counts.assign(bins, 0);
  for (double x : samples) {
    const double t = (x - lo) / (hi - lo) * static_cast<double>(bins);
    const auto k = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(bins - 1)));
    ++hgm.counts[k];
  }
  hgm.total = samples.size();
  return hgm;
}

}  // namespace ega
