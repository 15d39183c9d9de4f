#include "ega/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ega/parallel.hpp"

namespace ega {

std::string train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::Offline: return "offline";
    case TrainMode::Online: return "online";
    case TrainMode::OnlineExact: return "online-exact";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "offline") return TrainMode::Offline;
  if (s == "online") return TrainMode::Online;
  if (s == "online-exact") return TrainMode::OnlineExact;
  throw ContractViolation("unknown training mode '" + s + "' (expected offline, online or online-exact)");
}

void TrainConfig::validate() const {
  require(optimizer.lr >= 0.0 && std::isfinite(optimizer.lr), "TrainConfig: lr must be a non-negative number");
  require(horizon >= 1, "TrainConfig: horizon must be >= 1");
  require(batch >= 1, "TrainConfig: batch must be >= 1");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, "TrainConfig: validation fraction must be in [0, 1)");
  require(reg_weight >= 0.0, "TrainConfig: reg_weight must be non-negative");
  solver.validate();
  jacobian.validate();
}

Split split_dataset(std::size_t n_samples, double validation_fraction) {
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n_samples)));
  Split s;
  s.train.resize(n_samples - n_val);
  std::iota(s.train.begin(), s.train.end(), std::size_t{0});
  s.validation.resize(n_val);
  std::iota(s.validation.begin(), s.validation.end(), n_samples - n_val);
  return s;
}

namespace {

Eigen::MatrixXd gather_anchors(const Dataset& data, std::span<const std::size_t> batch) {
  Eigen::MatrixXd u(data.dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) u.col(static_cast<Eigen::Index>(k)) = data.samples.at(batch[k]).anchor;
  return u;
}

Eigen::MatrixXd gather_targets(const Dataset& data, std::span<const std::size_t> batch, std::size_t j) {
  Eigen::MatrixXd t(data.dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k)
    t.col(static_cast<Eigen::Index>(k)) = data.samples[batch[k]].targets.at(j - 1);
  return t;
}

Eigen::MatrixXd gather_offline(const Dataset& data, std::span<const std::size_t> batch) {
  Eigen::MatrixXd r(data.dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& s = data.samples.at(batch[k]);
    require(s.offline_target.has_value(), "offline loss: sample has no offline target");
    r.col(static_cast<Eigen::Index>(k)) = *s.offline_target;
  }
  return r;
}

void check_batch(const HybridSystem& sys, const Dataset& data, std::span<const std::size_t> batch, std::size_t n) {
  require(!batch.empty(), "empty batch");
  require(data.dim == sys.dim(), "dataset dimension differs from the system");
  require(n >= 1 && n <= data.horizon, "horizon exceeds the dataset horizon");
}

/// States U_0 .. U_n of a batched rollout, one member per column.
std::vector<Eigen::MatrixXd> batched_rollout(const HybridSystem& sys, const SolverKind& kind, const Dataset& data,
                                             std::span<const std::size_t> batch, std::size_t n) {
  std::vector<Eigen::MatrixXd> u;
  u.reserve(n + 1);
  u.push_back(gather_anchors(data, batch));
  for (std::size_t j = 1; j <= n; ++j) {
    Eigen::MatrixXd next;
    try {
      next = step_batch(kind, sys, u.back(), data.h);
    } catch (const NonFiniteError&) {
      throw BlowUpError(j, {});
    }
    if (exceeds_blowup(next)) throw BlowUpError(j, {});
    u.push_back(std::move(next));
  }
  return u;
}

Trajectory column_trajectory(const std::vector<Eigen::MatrixXd>& u, Eigen::Index k, const SolverKind& kind, double h) {
  Trajectory t;
  t.h = h;
  t.kind = kind;
  t.states.reserve(u.size());
  for (const auto& m : u) t.states.push_back(m.col(k));
  return t;
}

BatchGradient offline_gradient(const HybridSystem& sys, const Dataset& data, std::span<const std::size_t> batch,
                               const TrainConfig& config) {
  const MlpSubmodel& m = sys.submodel();
  const Eigen::MatrixXd u = gather_anchors(data, batch);
  const Eigen::MatrixXd r = gather_offline(data, batch);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Tape tape;
  Var theta = tape.variable(m.params().values());
  Var loss = inv_b * tape.sum(square(m.forward(tape, theta, tape.constant(u)) - tape.constant(r)));
  if (config.reg_weight > 0.0) loss = loss + config.reg_weight * tape.sum(square(theta));
  return {tape.value(loss)(0, 0), tape.backward(loss)[theta].col(0)};
}

BatchGradient online_exact_gradient(const HybridSystem& sys, const Dataset& data, std::span<const std::size_t> batch,
                                    const TrainConfig& config) {
  const std::size_t n = config.horizon;
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(batch.size()));
  Tape tape;
  Var theta = tape.variable(sys.submodel().params().values());
  Var u = tape.constant(gather_anchors(data, batch));
  Var loss = tape.constant(Eigen::MatrixXd::Zero(1, 1));
  for (std::size_t j = 1; j <= n; ++j) {
    try {
      u = step_tape(config.solver, sys, tape, theta, u, data.h);
    } catch (const NonFiniteError&) {
      throw BlowUpError(j, {});
    }
    if (exceeds_blowup(tape.value(u))) throw BlowUpError(j, {});
    loss = loss + tape.sum(square(u - tape.constant(gather_targets(data, batch, j))));
  }
  loss = scale * loss;
  if (config.reg_weight > 0.0) loss = loss + config.reg_weight * tape.sum(square(theta));
  return {tape.value(loss)(0, 0), tape.backward(loss)[theta].col(0)};
}

BatchGradient online_ega_gradient(const HybridSystem& sys, const Dataset& data, std::span<const std::size_t> batch,
                                  const TrainConfig& config) {
  const std::size_t n = config.horizon;
  const auto b = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index d = sys.dim();
  const double h = data.h;
  const auto u = batched_rollout(sys, config.solver, data, batch, n);

  // w_j per member, scaled for the batch mean.
  const double wscale = 2.0 / (static_cast<double>(n) * static_cast<double>(b));
  double loss = 0.0;
  std::vector<Eigen::MatrixXd> w(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const Eigen::MatrixXd r = u[j] - gather_targets(data, batch, j);
    loss += r.squaredNorm();
    w[j - 1] = wscale * r;
  }
  loss /= static_cast<double>(n) * static_cast<double>(b);

  // cot.block(i-1) = h lambda_i for every member.
  Eigen::MatrixXd states(d, b * static_cast<Eigen::Index>(n));
  Eigen::MatrixXd cot(d, b * static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) states.middleCols(static_cast<Eigen::Index>(i) * b, b) = u[i];

  if (config.jacobian.method == JacobianMethod::Static) {
    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(d, b);
    for (std::size_t i = n; i >= 1; --i) {
      lambda += w[i - 1];
      cot.middleCols(static_cast<Eigen::Index>(i - 1) * b, b) = h * lambda;
    }
  } else {
    parallel_for(static_cast<std::size_t>(b), config.threads, [&](std::size_t kk) {
      const auto k = static_cast<Eigen::Index>(kk);
      const Trajectory traj = column_trajectory(u, k, config.solver, h);
      std::vector<Eigen::VectorXd> wk(n);
      for (std::size_t j = 0; j < n; ++j) wk[j] = w[j].col(k);
      JacobianMode mode = config.jacobian;
      mode.seed = config.jacobian.seed ^ (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(kk) + 1));
      const Eigen::MatrixXd c = contracted_cotangents(traj, sys, mode, wk);
      for (std::size_t i = 0; i < n; ++i) cot.col(static_cast<Eigen::Index>(i) * b + k) = c.col(static_cast<Eigen::Index>(i));
    });
  }

  const MlpSubmodel& m = sys.submodel();
  Eigen::VectorXd g = m.param_vjp(states, cot);
  if (config.reg_weight > 0.0) {
    const Eigen::VectorXd theta = m.params().values();
    g += 2.0 * config.reg_weight * theta;
    loss += config.reg_weight * theta.squaredNorm();
  }
  return {loss, std::move(g)};
}

}  // namespace

double offline_loss(const MlpSubmodel& m, const Dataset& data, std::span<const std::size_t> batch, double reg_weight) {
  require(!batch.empty(), "offline_loss: empty batch");
  require(data.dim == m.input_dim(), "offline_loss: dataset dimension differs from the sub-model");
  const Eigen::MatrixXd u = gather_anchors(data, batch);
  const Eigen::MatrixXd r = gather_offline(data, batch);
  double loss = (r - m.forward_batch(u)).squaredNorm() / static_cast<double>(batch.size());
  if (reg_weight > 0.0) loss += reg_weight * m.params().values().squaredNorm();
  return loss;
}

OnlineLoss online_loss(const HybridSystem& sys, const SolverKind& kind, const Dataset& data,
                       std::span<const std::size_t> batch, std::size_t n) {
  check_batch(sys, data, batch, n);
  OnlineLoss out;
  out.trajectories.reserve(batch.size());
  double total = 0.0;
  for (std::size_t idx : batch) {
    const Sample& s = data.samples.at(idx);
    Trajectory traj = rollout(kind, sys, s.anchor, n, data.h);
    double e = 0.0;
    for (std::size_t j = 1; j <= n; ++j) e += (s.targets[j - 1] - traj.states[j]).squaredNorm();
    total += e / static_cast<double>(n);
    out.trajectories.push_back(std::move(traj));
  }
  out.loss = total / static_cast<double>(batch.size());
  return out;
}

double online_loss_bounded(const HybridSystem& sys, const SolverKind& kind, const Dataset& data,
                           std::span<const std::size_t> batch, std::size_t n, std::size_t* diverged) {
  check_batch(sys, data, batch, n);
  double total = 0.0;
  std::size_t kept = 0;
  std::size_t lost = 0;
  for (std::size_t idx : batch) {
    const Sample& s = data.samples.at(idx);
    try {
      const Trajectory traj = rollout(kind, sys, s.anchor, n, data.h);
      double e = 0.0;
      for (std::size_t j = 1; j <= n; ++j) e += (s.targets[j - 1] - traj.states[j]).squaredNorm();
      total += e / static_cast<double>(n);
      ++kept;
    } catch (const BlowUpError&) {
      ++lost;
    }
  }
  if (diverged) *diverged = lost;
  return kept ? total / static_cast<double>(kept) : std::numeric_limits<double>::infinity();
}

BatchGradient batch_gradient(const HybridSystem& sys, const Dataset& data, std::span<const std::size_t> batch,
                             const TrainConfig& config) {
  require(sys.has_submodel(), "batch_gradient: system has no sub-model");
  switch (config.mode) {
    case TrainMode::Offline:
      require(!batch.empty(), "batch_gradient: empty batch");
      return offline_gradient(sys, data, batch, config);
    case TrainMode::OnlineExact:
      check_batch(sys, data, batch, config.horizon);
      return online_exact_gradient(sys, data, batch, config);
    case TrainMode::Online:
      check_batch(sys, data, batch, config.horizon);
      return online_ega_gradient(sys, data, batch, config);
  }
  throw ContractViolation("batch_gradient: unknown mode");
}

Optimizer::Optimizer(OptimizerConfig config, Eigen::Index size)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

void Optimizer::step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
  require(grad.size() == theta.size(), "Optimizer: gradient length differs from parameters");
  if (config_.kind == OptimizerKind::Sgd) {
    theta -= config_.lr * grad;
    return;
  }
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  theta.array() -= config_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.eps);
}

TrainReport train(HybridSystem& sys, const Dataset& data, const TrainConfig& config) {
  config.validate();
  require(sys.has_submodel(), "train: system has no sub-model");
  require(data.dim == sys.dim(), "train: dataset dimension differs from the system");
  require(config.horizon <= data.horizon, "train: horizon exceeds the dataset horizon");
  if (config.mode == TrainMode::Offline) require(data.has_offline_targets(), "train: offline mode needs offline targets");

  const Split split = split_dataset(data.size(), config.validation_fraction);
  require(!split.train.empty(), "train: no training samples after the split");
  const std::vector<std::size_t>& val = split.validation.empty() ? split.train : split.validation;

  MlpSubmodel& m = sys.submodel();
  Eigen::VectorXd theta = m.params().values();
  Optimizer opt(config.optimizer, theta.size());
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order = split.train;

  auto eval_val = [&](double* objective, double* online) {
    *online = online_loss_bounded(sys, config.solver, data, val, config.horizon);
    *objective = config.mode == TrainMode::Offline ? offline_loss(m, data, val, config.reg_weight) : *online;
  };

  TrainReport report;
  {
    double obj = 0.0;
    eval_val(&obj, &report.initial_val_online_loss);
  }

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t batches = (order.size() + config.batch - 1) / config.batch;
    std::size_t skipped = 0;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * config.batch;
      const std::size_t hi = std::min(order.size(), lo + config.batch);
      const std::span<const std::size_t> batch(order.data() + lo, hi - lo);
      BatchGradient g;
      try {
        g = batch_gradient(sys, data, batch, config);
      } catch (const BlowUpError&) {
        ++skipped;
        continue;
      } catch (const NonFiniteError&) {
        ++skipped;
        continue;
      }
      if (!g.gradient.allFinite()) {
        ++skipped;
        continue;
      }
      loss_sum += g.loss;
      opt.step(theta, g.gradient);
      m.set_params(theta);
    }
    report.skipped_batches += skipped;
    report.skipped_per_epoch.push_back(skipped);
    if (2 * skipped > batches) {
      std::ostringstream msg;
      msg << "training aborted in epoch " << epoch + 1 << ": " << skipped << " of " << batches
          << " batches diverged";
      throw TrainingAborted(msg.str());
    }
    const std::size_t used = batches - skipped;
    report.train_loss.push_back(used ? loss_sum / static_cast<double>(used) : 0.0);
    double obj = 0.0, online = 0.0;
    eval_val(&obj, &online);
    report.val_loss.push_back(obj);
    report.val_online_loss.push_back(online);
  }
  report.final_params = theta;
  return report;
}

TrainReport fine_tune(HybridSystem& sys, const Dataset& data, const TrainConfig& config) {
  require(config.mode != TrainMode::Offline, "fine_tune: needs an online mode");
  return train(sys, data, config);
}

}  // namespace ega
