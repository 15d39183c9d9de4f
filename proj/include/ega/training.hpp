#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ega/dataset.hpp"
#include "ega/ega.hpp"

namespace ega {

enum class TrainMode { Offline, Online, OnlineExact };

std::string train_mode_name(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  TrainMode mode = TrainMode::Online;
  JacobianMode jacobian;  // used by TrainMode::Online
  SolverKind solver;
  std::size_t horizon = 10;
  std::size_t batch = 32;
  std::size_t epochs = 50;
  OptimizerConfig optimizer;
  double reg_weight = 0.0;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;       // mean batch objective per epoch
  std::vector<double> val_loss;         // objective on the held-out split
  std::vector<double> val_online_loss;  // online loss on the held-out split
  std::vector<std::size_t> skipped_per_epoch;
  double initial_val_online_loss = 0.0;
  std::size_t skipped_batches = 0;
  Eigen::VectorXd final_params;
};

/// Indices [0, train) and [train, N) of a contiguous split.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

Split split_dataset(std::size_t n_samples, double validation_fraction);

/// mean_k |R_k - M(u_k)|^2 + reg |theta|^2.
double offline_loss(const MlpSubmodel& m, const Dataset& data, std::span<const std::size_t> batch,
                    double reg_weight = 0.0);

struct OnlineLoss {
  double loss = 0.0;
  /// One trajectory per batch member, horizon n.
  std::vector<Trajectory> trajectories;
};

/// (1/B) sum_k (1/n) sum_j |target - Psi^j(anchor)|^2. Throws BlowUpError when
/// any member diverges.
OnlineLoss online_loss(const HybridSystem& sys, const SolverKind& kind, const Dataset& data,
                       std::span<const std::size_t> batch, std::size_t n);

/// Online loss averaged over the members that stay bounded; `diverged`
/// receives the number excluded.
double online_loss_bounded(const HybridSystem& sys, const SolverKind& kind, const Dataset& data,
                           std::span<const std::size_t> batch, std::size_t n, std::size_t* diverged = nullptr);

struct BatchGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;
};

/// Objective value and gradient for one minibatch under config.mode.
BatchGradient batch_gradient(const HybridSystem& sys, const Dataset& data, std::span<const std::size_t> batch,
                             const TrainConfig& config);

class Optimizer {
 public:
  Optimizer(OptimizerConfig config, Eigen::Index size);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);

 private:
  OptimizerConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::size_t t_ = 0;
};

TrainReport train(HybridSystem& sys, const Dataset& data, const TrainConfig& config);

/// Online training started from the current (offline-trained) parameters.
TrainReport fine_tune(HybridSystem& sys, const Dataset& data, const TrainConfig& config);

}  // namespace ega
