#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ega/training.hpp"

namespace ega {

/// Plain-text key/value experiment description. Sections:
///   [system]   name (l63|l96), sigma rho beta | slow fast forcing c d gamma
///   [submodel] layers (comma list, input first), seed
///   [solver]   scheme, substeps, h, n
///   [data]     samples, burn_in, validation_fraction, truth_substeps, seed, csv
///   [train]    mode, jacobian, optimizer, lr, beta1, beta2, eps, batch, epochs,
///              reg_weight, etlm_members, etlm_scale, seed, threads,
///              fine_tune_epochs
///   [metrics]  lyapunov_*, meg_*, pdf_*, grad_*
///   [io]       out, dataset, params
struct ExperimentConfig {
  std::string system = "l63";
  Lorenz63Params l63;
  L96Params l96;

  std::vector<int> layers;  // empty -> system default
  std::uint64_t submodel_seed = 0;

  SolverKind solver;
  double h = 0.01;
  std::size_t n = 10;

  std::size_t samples = 5000;
  std::size_t burn_in = 1000;
  double validation_fraction = 0.1;
  int truth_substeps = 10;
  std::uint64_t data_seed = 0;
  bool csv = false;

  TrainConfig train;
  std::size_t fine_tune_epochs = 2;

  // Lyapunov
  double lyapunov_h = 0.01;
  std::size_t lyapunov_transient = 10'000;
  std::size_t lyapunov_steps = 1'000'000;
  std::size_t lyapunov_qr_interval = 10;
  // MEG
  std::size_t meg_initials = 20;
  std::size_t meg_seeds = 5;
  std::size_t meg_horizon = 100;
  std::size_t meg_spacing = 100;
  // PDF
  std::size_t pdf_transient = 10'000;
  std::size_t pdf_steps = 100'000;
  int pdf_component = 0;
  std::size_t pdf_bins = 60;
  // Gradient check
  double grad_h_max = 1e-1;
  double grad_h_min = 1e-4;
  std::size_t grad_points = 7;
  std::size_t grad_anchors = 100;
  std::size_t grad_seeds = 10;
  double grad_horizon_time = 0.0;
  std::vector<JacobianMethod> grad_methods{JacobianMethod::Exact, JacobianMethod::Static};

  std::string out = "out";
  std::string dataset;
  std::string params;

  Testbed testbed() const;
  std::vector<int> resolved_layers() const;
  /// Overrides every seed in the document.
  void set_seed(std::uint64_t seed);
  void validate() const;
};

/// Parses an INI document. Unknown sections or keys raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Fully resolved document, re-parseable by parse_config.
std::string render_config(const ExperimentConfig& cfg);

}  // namespace ega
