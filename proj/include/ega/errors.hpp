#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ega {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (dimension, shape, range).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared in a computed value.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// A rollout left the admissible region. Carries the index of the reported
/// step that failed and every state recorded before it.
class BlowUpError : public Error {
 public:
  BlowUpError(std::size_t step, std::vector<Eigen::VectorXd> partial)
      : Error("rollout blew up at step " + std::to_string(step)),
        step_(step),
        partial_(std::move(partial)) {}

  std::size_t step() const noexcept { return step_; }
  const std::vector<Eigen::VectorXd>& partial() const noexcept { return partial_; }

 private:
  std::size_t step_;
  std::vector<Eigen::VectorXd> partial_;
};

/// Ensemble perturbations carry no spread (e.g. zero perturbation scale).
class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
};

/// The tape would exceed its configured memory cap.
class TapeLimitError : public Error {
 public:
  using Error::Error;
};

/// Training gave up (too many skipped batches in one epoch).
class TrainingAborted : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input file written with a newer schema than this build understands.
class SchemaError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

}  // namespace ega
