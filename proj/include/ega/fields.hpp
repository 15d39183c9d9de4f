#pragma once

// Vector fields: the true reference systems and the physical cores.

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "ega/jacobian.hpp"
#include "ega/tape.hpp"

namespace ega {

using StateVec = Eigen::VectorXd;

struct Lorenz63Params {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

struct L96Params {
  int S = 8;   // slow variables
  int B = 5;   // fast variables per slow variable
  double A = 8.0;
  double c = 10.0;
  double d = 1.0;
  double gamma = 10.0;

  void validate() const;
  int full_dim() const { return S * (1 + B); }
};

/// Slow variables plus the B x S block of fast variables (column s holds the
/// fast variables attached to slow variable s).
struct L96FullState {
  StateVec slow;
  Eigen::MatrixXd fast;

  /// Packed layout: slow first, then fast column-major.
  Eigen::VectorXd pack() const;
  static L96FullState unpack(const Eigen::VectorXd& z, const L96Params& p);
};

StateVec lorenz63_true(const StateVec& u, const Lorenz63Params& p = {});
/// Lorenz 63 without the -beta*u3 damping term.
StateVec lorenz63_core(const StateVec& u, const Lorenz63Params& p = {});

/// Time derivative of the two-scale system. Fast indices wrap within their
/// own slow column (b mod B).
L96FullState l96_full(const L96FullState& z, const L96Params& p = {});
/// Slow equations with the coupling term removed.
StateVec l96_slow(const StateVec& u, const L96Params& p = {});
/// R_s = -(d c / gamma) * sum_b y_{b,s}.
StateVec l96_coupling(const Eigen::MatrixXd& fast, const L96Params& p = {});

/// A right-hand side usable on plain values, dual numbers, and the tape.
class CoreField {
 public:
  virtual ~CoreField() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual StateVec eval(const StateVec& u) const = 0;
  virtual DualVec eval(const DualVec& u) const = 0;
  /// Batched evaluation on the tape; one state per column.
  virtual Var eval(Tape& tape, Var u) const;
  /// Batched evaluation on plain values; one state per column.
  virtual Eigen::MatrixXd eval_batch(const Eigen::MatrixXd& u) const;
};

using CoreFieldPtr = std::shared_ptr<const CoreField>;

CoreFieldPtr make_lorenz63_true(const Lorenz63Params& p = {});
CoreFieldPtr make_lorenz63_core(const Lorenz63Params& p = {});
CoreFieldPtr make_l96_slow(const L96Params& p = {});
/// Two-scale system on the packed state; plain and dual evaluation only.
CoreFieldPtr make_l96_full(const L96Params& p = {});
/// du/dt = A u.
CoreFieldPtr make_linear_field(const Eigen::MatrixXd& a);

}  // namespace ega
