#include "ega/fields.hpp"

#include <array>

namespace ega {

namespace {

template <class T>
void l63_rhs(const T* u, T* du, const Lorenz63Params& p, bool damping) {
  du[0] = p.sigma * (u[1] - u[0]);
  du[1] = p.rho * u[0] - u[1] - u[0] * u[2];
  du[2] = damping ? u[0] * u[1] - p.beta * u[2] : u[0] * u[1];
}

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

template <class T>
void l96_slow_rhs(const T* u, T* du, const L96Params& p) {
  const int S = p.S;
  for (int s = 0; s < S; ++s) {
    du[s] = -u[wrap(s - 1, S)] * (u[wrap(s - 2, S)] - u[wrap(s + 1, S)]) - u[s] + T(p.A);
  }
}

// Packed state: z[0..S) slow, z[S + s*B + b] fast.
template <class T>
void l96_full_rhs(const T* z, T* dz, const L96Params& p) {
  const int S = p.S;
  const int B = p.B;
  const T* y = z + S;
  T* dy = dz + S;
  l96_slow_rhs(z, dz, p);
  const double k = p.d * p.c / p.gamma;
  for (int s = 0; s < S; ++s) {
    T acc(0.0);
    for (int b = 0; b < B; ++b) acc = acc + y[s * B + b];
    dz[s] = dz[s] - k * acc;
    for (int b = 0; b < B; ++b) {
      const T& y_p1 = y[s * B + wrap(b + 1, B)];
      const T& y_p2 = y[s * B + wrap(b + 2, B)];
      const T& y_m1 = y[s * B + wrap(b - 1, B)];
      dy[s * B + b] = -(p.c * p.gamma) * y_p1 * (y_p2 - y_m1) - p.c * y[s * B + b] + k * z[s];
    }
  }
}

void require_dim(Eigen::Index got, int want, const char* who) {
  require(got == want, std::string(who) + ": expected dimension " + std::to_string(want) +
                           ", got " + std::to_string(got));
}

class Lorenz63Field final : public CoreField {
 public:
  Lorenz63Field(Lorenz63Params p, bool damping) : p_(p), damping_(damping) {}

  int dim() const override { return 3; }
  std::string name() const override { return damping_ ? "lorenz63_true" : "lorenz63_core"; }

  StateVec eval(const StateVec& u) const override {
    require_dim(u.size(), 3, "lorenz63");
    StateVec du(3);
    l63_rhs(u.data(), du.data(), p_, damping_);
    return du;
  }

  DualVec eval(const DualVec& u) const override {
    require_dim(static_cast<Eigen::Index>(u.size()), 3, "lorenz63");
    DualVec du(3);
    l63_rhs(u.data(), du.data(), p_, damping_);
    return du;
  }

  Var eval(Tape& tape, Var u) const override {
    require_dim(u.rows(), 3, "lorenz63");
    Var x = tape.row(u, 0);
    Var y = tape.row(u, 1);
    Var z = tape.row(u, 2);
    const std::array<Var, 3> rows{
        p_.sigma * (y - x),
        p_.rho * x - y - x * z,
        damping_ ? x * y - p_.beta * z : x * y,
    };
    return tape.vstack(rows);
  }

  Eigen::MatrixXd eval_batch(const Eigen::MatrixXd& u) const override {
    require_dim(u.rows(), 3, "lorenz63");
    Eigen::MatrixXd du(3, u.cols());
    const auto x = u.row(0).array();
    const auto y = u.row(1).array();
    const auto z = u.row(2).array();
    du.row(0) = p_.sigma * (y - x);
    du.row(1) = p_.rho * x - y - x * z;
    du.row(2) = damping_ ? (x * y - p_.beta * z).eval() : (x * y).eval();
    return du;
  }

 private:
  Lorenz63Params p_;
  bool damping_;
};

class L96SlowField final : public CoreField {
 public:
  explicit L96SlowField(L96Params p) : p_(p) { p_.validate(); }

  int dim() const override { return p_.S; }
  std::string name() const override { return "l96_slow"; }

  StateVec eval(const StateVec& u) const override { return l96_slow(u, p_); }

  DualVec eval(const DualVec& u) const override {
    require_dim(static_cast<Eigen::Index>(u.size()), p_.S, "l96_slow");
    DualVec du(u.size());
    l96_slow_rhs(u.data(), du.data(), p_);
    return du;
  }

  Var eval(Tape& tape, Var u) const override {
    require_dim(u.rows(), p_.S, "l96_slow");
    Var um1 = tape.roll_rows(u, 1);
    Var um2 = tape.roll_rows(u, 2);
    Var up1 = tape.roll_rows(u, -1);
    return -(um1 * (um2 - up1)) - u + p_.A;
  }

  Eigen::MatrixXd eval_batch(const Eigen::MatrixXd& u) const override {
    require_dim(u.rows(), p_.S, "l96_slow");
    const int S = p_.S;
    Eigen::MatrixXd du(S, u.cols());
    for (int s = 0; s < S; ++s) {
      du.row(s) = (-u.row(wrap(s - 1, S)).array() *
                       (u.row(wrap(s - 2, S)).array() - u.row(wrap(s + 1, S)).array()) -
                   u.row(s).array() + p_.A)
                      .matrix();
    }
    return du;
  }

 private:
  L96Params p_;
};

class L96FullField final : public CoreField {
 public:
  explicit L96FullField(L96Params p) : p_(p) { p_.validate(); }

  int dim() const override { return p_.full_dim(); }
  std::string name() const override { return "l96_full"; }

  StateVec eval(const StateVec& z) const override {
    require_dim(z.size(), p_.full_dim(), "l96_full");
    StateVec dz(z.size());
    l96_full_rhs(z.data(), dz.data(), p_);
    return dz;
  }

  DualVec eval(const DualVec& z) const override {
    require_dim(static_cast<Eigen::Index>(z.size()), p_.full_dim(), "l96_full");
    DualVec dz(z.size());
    l96_full_rhs(z.data(), dz.data(), p_);
    return dz;
  }

 private:
  L96Params p_;
};

class LinearField final : public CoreField {
 public:
  explicit LinearField(Eigen::MatrixXd a) : a_(std::move(a)) {
    require(a_.rows() == a_.cols() && a_.rows() > 0, "linear field: matrix must be square");
  }

  int dim() const override { return static_cast<int>(a_.rows()); }
  std::string name() const override { return "linear"; }

  StateVec eval(const StateVec& u) const override {
    require_dim(u.size(), dim(), "linear");
    return a_ * u;
  }

  DualVec eval(const DualVec& u) const override {
    require_dim(static_cast<Eigen::Index>(u.size()), dim(), "linear");
    DualVec du(u.size());
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
      Dual acc(0.0);
      for (Eigen::Index j = 0; j < a_.cols(); ++j) acc += a_(i, j) * u[static_cast<std::size_t>(j)];
      du[static_cast<std::size_t>(i)] = acc;
    }
    return du;
  }

  Var eval(Tape& tape, Var u) const override {
    require_dim(u.rows(), dim(), "linear");
    return tape.matmul(tape.constant(a_), u);
  }

  Eigen::MatrixXd eval_batch(const Eigen::MatrixXd& u) const override { return a_ * u; }

 private:
  Eigen::MatrixXd a_;
};

}  // namespace

void L96Params::validate() const {
  require(S >= 4, "L96: need at least 4 slow variables for cyclic indexing");
  require(B >= 1, "L96: need at least one fast variable per slow variable");
  require(gamma != 0.0, "L96: gamma must be nonzero");
}

Eigen::VectorXd L96FullState::pack() const {
  Eigen::VectorXd z(slow.size() + fast.size());
  z.head(slow.size()) = slow;
  z.tail(fast.size()) = Eigen::Map<const Eigen::VectorXd>(fast.data(), fast.size());
  return z;
}

L96FullState L96FullState::unpack(const Eigen::VectorXd& z, const L96Params& p) {
  require_dim(z.size(), p.full_dim(), "L96FullState::unpack");
  L96FullState out;
  out.slow = z.head(p.S);
  out.fast = Eigen::Map<const Eigen::MatrixXd>(z.data() + p.S, p.B, p.S);
  return out;
}

StateVec lorenz63_true(const StateVec& u, const Lorenz63Params& p) {
  return Lorenz63Field(p, true).eval(u);
}

StateVec lorenz63_core(const StateVec& u, const Lorenz63Params& p) {
  return Lorenz63Field(p, false).eval(u);
}

L96FullState l96_full(const L96FullState& z, const L96Params& p) {
  p.validate();
  require_dim(z.slow.size(), p.S, "l96_full slow");
  require(z.fast.rows() == p.B && z.fast.cols() == p.S, "l96_full: fast block must be B x S");
  return L96FullState::unpack(L96FullField(p).eval(z.pack()), p);
}

StateVec l96_slow(const StateVec& u, const L96Params& p) {
  p.validate();
  require_dim(u.size(), p.S, "l96_slow");
  StateVec du(p.S);
  l96_slow_rhs(u.data(), du.data(), p);
  return du;
}

StateVec l96_coupling(const Eigen::MatrixXd& fast, const L96Params& p) {
  require(fast.rows() == p.B && fast.cols() == p.S, "l96_coupling: fast block must be B x S");
  return -(p.d * p.c / p.gamma) * fast.colwise().sum().transpose();
}

Var CoreField::eval(Tape&, Var) const {
  throw ContractViolation(name() + ": no tape evaluation available");
}

Eigen::MatrixXd CoreField::eval_batch(const Eigen::MatrixXd& u) const {
  Eigen::MatrixXd du(u.rows(), u.cols());
  for (Eigen::Index k = 0; k < u.cols(); ++k) du.col(k) = eval(StateVec(u.col(k)));
  return du;
}

CoreFieldPtr make_lorenz63_true(const Lorenz63Params& p) { return std::make_shared<Lorenz63Field>(p, true); }
CoreFieldPtr make_lorenz63_core(const Lorenz63Params& p) { return std::make_shared<Lorenz63Field>(p, false); }
CoreFieldPtr make_l96_slow(const L96Params& p) { return std::make_shared<L96SlowField>(p); }
CoreFieldPtr make_l96_full(const L96Params& p) { return std::make_shared<L96FullField>(p); }
CoreFieldPtr make_linear_field(const Eigen::MatrixXd& a) { return std::make_shared<LinearField>(a); }

}  // namespace ega
