#pragma once

// Reverse-mode differentiation over a small, fixed primitive set.
//
// Node values are dense matrices, so a batch of states (one per column) or a
// whole weight matrix is a single node. A tape is append-only; inputs of a
// node always precede it, and a backward sweep visits each node once in
// reverse order.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ega/errors.hpp"

namespace ega {

enum class Primitive {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Tanh,
  Exp,
  Square,
  Scale,
  Offset,
  Sum,
  Dot,
  MatMul,
  AddColumn,
  Row,
  VStack,
  RollRows,
  Slice,
};

std::string_view primitive_name(Primitive p);

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  const Eigen::MatrixXd& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Adjoints produced by one backward sweep.
class Adjoints {
 public:
  explicit Adjoints(const Tape& tape, std::vector<Eigen::MatrixXd> adj)
      : tape_(&tape), adj_(std::move(adj)) {}

  /// d(output)/d(v), shaped like v. Zero when v does not feed the output.
  Eigen::MatrixXd operator[](Var v) const;

 private:
  const Tape* tape_;
  std::vector<Eigen::MatrixXd> adj_;
};

class Tape {
 public:
  /// `max_elements` caps the total number of stored doubles across nodes.
  explicit Tape(std::size_t max_elements = kDefaultMaxElements) : max_elements_(max_elements) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static constexpr std::size_t kDefaultMaxElements = 50'000'000;

  Var variable(Eigen::MatrixXd value);
  Var constant(Eigen::MatrixXd value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var div(Var a, Var b);  // elementwise
  Var tanh(Var a);
  Var exp(Var a);
  Var square(Var a);
  Var scale(Var a, double s);
  Var offset(Var a, double c);
  Var sum(Var a);
  Var dot(Var a, Var b);
  Var matmul(Var a, Var b);
  /// Adds column vector `col` to every column of `a`.
  Var add_column(Var a, Var col);
  Var row(Var a, Eigen::Index i);
  Var vstack(std::span<const Var> parts);
  /// out.row(i) = a.row((i - shift) mod rows).
  Var roll_rows(Var a, int shift);
  /// Column-major block [offset, offset + rows*cols) of column vector `a`.
  Var slice(Var a, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);

  const Eigen::MatrixXd& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].value; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t stored_elements() const { return stored_elements_; }
  Primitive primitive(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].op; }

  /// Backward sweep from a 1x1 output.
  Adjoints backward(Var output) const;
  /// Backward sweep with an explicit cotangent shaped like `output`.
  Adjoints backward(Var output, const Eigen::MatrixXd& seed) const;

 private:
  struct Node {
    Primitive op;
    int a = -1;
    int b = -1;
    std::vector<int> parts;
    double scalar = 0.0;
    Eigen::Index index = 0;
    bool active = false;
    Eigen::MatrixXd value;
  };

  Var push(Node node);
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id())]; }
  void check_owned(Var v) const;

  std::vector<Node> nodes_;
  std::size_t stored_elements_ = 0;
  std::size_t max_elements_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator*(double s, Var a);
Var operator*(Var a, double s);
Var operator+(Var a, double c);
Var operator-(Var a);
Var tanh(Var a);
Var exp(Var a);
Var square(Var a);

/// Builds a program on a fresh tape from a parameter column vector.
using TapeProgram = std::function<Var(Tape&, Var theta)>;

/// Gradient of a scalar (1x1) program with respect to theta.
Eigen::VectorXd grad_scalar(const TapeProgram& f, const Eigen::VectorXd& theta);

/// m x a Jacobian of an m x 1 program; row i is grad_scalar of component i.
Eigen::MatrixXd jacobian_params(const TapeProgram& f, const Eigen::VectorXd& theta);

}  // namespace ega
