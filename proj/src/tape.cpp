#include "ega/tape.hpp"

#include <string>

namespace ega {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Leaf: return "leaf";
    case Primitive::Constant: return "constant";
    case Primitive::Add: return "add";
    case Primitive::Sub: return "sub";
    case Primitive::Mul: return "mul";
    case Primitive::Div: return "div";
    case Primitive::Tanh: return "tanh";
    case Primitive::Exp: return "exp";
    case Primitive::Square: return "square";
    case Primitive::Scale: return "scale";
    case Primitive::Offset: return "offset";
    case Primitive::Sum: return "sum";
    case Primitive::Dot: return "dot";
    case Primitive::MatMul: return "matmul";
    case Primitive::AddColumn: return "add_column";
    case Primitive::Row: return "row";
    case Primitive::VStack: return "vstack";
    case Primitive::RollRows: return "roll_rows";
    case Primitive::Slice: return "slice";
  }
  return "unknown";
}

const Eigen::MatrixXd& Var::value() const { return tape_->value(*this); }

double Var::scalar() const {
  require(rows() == 1 && cols() == 1, "Var::scalar on non-scalar node");
  return value()(0, 0);
}

Eigen::MatrixXd Adjoints::operator[](Var v) const {
  const auto& a = adj_[static_cast<std::size_t>(v.id())];
  if (a.size() == 0) return Eigen::MatrixXd::Zero(tape_->value(v).rows(), tape_->value(v).cols());
  return a;
}

void Tape::check_owned(Var v) const {
  require(&v.tape() == this && v.id() >= 0 && static_cast<std::size_t>(v.id()) < nodes_.size(),
          "Var does not belong to this tape");
}

Var Tape::push(Node node) {
  if (!node.value.allFinite()) {
    throw NonFiniteError("non-finite value produced by primitive '" +
                         std::string(primitive_name(node.op)) + "'");
  }
  stored_elements_ += static_cast<std::size_t>(node.value.size());
  if (stored_elements_ > max_elements_) {
    throw TapeLimitError("tape exceeds its cap of " + std::to_string(max_elements_) + " elements");
  }
  nodes_.push_back(std::move(node));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::variable(Eigen::MatrixXd value) {
  Node n{Primitive::Leaf};
  n.active = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Eigen::MatrixXd value) {
  Node n{Primitive::Constant};
  n.value = std::move(value);
  return push(std::move(n));
}

#define EGA_BINARY_SAME_SHAPE(name)                                                        \
  check_owned(a);                                                                          \
  check_owned(b);                                                                          \
  require(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),        \
          std::string(name) + ": shape mismatch " + shape(value(a)) + " vs " + shape(value(b)))

Var Tape::add(Var a, Var b) {
  EGA_BINARY_SAME_SHAPE("add");
  Node n{Primitive::Add, a.id(), b.id()};
  n.active = node(a).active || node(b).active;
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  EGA_BINARY_SAME_SHAPE("sub");
  Node n{Primitive::Sub, a.id(), b.id()};
  n.active = node(a).active || node(b).active;
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  EGA_BINARY_SAME_SHAPE("mul");
  Node n{Primitive::Mul, a.id(), b.id()};
  n.active = node(a).active || node(b).active;
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Tape::div(Var a, Var b) {
  EGA_BINARY_SAME_SHAPE("div");
  Node n{Primitive::Div, a.id(), b.id()};
  n.active = node(a).active || node(b).active;
  n.value = value(a).cwiseQuotient(value(b));
  return push(std::move(n));
}

#undef EGA_BINARY_SAME_SHAPE

Var Tape::tanh(Var a) {
  check_owned(a);
  Node n{Primitive::Tanh, a.id()};
  n.active = node(a).active;
  n.value = value(a).array().tanh().matrix();
  return push(std::move(n));
}

Var Tape::exp(Var a) {
  check_owned(a);
  Node n{Primitive::Exp, a.id()};
  n.active = node(a).active;
  n.value = value(a).array().exp().matrix();
  return push(std::move(n));
}

Var Tape::square(Var a) {
  check_owned(a);
  Node n{Primitive::Square, a.id()};
  n.active = node(a).active;
  n.value = value(a).array().square().matrix();
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  check_owned(a);
  Node n{Primitive::Scale, a.id()};
  n.active = node(a).active;
  n.scalar = s;
  n.value = s * value(a);
  return push(std::move(n));
}

Var Tape::offset(Var a, double c) {
  check_owned(a);
  Node n{Primitive::Offset, a.id()};
  n.active = node(a).active;
  n.scalar = c;
  n.value = value(a).array() + c;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  check_owned(a);
  Node n{Primitive::Sum, a.id()};
  n.active = node(a).active;
  n.value = Eigen::MatrixXd::Constant(1, 1, value(a).sum());
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  require(value(a).size() == value(b).size() && value(a).cols() == 1 && value(b).cols() == 1,
          "dot: operands must be column vectors of equal length");
  Node n{Primitive::Dot, a.id(), b.id()};
  n.active = node(a).active || node(b).active;
  n.value = Eigen::MatrixXd::Constant(1, 1, value(a).col(0).dot(value(b).col(0)));
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  require(value(a).cols() == value(b).rows(),
          "matmul: inner dimensions differ " + shape(value(a)) + " * " + shape(value(b)));
  Node n{Primitive::MatMul, a.id(), b.id()};
  n.active = node(a).active || node(b).active;
  n.value.noalias() = value(a) * value(b);
  return push(std::move(n));
}

Var Tape::add_column(Var a, Var col) {
  check_owned(a);
  check_owned(col);
  require(value(col).cols() == 1 && value(col).rows() == value(a).rows(),
          "add_column: column length must match rows");
  Node n{Primitive::AddColumn, a.id(), col.id()};
  n.active = node(a).active || node(col).active;
  n.value = value(a).colwise() + value(col).col(0);
  return push(std::move(n));
}

Var Tape::row(Var a, Eigen::Index i) {
  check_owned(a);
  require(i >= 0 && i < value(a).rows(), "row: index out of range");
  Node n{Primitive::Row, a.id()};
  n.active = node(a).active;
  n.index = i;
  n.value = value(a).row(i);
  return push(std::move(n));
}

Var Tape::vstack(std::span<const Var> parts) {
  require(!parts.empty(), "vstack: no parts");
  Eigen::Index rows = 0;
  const Eigen::Index cols = value(parts.front()).cols();
  Node n{Primitive::VStack};
  for (Var p : parts) {
    check_owned(p);
    require(value(p).cols() == cols, "vstack: column counts differ");
    rows += value(p).rows();
    n.parts.push_back(p.id());
    n.active = n.active || node(p).active;
  }
  n.value.resize(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    n.value.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  return push(std::move(n));
}

Var Tape::roll_rows(Var a, int shift) {
  check_owned(a);
  const Eigen::Index rows = value(a).rows();
  require(rows > 0, "roll_rows: empty input");
  Node n{Primitive::RollRows, a.id()};
  n.active = node(a).active;
  n.index = ((shift % rows) + rows) % rows;
  n.value.resize(rows, value(a).cols());
  for (Eigen::Index i = 0; i < rows; ++i) {
    n.value.row(i) = value(a).row((i - n.index + rows) % rows);
  }
  return push(std::move(n));
}

Var Tape::slice(Var a, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  check_owned(a);
  require(value(a).cols() == 1, "slice: source must be a column vector");
  require(offset >= 0 && rows >= 0 && cols >= 0 && offset + rows * cols <= value(a).rows(),
          "slice: block out of range");
  Node n{Primitive::Slice, a.id()};
  n.active = node(a).active;
  n.index = offset;
  n.value = Eigen::Map<const Eigen::MatrixXd>(value(a).data() + offset, rows, cols);
  return push(std::move(n));
}

Adjoints Tape::backward(Var output) const {
  check_owned(output);
  require(value(output).size() == 1, "backward: output must be 1x1 without an explicit seed");
  return backward(output, Eigen::MatrixXd::Ones(1, 1));
}

Adjoints Tape::backward(Var output, const Eigen::MatrixXd& seed) const {
  check_owned(output);
  require(seed.rows() == value(output).rows() && seed.cols() == value(output).cols(),
          "backward: seed shape must match output");
  std::vector<Eigen::MatrixXd> adj(nodes_.size());
  adj[static_cast<std::size_t>(output.id())] = seed;

  auto accumulate = [&](int id, const auto& contribution) {
    const auto k = static_cast<std::size_t>(id);
    if (!nodes_[k].active) return;
    if (adj[k].size() == 0) {
      adj[k] = contribution;
    } else {
      adj[k] += contribution;
    }
  };

  for (int id = output.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const Eigen::MatrixXd& g = adj[static_cast<std::size_t>(id)];
    if (g.size() == 0 || !n.active) continue;
    switch (n.op) {
      case Primitive::Leaf:
      case Primitive::Constant:
        break;
      case Primitive::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Primitive::Sub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case Primitive::Mul:
        accumulate(n.a, g.cwiseProduct(nodes_[static_cast<std::size_t>(n.b)].value));
        accumulate(n.b, g.cwiseProduct(nodes_[static_cast<std::size_t>(n.a)].value));
        break;
      case Primitive::Div: {
        const auto& den = nodes_[static_cast<std::size_t>(n.b)].value;
        accumulate(n.a, g.cwiseQuotient(den));
        accumulate(n.b, (-g.cwiseProduct(n.value)).cwiseQuotient(den));
        break;
      }
      case Primitive::Tanh:
        accumulate(n.a, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Primitive::Exp:
        accumulate(n.a, g.cwiseProduct(n.value));
        break;
      case Primitive::Square:
        accumulate(n.a, 2.0 * g.cwiseProduct(nodes_[static_cast<std::size_t>(n.a)].value));
        break;
      case Primitive::Scale:
        accumulate(n.a, n.scalar * g);
        break;
      case Primitive::Offset:
        accumulate(n.a, g);
        break;
      case Primitive::Sum: {
        const auto& in = nodes_[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Eigen::MatrixXd::Constant(in.rows(), in.cols(), g(0, 0)));
        break;
      }
      case Primitive::Dot:
        accumulate(n.a, g(0, 0) * nodes_[static_cast<std::size_t>(n.b)].value);
        accumulate(n.b, g(0, 0) * nodes_[static_cast<std::size_t>(n.a)].value);
        break;
      case Primitive::MatMul: {
        const auto& a = nodes_[static_cast<std::size_t>(n.a)];
        const auto& b = nodes_[static_cast<std::size_t>(n.b)];
        if (a.active) accumulate(n.a, Eigen::MatrixXd(g * b.value.transpose()));
        if (b.active) accumulate(n.b, Eigen::MatrixXd(a.value.transpose() * g));
        break;
      }
      case Primitive::AddColumn:
        accumulate(n.a, g);
        accumulate(n.b, Eigen::MatrixXd(g.rowwise().sum()));
        break;
      case Primitive::Row: {
        const auto& in = nodes_[static_cast<std::size_t>(n.a)].value;
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(in.rows(), in.cols());
        c.row(n.index) = g;
        accumulate(n.a, c);
        break;
      }
      case Primitive::VStack: {
        Eigen::Index r = 0;
        for (int p : n.parts) {
          const auto rows = nodes_[static_cast<std::size_t>(p)].value.rows();
          accumulate(p, Eigen::MatrixXd(g.middleRows(r, rows)));
          r += rows;
        }
        break;
      }
      case Primitive::RollRows: {
        const Eigen::Index rows = g.rows();
        Eigen::MatrixXd c(rows, g.cols());
        for (Eigen::Index i = 0; i < rows; ++i) c.row((i - n.index + rows) % rows) = g.row(i);
        accumulate(n.a, c);
        break;
      }
      case Primitive::Slice: {
        const auto k = static_cast<std::size_t>(n.a);
        if (!nodes_[k].active) break;
        if (adj[k].size() == 0) adj[k] = Eigen::MatrixXd::Zero(nodes_[k].value.rows(), 1);
        adj[k].col(0).segment(n.index, g.size()) += Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
        break;
      }
    }
  }
  return Adjoints(*this, std::move(adj));
}

Var operator+(Var a, Var b) { return a.tape().add(a, b); }
Var operator-(Var a, Var b) { return a.tape().sub(a, b); }
Var operator*(Var a, Var b) { return a.tape().mul(a, b); }
Var operator/(Var a, Var b) { return a.tape().div(a, b); }
Var operator*(double s, Var a) { return a.tape().scale(a, s); }
Var operator*(Var a, double s) { return a.tape().scale(a, s); }
Var operator+(Var a, double c) { return a.tape().offset(a, c); }
Var operator-(Var a) { return a.tape().scale(a, -1.0); }
Var tanh(Var a) { return a.tape().tanh(a); }
Var exp(Var a) { return a.tape().exp(a); }
Var square(Var a) { return a.tape().square(a); }

Eigen::VectorXd grad_scalar(const TapeProgram& f, const Eigen::VectorXd& theta) {
  Tape tape;
  Var t = tape.variable(theta);
  Var out = f(tape, t);
  require(out.rows() == 1 && out.cols() == 1, "grad_scalar: program must return a 1x1 node");
  return tape.backward(out)[t].col(0);
}

Eigen::MatrixXd jacobian_params(const TapeProgram& f, const Eigen::VectorXd& theta) {
  Tape tape;
  Var t = tape.variable(theta);
  Var out = f(tape, t);
  require(out.cols() == 1, "jacobian_params: program must return a column vector");
  const Eigen::Index m = out.rows();
  Eigen::MatrixXd jac(m, theta.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(m, 1);
    seed(i, 0) = 1.0;
    jac.row(i) = tape.backward(out, seed)[t].col(0).transpose();
  }
  return jac;
}

}  // namespace ega
