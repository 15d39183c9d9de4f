#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "ega/dual.hpp"

namespace ega {

using DualVec = std::vector<Dual>;

/// Exact d x d Jacobian of `f` at `u` by forward mode. `f` maps a DualVec to a
/// DualVec of the same length. Seeds are pushed `seeds_per_pass` at a time;
/// the default covers the whole state in one pass when it fits.
template <class F>
Eigen::MatrixXd jacobian_input(F&& f, const Eigen::VectorXd& u, int seeds_per_pass = 0) {
  const int d = static_cast<int>(u.size());
  require(d > 0, "jacobian_input: empty state");
  if (seeds_per_pass <= 0) seeds_per_pass = std::min(d, Dual::kMaxSeeds);
  require(seeds_per_pass <= Dual::kMaxSeeds, "jacobian_input: too many seeds per pass");

  Eigen::MatrixXd jac;
  for (int first = 0; first < d; first += seeds_per_pass) {
    const int count = std::min(seeds_per_pass, d - first);
    DualVec x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      x[static_cast<std::size_t>(i)] = (i >= first && i < first + count)
                                           ? Dual::variable(u(i), i - first, count)
                                           : Dual(u(i));
    }
    const DualVec y = f(x);
    if (jac.size() == 0) jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), d);
    for (std::size_t r = 0; r < y.size(); ++r) {
      if (!y[r].finite()) throw NonFiniteError("jacobian_input: non-finite derivative");
      for (int c = 0; c < count; ++c) jac(static_cast<Eigen::Index>(r), first + c) = y[r].d(c);
    }
  }
  return jac;
}

}  // namespace ega
