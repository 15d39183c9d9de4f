#include <cmath>

#include <gtest/gtest.h>

#include "ega/metrics.hpp"
#include "ega/solvers.hpp"
#include "test_util.hpp"

using namespace ega;
using test::fd_jacobian;
using test::random_vector;
using test::rel_error;

namespace {

const SolverKind kEuler{Scheme::ExplicitEuler, 1};
const SolverKind kRk4{Scheme::RK4, 1};

HybridSystem decay() { return HybridSystem(make_linear_field(-Eigen::MatrixXd::Identity(1, 1))); }

HybridSystem l63_hybrid(std::uint64_t seed) {
  return HybridSystem(make_lorenz63_core(), MlpSubmodel::random({3, 3, 3, 3}, seed));
}

Eigen::MatrixXd test_matrix() {
  Eigen::MatrixXd a(3, 3);
  a << -1.0, 2.0, 0.5, 0.3, -0.7, 1.1, -2.0, 0.4, -0.2;
  return a;
}

double slope(const std::vector<std::pair<double, double>>& pts) { return fit_convergence_order(pts).slope; }

}  // namespace

TEST(Step, DecayExamples) {
  const StateVec one = StateVec::Ones(1);
  EXPECT_DOUBLE_EQ(step(kEuler, decay(), one, 0.1)(0), 0.9);
  const double rk = step(kRk4, decay(), one, 0.1)(0);
  EXPECT_NEAR(rk, 0.9048375, 5e-8);
  EXPECT_NEAR(rk, std::exp(-0.1), 1e-6);
}

TEST(Step, Lorenz63CoreEuler) {
  const HybridSystem sys(make_lorenz63_core(), MlpSubmodel({3, 3, 3, 3}));
  const StateVec u = step(kEuler, sys, StateVec::Ones(3), 0.01);
  EXPECT_NEAR(u(0), 1.0, 1e-15);
  EXPECT_NEAR(u(1), 1.26, 1e-15);
  EXPECT_NEAR(u(2), 1.01, 1e-15);
}

TEST(Step, SubstepsComposeInternalSteps) {
  const HybridSystem sys = l63_hybrid(3);
  const StateVec u = test::l63_attractor_point(2);
  StateVec v = u;
  for (int i = 0; i < 4; ++i) v = step(kRk4, sys, v, 0.0025);
  EXPECT_LT((step({Scheme::RK4, 4}, sys, u, 0.01) - v).norm(), 1e-12);
}

TEST(Step, BatchMatchesColumns) {
  const HybridSystem sys = l63_hybrid(5);
  Eigen::MatrixXd us(3, 6);
  for (int k = 0; k < 6; ++k) us.col(k) = test::l63_attractor_point(k);
  const Eigen::MatrixXd out = step_batch({Scheme::RK4, 2}, sys, us, 0.01);
  for (int k = 0; k < 6; ++k) EXPECT_LT((out.col(k) - step({Scheme::RK4, 2}, sys, us.col(k), 0.01)).norm(), 1e-12);
}

TEST(Step, InvalidInputs) {
  EXPECT_THROW(step(kRk4, decay(), StateVec::Ones(1), 0.0), ContractViolation);
  EXPECT_THROW(step(kRk4, decay(), StateVec::Ones(2), 0.1), ContractViolation);
  EXPECT_THROW(step({Scheme::RK4, 0}, decay(), StateVec::Ones(1), 0.1), ContractViolation);
  EXPECT_THROW(step(kRk4, decay(), StateVec::Constant(1, NAN), 0.1), BlowUpError);
}

TEST(Step, EulerReferenceIsOneEulerStep) {
  const HybridSystem sys = l63_hybrid(1);
  const StateVec u = test::l63_attractor_point(1);
  EXPECT_EQ(euler_step(sys, u, 0.01), StateVec(u + 0.01 * sys.field(u)));
}

TEST(Rollout, SingleStep) {
  const HybridSystem sys = l63_hybrid(0);
  const StateVec u = StateVec::Ones(3);
  const Trajectory t = rollout(kRk4, sys, u, 1, 0.01);
  ASSERT_EQ(t.states.size(), 2u);
  EXPECT_EQ(t.n(), 1u);
  EXPECT_EQ(t.states[0], u);
  EXPECT_EQ(t.states[1], step(kRk4, sys, u, 0.01));
}

TEST(Rollout, CompositionIsBitwise) {
  const HybridSystem sys = l63_hybrid(0);
  const StateVec u = test::l63_attractor_point(3);
  const Trajectory four = rollout(kRk4, sys, u, 4, 0.01);
  const Trajectory two = rollout(kRk4, sys, rollout(kRk4, sys, u, 2, 0.01).last(), 2, 0.01);
  EXPECT_EQ(four.last(), two.last());
  EXPECT_EQ(four.states.size(), 5u);
}

TEST(Rollout, TrueLorenz63StaysBounded) {
  const Trajectory t = rollout(kRk4, HybridSystem(make_lorenz63_true()), StateVec::Ones(3), 1000, 0.01);
  for (const StateVec& s : t.states) EXPECT_LT(s.cwiseAbs().maxCoeff(), 60.0);
}

TEST(Rollout, BlowUpCarriesPartialTrajectory) {
  const HybridSystem grow(make_linear_field(Eigen::MatrixXd::Identity(1, 1)));
  try {
    rollout(kEuler, grow, StateVec::Ones(1), 100, 1.0);
    FAIL() << "expected blow-up";
  } catch (const BlowUpError& e) {
    // 2^20 > 1e6 is the first violation.
    EXPECT_EQ(e.step(), 20u);
    ASSERT_EQ(e.partial().size(), 20u);
    EXPECT_EQ(e.partial().back()(0), std::pow(2.0, 19));
  }
  EXPECT_THROW(rollout(kEuler, grow, StateVec::Ones(1), 0, 1.0), ContractViolation);
}

TEST(StepJacobian, EulerLinearIsExact) {
  const Eigen::MatrixXd a = test_matrix();
  const HybridSystem lin(make_linear_field(a));
  const double h = 0.05;
  const Eigen::MatrixXd j = step_jacobian(kEuler, lin, random_vector(3, 1), h);
  EXPECT_LT((j - (Eigen::MatrixXd::Identity(3, 3) + h * a)).cwiseAbs().maxCoeff(), 1e-15);
  const Eigen::MatrixXd t = tlm_core(kEuler, lin.core(), random_vector(3, 1), h);
  EXPECT_LT((t - (Eigen::MatrixXd::Identity(3, 3) + h * a)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(StepJacobian, ApproachesIdentityLinearlyInH) {
  const HybridSystem sys(make_lorenz63_true());
  const StateVec u = test::l63_attractor_point(4);
  double c = 0.0;
  for (double h : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const double dist = (step_jacobian(kRk4, sys, u, h) - Eigen::MatrixXd::Identity(3, 3)).norm();
    if (c == 0.0) c = 2.0 * dist / h;
    EXPECT_LE(dist, c * h) << h;
  }
}

TEST(StepJacobian, HybridRk4MatchesFiniteDifferences) {
  const HybridSystem sys = l63_hybrid(9);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const StateVec u = test::l63_attractor_point(s);
    const Eigen::MatrixXd fd = fd_jacobian([&](const Eigen::VectorXd& x) { return step(kRk4, sys, x, 0.01); }, u);
    EXPECT_LT(rel_error(step_jacobian(kRk4, sys, u, 0.01), fd), 1e-6);
  }
}

TEST(TlmCore, ZeroSubmodelEqualsHybridJacobian) {
  const HybridSystem sys(make_lorenz63_core(), MlpSubmodel({3, 3, 3, 3}));
  const StateVec u = test::l63_attractor_point(1);
  EXPECT_EQ(tlm_core(kRk4, sys.core(), u, 0.01), step_jacobian(kRk4, sys, u, 0.01));
  EXPECT_EQ(extended_tlm(kRk4, sys, u, 0.01), tlm_core(kRk4, sys.core(), u, 0.01));
}

TEST(TlmCore, Lorenz63CoreMatchesFiniteDifferences) {
  const HybridSystem core(make_lorenz63_core());
  const StateVec u = test::l63_attractor_point(6);
  const Eigen::MatrixXd fd = fd_jacobian([&](const Eigen::VectorXd& x) { return step(kRk4, core, x, 0.01); }, u);
  EXPECT_LT(rel_error(tlm_core(kRk4, core.core(), u, 0.01), fd), 1e-6);
}

TEST(ExtendedTlm, EulerEqualsStepJacobian) {
  const HybridSystem sys = l63_hybrid(2);
  const StateVec u = test::l63_attractor_point(2);
  EXPECT_LT((extended_tlm(kEuler, sys, u, 0.01) - step_jacobian(kEuler, sys, u, 0.01)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ExtendedTlm, RemainderIsSecondOrder) {
  const HybridSystem sys = l63_hybrid(2);
  const StateVec u = test::l63_attractor_point(2);
  std::vector<std::pair<double, double>> pts;
  for (double h : {0.1, 0.05, 0.025, 0.0125})
    pts.emplace_back(h, (extended_tlm(kRk4, sys, u, h) - step_jacobian(kRk4, sys, u, h)).norm());
  EXPECT_GE(slope(pts), 1.7);
}

TEST(SolverOrder, GlobalErrorOnDecay) {
  const double t_end = 1.0;
  std::vector<std::pair<double, double>> rk, eu;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    const auto n = static_cast<std::size_t>(std::lround(t_end / h));
    const double exact = std::exp(-t_end);
    rk.emplace_back(h, std::abs(rollout(kRk4, decay(), StateVec::Ones(1), n, h).last()(0) - exact));
    eu.emplace_back(h, std::abs(rollout(kEuler, decay(), StateVec::Ones(1), n, h).last()(0) - exact));
  }
  EXPECT_GE(slope(rk), 3.7);
  EXPECT_LE(slope(rk), 4.3);
  EXPECT_GE(slope(eu), 0.8);
  EXPECT_LE(slope(eu), 1.2);
}

TEST(SolverOrder, Rk4DeviatesFromEulerAtSecondOrder) {
  const HybridSystem sys = l63_hybrid(4);
  const StateVec u = test::l63_attractor_point(4);
  std::vector<std::pair<double, double>> pts;
  for (double h : {1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4})
    pts.emplace_back(h, (step(kRk4, sys, u, h) - euler_step(sys, u, h)).norm());
  EXPECT_GE(slope(pts), 1.7);
  EXPECT_LE(slope(pts), 2.3);
}

TEST(StepJacobian, ChainProductMatchesNStepMap) {
  const HybridSystem sys = l63_hybrid(8);
  const StateVec u = test::l63_attractor_point(8);
  for (std::size_t n : {1u, 5u, 10u}) {
    const Trajectory t = rollout(kRk4, sys, u, n, 0.01);
    Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(3, 3);
    for (std::size_t i = 0; i < n; ++i) prod = step_jacobian(kRk4, sys, t.states[i], 0.01) * prod;
    const Eigen::MatrixXd fd =
        fd_jacobian([&](const Eigen::VectorXd& x) { return rollout(kRk4, sys, x, n, 0.01).last(); }, u);
    EXPECT_LT(rel_error(prod, fd), 1e-5) << n;
  }
}

TEST(StepTape, MatchesPlainStep) {
  const HybridSystem sys = l63_hybrid(1);
  Eigen::MatrixXd us(3, 4);
  for (int k = 0; k < 4; ++k) us.col(k) = test::l63_attractor_point(k);
  Tape tape;
  const Var out = step_tape({Scheme::RK4, 3}, sys, tape, tape.variable(sys.submodel().params().values()),
                            tape.constant(us), 0.01);
  const Eigen::MatrixXd plain = step_batch({Scheme::RK4, 3}, sys, us, 0.01);
  EXPECT_LT((tape.value(out) - plain).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SolverKind, ParseAndValidate) {
  EXPECT_EQ(parse_scheme("rk4"), Scheme::RK4);
  EXPECT_EQ(parse_scheme("euler"), Scheme::ExplicitEuler);
  EXPECT_EQ(parse_scheme(scheme_name(Scheme::ExplicitEuler)), Scheme::ExplicitEuler);
  EXPECT_THROW(parse_scheme("dopri8"), ContractViolation);
  EXPECT_THROW((SolverKind{Scheme::RK4, 0}.validate()), ContractViolation);
}
