#include <cmath>

#include <gtest/gtest.h>

#include "ega/hybrid.hpp"
#include "ega/mlp.hpp"
#include "test_util.hpp"

using namespace ega;
using test::fd_jacobian;
using test::random_vector;
using test::rel_error;

namespace {

Eigen::Vector3d v3(double a, double b, double c) { return {a, b, c}; }

// Plain re-implementation of the dense forward pass, independent of the
// library's batched evaluation.
Eigen::VectorXd reference_forward(const MlpSubmodel& m, const Eigen::VectorXd& u) {
  const auto layers = m.params().unflatten();
  Eigen::VectorXd x = u;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd y = layers[l].bias;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      for (Eigen::Index j = 0; j < x.size(); ++j) y(i) += layers[l].weight(i, j) * x(j);
    if (l + 1 < layers.size())
      for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::tanh(y(i));
    x = y;
  }
  return x;
}

}  // namespace

TEST(Lorenz63, TrueFieldExamples) {
  EXPECT_EQ(lorenz63_true(Eigen::Vector3d::Zero()), Eigen::VectorXd(Eigen::Vector3d::Zero()));
  const StateVec f = lorenz63_true(v3(1, 1, 1));
  EXPECT_DOUBLE_EQ(f(0), 0.0);
  EXPECT_DOUBLE_EQ(f(1), 26.0);
  EXPECT_DOUBLE_EQ(f(2), 1.0 - 8.0 / 3.0);
  const double r = std::sqrt(72.0);
  EXPECT_NEAR(lorenz63_true(v3(r, r, 27))(2), 0.0, 1e-12);
}

TEST(Lorenz63, CoreFieldExamples) {
  EXPECT_EQ(lorenz63_core(v3(0, 0, 5)), Eigen::VectorXd(Eigen::Vector3d::Zero()));
  EXPECT_EQ(lorenz63_core(v3(1, 1, 1)), Eigen::VectorXd(v3(0, 26, 1)));
}

TEST(Lorenz63, DefectIdentityIsExact) {
  const Lorenz63Params p;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const StateVec u = random_vector(3, s, -30, 30);
    const StateVec diff = lorenz63_true(u, p) - lorenz63_core(u, p);
    EXPECT_EQ(diff(0), 0.0);
    EXPECT_EQ(diff(1), 0.0);
    // (u1 u2 - beta u3) - u1 u2 carries one rounding of the larger term.
    EXPECT_NEAR(diff(2), -p.beta * u(2), 4e-16 * (std::abs(u(0) * u(1)) + std::abs(p.beta * u(2))));
  }
}

TEST(Lorenz63, WrongDimensionRaises) {
  EXPECT_THROW(lorenz63_true(StateVec::Ones(4)), ContractViolation);
  EXPECT_THROW(lorenz63_core(StateVec::Ones(2)), ContractViolation);
}

TEST(L96, ZeroStateGivesForcing) {
  const L96Params p;
  L96FullState z{StateVec::Zero(p.S), Eigen::MatrixXd::Zero(p.B, p.S)};
  const L96FullState dz = l96_full(z, p);
  EXPECT_EQ(dz.slow, StateVec::Constant(p.S, 8.0));
  EXPECT_EQ(dz.fast, Eigen::MatrixXd::Zero(p.B, p.S));
  EXPECT_EQ(l96_slow(StateVec::Zero(p.S), p), StateVec::Constant(p.S, 8.0));
}

TEST(L96, CouplingOfUnitFastColumn) {
  const L96Params p;
  const StateVec r = l96_coupling(Eigen::MatrixXd::Ones(p.B, p.S), p);
  EXPECT_EQ(r, StateVec::Constant(p.S, -5.0));
}

TEST(L96, UniformEquilibrium) {
  const L96Params p;
  L96FullState z{StateVec::Constant(p.S, p.A), Eigen::MatrixXd::Zero(p.B, p.S)};
  EXPECT_EQ(l96_full(z, p).slow, StateVec::Zero(p.S));
}

TEST(L96, OneHotSlowState) {
  const L96Params p;
  StateVec u = StateVec::Zero(8);
  u(0) = 1.0;
  // du_s = -u_{s-1}(u_{s-2} - u_{s+1}) - u_s + A; only terms touching u_0 survive.
  StateVec expected = StateVec::Constant(8, 8.0);
  expected(0) = 7.0;  // -u_0
  expected(1) = 8.0;  // -u_0 (u_7 - u_2) = 0
  expected(2) = 8.0;  // -u_1 (u_0 - u_3) = 0
  expected(7) = 8.0;  // -u_6 (u_5 - u_0) = 0
  EXPECT_EQ(l96_slow(u, p), expected);

  // And the nonzero advection case: u_0 = u_1 = 1 gives du_2 = -u_1 u_0 + A.
  u(1) = 1.0;
  EXPECT_DOUBLE_EQ(l96_slow(u, p)(2), 8.0 - 1.0);
  EXPECT_DOUBLE_EQ(l96_slow(u, p)(1), -1.0 * (u(7) - u(2)) - 1.0 + 8.0);
}

TEST(L96, FullMinusSlowIsCoupling) {
  const L96Params p;
  for (std::uint64_t s = 0; s < 50; ++s) {
    L96FullState z{random_vector(p.S, s, -5, 10), Eigen::MatrixXd::Random(p.B, p.S)};
    const StateVec slow = l96_slow(z.slow, p);
    const StateVec diff = l96_full(z, p).slow - slow;
    const StateVec r = l96_coupling(z.fast, p);
    for (int i = 0; i < p.S; ++i) EXPECT_NEAR(diff(i), r(i), 4e-16 * (std::abs(slow(i)) + std::abs(r(i))));
  }
}

TEST(L96, FastWrapsWithinColumn) {
  const L96Params p;
  L96FullState z{StateVec::Zero(p.S), Eigen::MatrixXd::Zero(p.B, p.S)};
  z.fast.col(2).setLinSpaced(p.B, 1.0, 5.0);
  const L96FullState dz = l96_full(z, p);
  // Other columns see nothing from column 2.
  for (int s = 0; s < p.S; ++s) {
    if (s != 2) EXPECT_EQ(dz.fast.col(s), Eigen::VectorXd::Zero(p.B)) << s;
  }
  for (int b = 0; b < p.B; ++b) {
    auto y = [&](int k) { return z.fast((k % p.B + p.B) % p.B, 2); };
    const double want = -p.c * p.gamma * y(b + 1) * (y(b + 2) - y(b - 1)) - p.c * y(b);
    EXPECT_DOUBLE_EQ(dz.fast(b, 2), want);
  }
}

TEST(L96, PackUnpackRoundTrip) {
  const L96Params p;
  L96FullState z{random_vector(p.S, 3), Eigen::MatrixXd::Random(p.B, p.S)};
  const L96FullState back = L96FullState::unpack(z.pack(), p);
  EXPECT_EQ(back.slow, z.slow);
  EXPECT_EQ(back.fast, z.fast);
  EXPECT_THROW(L96FullState::unpack(StateVec::Zero(10), p), ContractViolation);
}

TEST(L96, ParamsValidation) {
  L96Params p;
  p.S = 3;
  EXPECT_THROW(p.validate(), ContractViolation);
}

TEST(Mlp, ZeroWeightsGiveZero) {
  const MlpSubmodel m({3, 3, 3, 3});
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_EQ(m.forward(random_vector(3, s)), StateVec::Zero(3));
}

TEST(Mlp, SingleLinearLayer) {
  MlpSubmodel m({3, 3});
  Eigen::MatrixXd w(3, 3);
  w << 1, 2, 3, 4, 5, 6, 7, 8, -9;
  m.params().weight(0) = w;
  const StateVec u = v3(0.5, -1, 2);
  EXPECT_EQ(m.forward(u), StateVec(w * u));
}

TEST(Mlp, MatchesIndependentForward) {
  const MlpSubmodel m = MlpSubmodel::random({3, 3, 3, 3}, 42);
  EXPECT_LT((m.forward(StateVec::Ones(3)) - reference_forward(m, StateVec::Ones(3))).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Mlp, InitialisationBounds) {
  const MlpSubmodel m = MlpSubmodel::random({3, 100, 3}, 7);
  EXPECT_LE(m.params().weight(0).cwiseAbs().maxCoeff(), std::sqrt(1.0 / 3.0));
  EXPECT_LE(m.params().weight(1).cwiseAbs().maxCoeff(), std::sqrt(1.0 / 100.0));
  EXPECT_EQ(MlpSubmodel::random({3, 4, 3}, 7).params().values(), MlpSubmodel::random({3, 4, 3}, 7).params().values());
  EXPECT_NE(MlpSubmodel::random({3, 4, 3}, 7).params().values(), MlpSubmodel::random({3, 4, 3}, 8).params().values());
}

TEST(Mlp, RequiresMatchingInputOutput) {
  EXPECT_THROW(MlpSubmodel({3, 4, 2}), ContractViolation);
  const MlpSubmodel m({3, 3});
  EXPECT_THROW(m.forward(StateVec::Ones(4)), ContractViolation);
}

TEST(Mlp, DualTapeAndBatchAgreeWithPlain) {
  const MlpSubmodel m = MlpSubmodel::random({3, 5, 5, 3}, 5);
  Eigen::MatrixXd us(3, 10);
  for (int k = 0; k < 10; ++k) us.col(k) = random_vector(3, 100 + k, -10, 10);
  const Eigen::MatrixXd batch = m.forward_batch(us);
  Tape tape;
  const Eigen::MatrixXd taped =
      tape.value(m.forward(tape, tape.variable(m.params().values()), tape.constant(us)));
  for (int k = 0; k < 10; ++k) {
    const StateVec plain = m.forward(StateVec(us.col(k)));
    DualVec x(3);
    for (int i = 0; i < 3; ++i) x[static_cast<std::size_t>(i)] = Dual(us(i, k));
    const DualVec y = m.forward(x);
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(y[static_cast<std::size_t>(i)].value(), plain(i), 1e-14);
      EXPECT_NEAR(taped(i, k), plain(i), 1e-14);
      EXPECT_NEAR(batch(i, k), plain(i), 1e-14);
    }
  }
}

TEST(Mlp, JacobiansMatchFiniteDifferences) {
  const MlpSubmodel m = MlpSubmodel::random({3, 3, 3, 3}, 17);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const StateVec u = random_vector(3, 200 + s, -3, 3);
    const Eigen::MatrixXd ji = m.input_jacobian(u);
    const Eigen::MatrixXd fdi = fd_jacobian([&](const Eigen::VectorXd& x) { return m.forward(x); }, u);
    EXPECT_LT(rel_error(ji, fdi), 1e-5);
    const Eigen::MatrixXd jp = m.param_jacobian(u);
    const Eigen::MatrixXd fdp = fd_jacobian(
        [&](const Eigen::VectorXd& th) {
          MlpSubmodel c = m;
          c.set_params(th);
          return c.forward(u);
        },
        m.params().values());
    EXPECT_LT(rel_error(jp, fdp), 1e-5);
  }
}

TEST(Mlp, ParamVjpContractsJacobians) {
  const MlpSubmodel m = MlpSubmodel::random({3, 4, 3}, 2);
  Eigen::MatrixXd us(3, 4), ws(3, 4);
  for (int k = 0; k < 4; ++k) {
    us.col(k) = random_vector(3, k, -2, 2);
    ws.col(k) = random_vector(3, 50 + k);
  }
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(m.param_count());
  for (int k = 0; k < 4; ++k) expected += m.param_jacobian(us.col(k)).transpose() * ws.col(k);
  EXPECT_LT(rel_error(m.param_vjp(us, ws), expected), 1e-13);
}

TEST(Hybrid, AdditivityIsExact) {
  const HybridSystem sys(make_lorenz63_core(), MlpSubmodel::random({3, 3, 3, 3}, 1));
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const StateVec u = random_vector(3, s, -25, 45);
    const StateVec expected = lorenz63_core(u) + sys.submodel().forward(u);
    EXPECT_EQ(hybrid_field(sys, u), expected);
    EXPECT_EQ(sys.field(u) - lorenz63_core(u), expected - lorenz63_core(u));
  }
}

TEST(Hybrid, ZeroSubmodelEqualsCore) {
  const HybridSystem sys(make_lorenz63_core(), MlpSubmodel({3, 3, 3, 3}));
  const StateVec u = random_vector(3, 4, -10, 10);
  EXPECT_EQ(sys.field(u), lorenz63_core(u));
  EXPECT_EQ(sys.core_only().field(u), lorenz63_core(u));
  EXPECT_FALSE(sys.core_only().has_submodel());
}

TEST(Hybrid, DimensionMismatchRaises) {
  EXPECT_THROW(HybridSystem(make_lorenz63_core(), MlpSubmodel({4, 4})), ContractViolation);
}

TEST(Fields, TapeEvaluationMatchesPlain) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(3, 3);
  for (const CoreFieldPtr& f : {make_lorenz63_true(), make_lorenz63_core(), make_linear_field(a)}) {
    Eigen::MatrixXd us(3, 5);
    for (int k = 0; k < 5; ++k) us.col(k) = random_vector(3, k, -10, 10);
    Tape t;
    const Eigen::MatrixXd taped = t.value(f->eval(t, t.constant(us)));
    for (int k = 0; k < 5; ++k) EXPECT_LT((taped.col(k) - f->eval(StateVec(us.col(k)))).norm(), 1e-12) << f->name();
  }
  const CoreFieldPtr slow = make_l96_slow();
  const Eigen::MatrixXd us = Eigen::MatrixXd::Random(8, 3) * 5;
  Tape t;
  const Eigen::MatrixXd taped = t.value(slow->eval(t, t.constant(us)));
  for (int k = 0; k < 3; ++k) EXPECT_LT((taped.col(k) - slow->eval(StateVec(us.col(k)))).norm(), 1e-12);
}
