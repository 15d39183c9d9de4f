#include <numeric>

#include <gtest/gtest.h>

#include "ega/dataset.hpp"
#include "ega/training.hpp"
#include "test_util.hpp"

using namespace ega;
using test::random_vector;
using test::rel_error;

namespace {

Dataset l63_data(std::size_t samples = 200, std::size_t horizon = 10) {
  const Testbed bed = lorenz63_testbed();
  GenerationSpec spec;
  spec.initial = bed.initial_state(1);
  spec.samples = samples;
  spec.horizon = horizon;
  return generate_dataset(bed, spec);
}

HybridSystem l63_hybrid(std::uint64_t seed) {
  return HybridSystem(make_lorenz63_core(), MlpSubmodel::random({3, 3, 3, 3}, seed));
}

std::vector<std::size_t> iota(std::size_t first, std::size_t count) {
  std::vector<std::size_t> v(count);
  std::iota(v.begin(), v.end(), first);
  return v;
}

TrainConfig small_config(TrainMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.solver = {Scheme::RK4, 1};
  c.horizon = 5;
  c.batch = 16;
  c.epochs = 3;
  c.optimizer.lr = 1e-2;
  c.seed = 4;
  return c;
}

const SolverKind kRk4{Scheme::RK4, 1};

}  // namespace

TEST(Dataset, SingleSampleSingleTarget) {
  const Testbed bed = lorenz63_testbed();
  GenerationSpec spec;
  spec.initial = bed.initial_state(0);
  spec.samples = 1;
  spec.horizon = 1;
  spec.burn_in = 10;
  const Dataset d = generate_dataset(bed, spec);
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d.samples[0].targets.size(), 1u);
  const StateVec next = step({Scheme::RK4, spec.substeps}, HybridSystem(bed.truth), d.samples[0].anchor, spec.h);
  EXPECT_EQ(d.samples[0].targets[0], next);
}

TEST(Dataset, AnchorsAreConsecutiveStatesOfOneRun) {
  const Dataset d = l63_data(20, 4);
  for (std::size_t k = 1; k < d.size(); ++k) {
    EXPECT_EQ(d.samples[k].anchor, d.samples[k - 1].targets[0]);
    EXPECT_EQ(d.samples[k].targets[2], d.samples[k - 1].targets[3]);
  }
  EXPECT_EQ(d.horizon, 4u);
  EXPECT_EQ(d.dim, 3);
}

TEST(Dataset, Lorenz63StaysOnAttractor) {
  const Dataset d = l63_data(5000, 10);
  for (const Sample& s : d.samples) {
    EXPECT_LT(std::abs(s.anchor(2)), 60.0);
    EXPECT_EQ(s.targets.size(), 10u);
    // Offline target is the missing damping term.
    const StateVec& r = *s.offline_target;
    EXPECT_EQ(r(0), 0.0);
    EXPECT_EQ(r(1), 0.0);
    EXPECT_NEAR(r(2), -8.0 / 3.0 * s.anchor(2), 1e-12);
  }
}

TEST(Dataset, L96OfflineTargetIsCoupling) {
  const Testbed bed = lorenz96_testbed();
  const L96Params p;
  L96FullState z{random_vector(p.S, 1, -5, 10), Eigen::MatrixXd::Zero(p.B, p.S)};
  EXPECT_EQ(bed.ideal_correction(z.pack()), StateVec::Zero(p.S));
  z.fast = Eigen::MatrixXd::Random(p.B, p.S);
  EXPECT_LT((bed.ideal_correction(z.pack()) - l96_coupling(z.fast, p)).norm(), 1e-12);
  EXPECT_EQ(bed.observe(z.pack()), z.slow);
}

TEST(Dataset, RejectsEmpty) {
  const Testbed bed = lorenz63_testbed();
  GenerationSpec spec;
  spec.initial = bed.initial_state(0);
  spec.samples = 0;
  EXPECT_THROW(generate_dataset(bed, spec), ContractViolation);
}

TEST(Split, ContiguousTail) {
  const Split s = split_dataset(100, 0.1);
  EXPECT_EQ(s.train, iota(0, 90));
  EXPECT_EQ(s.validation, iota(90, 10));
  EXPECT_TRUE(split_dataset(10, 0.0).validation.empty());
}

TEST(OfflineLoss, FormulaExamples) {
  const Dataset d = l63_data(50);
  const auto batch = iota(0, 50);
  const MlpSubmodel zero({3, 3, 3, 3});
  double mean_r = 0.0;
  for (const Sample& s : d.samples) mean_r += s.offline_target->squaredNorm();
  EXPECT_NEAR(offline_loss(zero, d, batch), mean_r / 50, 1e-12 * mean_r);

  const MlpSubmodel m = MlpSubmodel::random({3, 3, 3, 3}, 3);
  Dataset fitted = d;
  for (Sample& s : fitted.samples) s.offline_target = m.forward(s.anchor);
  EXPECT_EQ(offline_loss(m, fitted, batch), 0.0);
  EXPECT_NEAR(offline_loss(m, fitted, batch, 0.5), 0.5 * m.params().values().squaredNorm(), 1e-14);
}

TEST(OfflineLoss, L96MatchesDirectFormula) {
  const Testbed bed = lorenz96_testbed();
  GenerationSpec spec;
  spec.initial = bed.initial_state(2);
  spec.samples = 30;
  spec.horizon = 2;
  spec.burn_in = 100;
  spec.h = 0.1;
  spec.substeps = 20;
  const Dataset d = generate_dataset(bed, spec);
  const MlpSubmodel m = MlpSubmodel::random({8, 20, 8}, 1);
  const std::vector<std::size_t> batch{3, 7, 11, 29};
  double expected = 0.0;
  for (std::size_t k : batch) expected += (*d.samples[k].offline_target - m.forward(d.samples[k].anchor)).squaredNorm();
  expected = expected / 4 + 1e-3 * m.params().values().squaredNorm();
  EXPECT_NEAR(offline_loss(m, d, batch, 1e-3), expected, 1e-12 * expected);
}

TEST(OfflineLoss, MissingTargetsRaise) {
  Dataset d = l63_data(5);
  d.samples[2].offline_target.reset();
  EXPECT_THROW(offline_loss(MlpSubmodel({3, 3}), d, iota(0, 5)), ContractViolation);
}

TEST(OnlineLoss, SingleStepSingleSample) {
  const Dataset d = l63_data(5);
  const HybridSystem sys = l63_hybrid(1);
  const std::vector<std::size_t> batch{2};
  const OnlineLoss l = online_loss(sys, kRk4, d, batch, 1);
  const double expected = (d.samples[2].targets[0] - step(kRk4, sys, d.samples[2].anchor, d.h)).squaredNorm();
  EXPECT_DOUBLE_EQ(l.loss, expected);
  ASSERT_EQ(l.trajectories.size(), 1u);
}

TEST(OnlineLoss, PerfectModelSitsAtSolverFloor) {
  const Dataset d = l63_data(100);
  const auto batch = iota(0, 100);
  const double perfect = online_loss(HybridSystem(make_lorenz63_true()), {Scheme::RK4, 10}, d, batch, 10).loss;
  EXPECT_LT(perfect, 1e-8);
  const HybridSystem core(make_lorenz63_core(), MlpSubmodel({3, 3, 3, 3}));
  const double zero = online_loss(core, {Scheme::RK4, 10}, d, batch, 10).loss;
  EXPECT_GT(zero, perfect);
  EXPECT_EQ(zero, online_loss(HybridSystem(make_lorenz63_core()), {Scheme::RK4, 10}, d, batch, 10).loss);
}

TEST(OnlineLoss, HorizonBeyondDataRaises) {
  const Dataset d = l63_data(5, 3);
  EXPECT_THROW(online_loss(l63_hybrid(0), kRk4, d, iota(0, 5), 4), ContractViolation);
}

TEST(BatchGradient, OnlineMatchesPerSampleAverage) {
  const Dataset d = l63_data(40);
  const HybridSystem sys = l63_hybrid(2);
  const std::vector<std::size_t> batch{1, 5, 9, 30};
  for (auto method : {JacobianMethod::Exact, JacobianMethod::Static, JacobianMethod::Tlm}) {
    TrainConfig c = small_config(TrainMode::Online);
    c.jacobian.method = method;
    const BatchGradient g = batch_gradient(sys, d, batch, c);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(sys.param_count());
    for (std::size_t k : batch) {
      const std::vector<StateVec> targets(d.samples[k].targets.begin(), d.samples[k].targets.begin() + 5);
      expected += ega_loss_gradient(sys, c.solver, d.samples[k].anchor, targets, d.h, c.jacobian);
    }
    expected /= 4.0;
    EXPECT_LT(rel_error(g.gradient, expected), 1e-12) << method_name(method);
    EXPECT_DOUBLE_EQ(g.loss, online_loss(sys, c.solver, d, batch, 5).loss);
  }
}

TEST(BatchGradient, OnlineExactMatchesTapePerSample) {
  const Dataset d = l63_data(40);
  const HybridSystem sys = l63_hybrid(2);
  const std::vector<std::size_t> batch{0, 17, 33};
  const TrainConfig c = small_config(TrainMode::OnlineExact);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(sys.param_count());
  for (std::size_t k : batch) {
    const std::vector<StateVec> targets(d.samples[k].targets.begin(), d.samples[k].targets.begin() + 5);
    expected += exact_loss_gradient(sys, c.solver, d.samples[k].anchor, targets, d.h);
  }
  EXPECT_LT(rel_error(batch_gradient(sys, d, batch, c).gradient, expected / 3.0), 1e-12);
}

TEST(BatchGradient, OfflineMatchesFiniteDifferences) {
  const Dataset d = l63_data(40);
  const HybridSystem sys = l63_hybrid(6);
  const auto batch = iota(3, 10);
  TrainConfig c = small_config(TrainMode::Offline);
  c.reg_weight = 1e-2;
  const BatchGradient g = batch_gradient(sys, d, batch, c);
  const Eigen::VectorXd fd = test::fd_gradient(
      [&](const Eigen::VectorXd& th) {
        MlpSubmodel m = sys.submodel();
        m.set_params(th);
        return offline_loss(m, d, batch, 1e-2);
      },
      sys.submodel().params().values());
  EXPECT_LT(rel_error(g.gradient, fd), 1e-6);
}

TEST(BatchGradient, ThreadCountDoesNotChangeResult) {
  const Dataset d = l63_data(60);
  const HybridSystem sys = l63_hybrid(3);
  const auto batch = iota(0, 32);
  for (auto method : {JacobianMethod::Exact, JacobianMethod::Etlm}) {
    TrainConfig c = small_config(TrainMode::Online);
    c.jacobian.method = method;
    const BatchGradient one = batch_gradient(sys, d, batch, c);
    c.threads = 3;
    const BatchGradient three = batch_gradient(sys, d, batch, c);
    EXPECT_EQ(one.gradient, three.gradient);
  }
}

TEST(BatchGradient, SmallStepDescends) {
  const Dataset d = l63_data(300);
  std::mt19937_64 rng(5);
  for (auto mode : {TrainMode::Offline, TrainMode::Online, TrainMode::OnlineExact}) {
    TrainConfig c = small_config(mode);
    c.optimizer.kind = OptimizerKind::Sgd;
    c.optimizer.lr = 1e-6;
    for (int b = 0; b < 20; ++b) {
      HybridSystem sys = l63_hybrid(static_cast<std::uint64_t>(b));
      std::vector<std::size_t> batch(16);
      std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
      for (auto& k : batch) k = pick(rng);
      const BatchGradient g = batch_gradient(sys, d, batch, c);
      Eigen::VectorXd theta = sys.submodel().params().values();
      Optimizer(c.optimizer, theta.size()).step(theta, g.gradient);
      sys.submodel().set_params(theta);
      const double after = batch_gradient(sys, d, batch, c).loss;
      EXPECT_LE(after, g.loss) << train_mode_name(mode) << " batch " << b;
    }
  }
}

TEST(Optimizer, AdamFirstStepIsSignStep) {
  OptimizerConfig oc;
  oc.lr = 0.1;
  Optimizer opt(oc, 3);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  opt.step(theta, Eigen::Vector3d(2.0, -0.5, 0.0));
  EXPECT_NEAR(theta(0), -0.1, 1e-8);
  EXPECT_NEAR(theta(1), 0.1, 1e-8);
  EXPECT_EQ(theta(2), 0.0);
}

TEST(Optimizer, SgdStep) {
  OptimizerConfig oc;
  oc.kind = OptimizerKind::Sgd;
  oc.lr = 0.5;
  Optimizer opt(oc, 2);
  Eigen::VectorXd theta = Eigen::Vector2d(1.0, 1.0);
  opt.step(theta, Eigen::Vector2d(2.0, -4.0));
  EXPECT_EQ(theta, Eigen::VectorXd(Eigen::Vector2d(0.0, 3.0)));
}

TEST(Train, ZeroLearningRateKeepsParams) {
  const Dataset d = l63_data(100);
  for (auto mode : {TrainMode::Offline, TrainMode::Online}) {
    HybridSystem sys = l63_hybrid(1);
    const Eigen::VectorXd before = sys.submodel().params().values();
    TrainConfig c = small_config(mode);
    c.optimizer.lr = 0.0;
    const TrainReport r = train(sys, d, c);
    EXPECT_EQ(r.final_params, before);
    EXPECT_EQ(sys.submodel().params().values(), before);
  }
}

TEST(Train, HistoriesHaveOneEntryPerEpoch) {
  const Dataset d = l63_data(100);
  HybridSystem sys = l63_hybrid(1);
  const TrainReport r = train(sys, d, small_config(TrainMode::Offline));
  EXPECT_EQ(r.train_loss.size(), 3u);
  EXPECT_EQ(r.val_loss.size(), 3u);
  EXPECT_EQ(r.val_online_loss.size(), 3u);
  EXPECT_EQ(r.skipped_per_epoch.size(), 3u);
}

TEST(Train, SameSeedIsBitwiseReproducible) {
  const Dataset d = l63_data(150);
  for (auto method : {JacobianMethod::Static, JacobianMethod::Etlm}) {
    TrainConfig c = small_config(TrainMode::Online);
    c.jacobian.method = method;
    HybridSystem a = l63_hybrid(2), b = l63_hybrid(2);
    const TrainReport ra = train(a, d, c);
    const TrainReport rb = train(b, d, c);
    EXPECT_EQ(ra.train_loss, rb.train_loss);
    EXPECT_EQ(ra.val_loss, rb.val_loss);
    EXPECT_EQ(ra.final_params, rb.final_params);

    c.seed = 99;
    HybridSystem other = l63_hybrid(2);
    EXPECT_NE(train(other, d, c).train_loss, ra.train_loss);
  }
}

TEST(Train, OnlineTrainingReducesLoss) {
  const Dataset d = l63_data(500);
  HybridSystem sys = l63_hybrid(0);
  TrainConfig c = small_config(TrainMode::Online);
  c.epochs = 10;
  const TrainReport r = train(sys, d, c);
  EXPECT_LT(r.val_online_loss.back(), r.initial_val_online_loss);
}

TEST(Train, AbortsWhenMostBatchesBlowUp) {
  const Dataset d = l63_data(100);
  // A linear submodel du = 1e4 u overflows the blow-up threshold within the first step.
  MlpSubmodel wild = MlpSubmodel::random({3, 3}, 1);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(12);
  w(0) = w(4) = w(8) = 1e4;
  wild.set_params(w);
  HybridSystem sys(make_lorenz63_core(), wild);
  TrainConfig c = small_config(TrainMode::Online);
  c.horizon = 10;
  EXPECT_THROW(train(sys, d, c), TrainingAborted);
}

TEST(Train, RejectsBadConfig) {
  const Dataset d = l63_data(20, 3);
  HybridSystem sys = l63_hybrid(0);
  TrainConfig c = small_config(TrainMode::Online);
  EXPECT_THROW(train(sys, d, c), ContractViolation);  // horizon 5 > 3
  c.horizon = 3;
  c.optimizer.lr = -1.0;
  EXPECT_THROW(train(sys, d, c), ContractViolation);
  c.optimizer.lr = 1e-3;
  c.batch = 0;
  EXPECT_THROW(train(sys, d, c), ContractViolation);
}

TEST(FineTune, ZeroEpochsKeepsParams) {
  const Dataset d = l63_data(100);
  HybridSystem sys = l63_hybrid(1);
  const Eigen::VectorXd before = sys.submodel().params().values();
  TrainConfig c = small_config(TrainMode::Online);
  c.epochs = 0;
  const TrainReport r = fine_tune(sys, d, c);
  EXPECT_EQ(r.final_params, before);
  EXPECT_TRUE(r.train_loss.empty());
  EXPECT_THROW(fine_tune(sys, d, small_config(TrainMode::Offline)), ContractViolation);
}

TEST(TrainMode, Names) {
  for (auto m : {TrainMode::Offline, TrainMode::Online, TrainMode::OnlineExact})
    EXPECT_EQ(parse_train_mode(train_mode_name(m)), m);
  EXPECT_THROW(parse_train_mode("hybrid"), ContractViolation);
}
