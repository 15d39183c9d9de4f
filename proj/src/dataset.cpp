#include "ega/dataset.hpp"

#include <random>

namespace ega {

bool Dataset::has_offline_targets() const {
  if (samples.empty()) return false;
  for (const auto& s : samples) {
    if (!s.offline_target) return false;
  }
  return true;
}

StateVec Testbed::ideal_correction(const StateVec& full) const {
  const StateVec u = observe(full);
  return StateVec(truth->eval(full).head(observed_dim)) - core->eval(u);
}

StateVec Testbed::initial_state(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  const int full = truth->dim();
  StateVec z(full);
  if (full == 3) {
    for (int i = 0; i < 3; ++i) z(i) = 1.0 + noise(rng);
  } else {
    // Two-scale L96: slow near the forcing value, fast small.
    for (int i = 0; i < observed_dim; ++i) z(i) = 8.0 + noise(rng);
    for (int i = observed_dim; i < full; ++i) z(i) = 0.1 * noise(rng);
  }
  return z;
}

Testbed lorenz63_testbed(const Lorenz63Params& p) {
  return {"l63", make_lorenz63_true(p), make_lorenz63_core(p), 3};
}

Testbed lorenz96_testbed(const L96Params& p) {
  p.validate();
  return {"l96", make_l96_full(p), make_l96_slow(p), p.S};
}

Dataset generate_dataset(const Testbed& bed, const GenerationSpec& spec) {
  require(spec.samples >= 1, "generate_dataset: need at least one sample");
  require(spec.horizon >= 1, "generate_dataset: horizon must be >= 1");
  require(spec.h > 0.0, "generate_dataset: h must be positive");
  require(spec.initial.size() == bed.truth->dim(), "generate_dataset: initial state has the wrong dimension");

  const HybridSystem truth(bed.truth);
  const SolverKind kind{Scheme::RK4, spec.substeps};
  StateVec z = spec.initial;
  if (spec.burn_in > 0) z = rollout(kind, truth, z, spec.burn_in, spec.h).last();
  const Trajectory traj = rollout(kind, truth, z, spec.samples + spec.horizon - 1, spec.h);

  Dataset data;
  data.h = spec.h;
  data.horizon = spec.horizon;
  data.dim = bed.observed_dim;
  data.samples.reserve(spec.samples);
  for (std::size_t k = 0; k < spec.samples; ++k) {
    Sample s;
    s.anchor = bed.observe(traj.states[k]);
    s.targets.reserve(spec.horizon);
    for (std::size_t j = 1; j <= spec.horizon; ++j) s.targets.push_back(bed.observe(traj.states[k + j]));
    s.offline_target = bed.ideal_correction(traj.states[k]);
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace ega
