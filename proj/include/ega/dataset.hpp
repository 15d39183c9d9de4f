#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ega/solvers.hpp"

namespace ega {

/// One anchor u_dagger(t_k) with the n reference states that follow it at
/// stride h, plus the ideal sub-model response at the anchor when known.
struct Sample {
  StateVec anchor;
  std::vector<StateVec> targets;
  std::optional<StateVec> offline_target;
};

struct Dataset {
  std::vector<Sample> samples;
  double h = 0.0;
  std::size_t horizon = 0;
  int dim = 0;

  std::size_t size() const { return samples.size(); }
  bool has_offline_targets() const;
};

/// A reference system on its full state together with the imperfect core
/// that sees only the first `observed_dim` components.
struct Testbed {
  std::string name;
  CoreFieldPtr truth;
  CoreFieldPtr core;
  int observed_dim = 0;

  StateVec observe(const StateVec& full) const { return full.head(observed_dim); }
  /// P f_truth(z) - F(P z): the correction a perfect sub-model would supply.
  StateVec ideal_correction(const StateVec& full) const;
  /// Seeded initial full state near the attractor basin.
  StateVec initial_state(std::uint64_t seed) const;
};

Testbed lorenz63_testbed(const Lorenz63Params& p = {});
Testbed lorenz96_testbed(const L96Params& p = {});

struct GenerationSpec {
  StateVec initial;  // full state
  std::size_t burn_in = 1000;
  std::size_t samples = 5000;
  std::size_t horizon = 10;
  double h = 0.01;
  int substeps = 10;
};

/// Integrates the true system with RK4 + substeps, drops the burn-in, and
/// takes one anchor per stride followed by `horizon` targets.
Dataset generate_dataset(const Testbed& bed, const GenerationSpec& spec);

}  // namespace ega
