#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleetlife/model.hpp"

namespace fleetlife {

/// Weight laws for the random weighted likelihood bootstrap. Every law
/// has E(Z) = sqrt(Var(Z)) and Z > 0. `ones` is a degenerate diagnostic
/// law (every weight exactly 1) used to validate the machinery.
enum class WeightLaw { gamma_unit, gamma_half, gamma_two, beta_sqrt, ones };

WeightLaw parse_weight_law(const std::string& s);
std::string weight_law_name(WeightLaw law);

/// n i.i.d. draws from the law; deterministic in (law, n, seed).
std::vector<double> draw_weights(WeightLaw law, std::size_t n, std::uint64_t seed);

struct BootstrapEnsemble {
  ModelSpec spec;
  FitResult base_fit;
  WeightLaw law = WeightLaw::gamma_unit;
  std::uint64_t master_seed = 0;
  int requested = 0;     // B
  int failed_count = 0;  // replicates that did not converge
  std::vector<std::vector<double>> replicates;  // converged parameter vectors
  std::vector<std::uint64_t> seeds;             // per converged replicate
};

struct BootstrapOptions {
  int jobs = 1;
  double max_failed_fraction = 0.05;
};

/// Refit the model B times under fresh i.i.d. likelihood weights.
/// Replicate b's weight seed depends only on (master_seed, b), so the
/// ensemble is identical for any parallel schedule and any B' >= b.
BootstrapEnsemble run_bootstrap(const ModelSpec& spec, const std::vector<LifetimeObservation>& obs,
                                const FitResult& base_fit, WeightLaw law, int B,
                                std::uint64_t master_seed, const BootstrapOptions& opts = {});

}  // namespace fleetlife
