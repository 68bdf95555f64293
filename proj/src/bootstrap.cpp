#include "fleetlife/bootstrap.hpp"

#include <cmath>

#include "fleetlife/rng.hpp"
#include "fleetlife/util.hpp"

namespace fleetlife {

WeightLaw parse_weight_law(const std::string& s) {
  std::string v = to_lower(trim(s));
  if (v == "gamma1" || v == "gamma(1,1)" || v == "gamma_unit") return WeightLaw::gamma_unit;
  if (v == "gamma05" || v == "gamma(1,0.5)" || v == "gamma_half") return WeightLaw::gamma_half;
  if (v == "gamma2" || v == "gamma(1,2)" || v == "gamma_two") return WeightLaw::gamma_two;
  if (v == "betasqrt" || v == "beta_sqrt") return WeightLaw::beta_sqrt;
  if (v == "ones") return WeightLaw::ones;
  throw DataError("unknown weight law '" + s + "'");
}

std::string weight_law_name(WeightLaw law) {
  switch (law) {
    case WeightLaw::gamma_unit: return "gamma1";
    case WeightLaw::gamma_half: return "gamma05";
    case WeightLaw::gamma_two: return "gamma2";
    case WeightLaw::beta_sqrt: return "betasqrt";
    case WeightLaw::ones: return "ones";
  }
  return "?";
}

std::vector<double> draw_weights(WeightLaw law, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DataError("draw_weights needs n >= 1");
  std::vector<double> w(n);
  Rng rng(seed);
  // Gamma with shape 1 is exponential, so inverse-cdf draws are exact.
  // Beta(a,1) has cdf u^a on (0,1), so the inverse is u^(1/a).
  const double beta_a = std::sqrt(2.0) - 1.0;
  for (auto& v : w) {
    switch (law) {
      case WeightLaw::gamma_unit: v = -std::log(rng.uniform()); break;
      case WeightLaw::gamma_half: v = -0.5 * std::log(rng.uniform()); break;
      case WeightLaw::gamma_two: v = -2.0 * std::log(rng.uniform()); break;
      case WeightLaw::beta_sqrt: v = std::pow(rng.uniform(), 1.0 / beta_a); break;
      case WeightLaw::ones: v = 1.0; break;
    }
  }
  return w;
}

BootstrapEnsemble run_bootstrap(const ModelSpec& spec, const std::vector<LifetimeObservation>& obs,
                                const FitResult& base_fit, WeightLaw law, int B,
                                std::uint64_t master_seed, const BootstrapOptions& opts) {
  if (B < 1) throw DataError("bootstrap needs B >= 1");
  if (!base_fit.converged) throw NumericalError("bootstrap requires a converged base fit");

  BootstrapEnsemble ens;
  ens.spec = spec;
  ens.base_fit = base_fit;
  ens.law = law;
  ens.master_seed = master_seed;
  ens.requested = B;

  struct Slot {
    bool ok = false;
    std::vector<double> estimate;
    std::uint64_t seed = 0;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(B));

  parallel_for(size_t(B), opts.jobs, [&](std::size_t b) {
    std::uint64_t seed = derive_seed(master_seed, SeedStream::bootstrap_weights, b);
    FitOptions fo;
    fo.weights = draw_weights(law, obs.size(), seed);
    fo.compute_covariance = false;
    fo.init = base_fit.estimate;  // warm start
    FitResult r = fit_mle(spec, obs, fo);
    if (!r.converged) {
      fo.init.reset();  // cold start from probability-plot values
      r = fit_mle(spec, obs, fo);
    }
    slots[b].ok = r.converged;
    slots[b].seed = seed;
    if (r.converged) slots[b].estimate = std::move(r.estimate);
  });

  for (auto& s : slots) {
    if (s.ok) {
      ens.replicates.push_back(std::move(s.estimate));
      ens.seeds.push_back(s.seed);
    } else {
      ++ens.failed_count;
    }
  }
  if (double(ens.failed_count) / double(B) > opts.max_failed_fraction) {
    throw NumericalError(std::to_string(ens.failed_count) + " of " + std::to_string(B) +
                         " bootstrap replicates failed to converge; ensemble unreliable");
  }
  return ens;
}

}  // namespace fleetlife
