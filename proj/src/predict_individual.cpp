#include "fleetlife/predict_individual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fleetlife/rng.hpp"
#include "fleetlife/util.hpp"

namespace fleetlife {

IntervalSpec IntervalSpec::symmetric(double level) {
  if (!(level > 0.0) || !(level < 1.0)) throw DataError("interval level outside (0,1)");
  IntervalSpec s;
  s.level = level;
  s.alpha_l = s.alpha_u = (1.0 - level) / 2.0;
  return s;
}

double quantile_type7(const std::vector<double>& sorted_values, double p) {
  if (sorted_values.empty()) throw DataError("quantile of empty sample");
  if (!(p >= 0.0) || !(p <= 1.0)) throw DataError("quantile probability outside [0,1]");
  const size_t n = sorted_values.size();
  if (n == 1) return sorted_values[0];
  double h = p * double(n - 1);
  size_t lo = size_t(std::floor(h));
  if (lo >= n - 1) return sorted_values[n - 1];
  double frac = h - double(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

std::pair<double, double> naive_interval(const ConditionalLife& cl, const IntervalSpec& spec) {
  return {conditional_quantile(cl, spec.alpha_l), conditional_quantile(cl, 1.0 - spec.alpha_u)};
}

LifePrediction calibrate_interval(const ConditionalLife& cl,
                                  const std::vector<LocationScaleParams>& replicate_params,
                                  const IntervalSpec& spec, std::uint64_t sim_seed) {
  const size_t B = replicate_params.size();
  if (B < 100) {
    throw DataError("calibration needs an ensemble of at least 100 replicates, got " +
                    std::to_string(B));
  }
  LifePrediction pred;
  pred.current_age = cl.current_age;

  auto [nlo, nhi] = naive_interval(cl, spec);
  pred.naive_lo = nlo;
  pred.naive_hi = nhi;

  // One simulated future per replicate, paired b <-> b.
  Rng rng(sim_seed);
  std::vector<double> u_star(B);
  bool degenerate_replicate = false;
  for (size_t b = 0; b < B; ++b) {
    double t_star = conditional_quantile(cl, rng.uniform());
    ConditionalLife cb{cl.family, replicate_params[b], cl.current_age};
    double u;
    double ls_now = log_survival(cb.family, cb.params, cb.current_age);
    if (!std::isfinite(ls_now)) {
      // Replicate puts the unit beyond support; count the mass on the top.
      u = 1.0;
      degenerate_replicate = true;
    } else {
      double ls_t = log_survival(cb.family, cb.params, std::max(t_star, cb.current_age));
      u = -std::expm1(ls_t - ls_now);
      u = std::clamp(u, 0.0, 1.0);
    }
    u_star[b] = u;
  }
  std::sort(u_star.begin(), u_star.end());
  double u_l = quantile_type7(u_star, spec.alpha_l);
  double u_u = quantile_type7(u_star, 1.0 - spec.alpha_u);
  u_l = std::clamp(u_l, 1e-12, 1.0 - 1e-12);
  u_u = std::clamp(u_u, u_l, 1.0 - 1e-12);
  pred.u_l = u_l;
  pred.u_u = u_u;
  pred.cal_lo = conditional_quantile(cl, u_l);
  pred.cal_hi = conditional_quantile(cl, u_u);
  pred.has_interval = true;
  if (degenerate_replicate) pred.flags.push_back("degenerate_replicates");
  return pred;
}

std::vector<LifePrediction> predict_fleet(const std::vector<LifetimeObservation>& obs,
                                          const Design& design, const FitResult& fit,
                                          const BootstrapEnsemble& ens, const StudyConfig& cfg,
                                          const IntervalSpec& spec, std::uint64_t master_seed,
                                          int jobs) {
  // At-risk units in serial order; serial order pins the per-unit seeds.
  std::vector<const LifetimeObservation*> at_risk;
  for (const auto& o : obs) {
    if (o.delta == 0) at_risk.push_back(&o);
  }
  std::sort(at_risk.begin(), at_risk.end(),
            [](const LifetimeObservation* a, const LifetimeObservation* b) {
              return a->serial < b->serial;
            });

  std::vector<LifePrediction> preds(at_risk.size());
  parallel_for(at_risk.size(), jobs, [&](std::size_t i) {
    const auto& o = *at_risk[i];
    std::string pg = prediction_group(cfg, o.group);
    std::string warn;
    LocationScaleParams base = design.unit_params(fit.estimate, pg, o.covariates, &warn);
    ConditionalLife cl{fit.spec.family, base, o.age};

    LifePrediction pred;
    try {
      std::vector<LocationScaleParams> reps(ens.replicates.size());
      for (size_t b = 0; b < ens.replicates.size(); ++b) {
        reps[b] = design.unit_params(ens.replicates[b], pg, o.covariates);
      }
      pred = calibrate_interval(cl, reps, spec,
                                derive_seed(master_seed, SeedStream::individual_calibration, i));
    } catch (const std::domain_error&) {
      pred.has_interval = false;
      pred.flags.push_back("beyond_support");
    }
    pred.serial = o.serial;
    pred.group = o.group;
    pred.prediction_group = pg;
    pred.current_age = o.age;
    if (!warn.empty()) pred.flags.push_back("baseline_fallback");
    if (pred.has_interval) {
      double tail = quantile(fit.spec.family, base, 0.999);
      if (o.age > tail) pred.flags.push_back("imminent-risk");
    }
    preds[i] = std::move(pred);
  });

  std::sort(preds.begin(), preds.end(), [](const LifePrediction& a, const LifePrediction& b) {
    double ka = a.has_interval ? a.cal_lo : -std::numeric_limits<double>::infinity();
    double kb = b.has_interval ? b.cal_lo : -std::numeric_limits<double>::infinity();
    if (ka != kb) return ka < kb;
    return a.serial < b.serial;
  });
  return preds;
}

std::string write_predictions_csv(const std::vector<LifePrediction>& preds) {
  std::ostringstream out;
  out << "serial,group,prediction_group,age,naive_lo,naive_hi,cal_lo,cal_hi,u_l,u_u,flags\n";
  for (const auto& p : preds) {
    out << p.serial << ',' << p.group << ',' << p.prediction_group << ','
        << format_double(p.current_age) << ',';
    if (p.has_interval) {
      out << format_double(p.naive_lo) << ',' << format_double(p.naive_hi) << ','
          << format_double(p.cal_lo) << ',' << format_double(p.cal_hi) << ','
          << format_double(p.u_l) << ',' << format_double(p.u_u);
    } else {
      out << ",,,,,";
    }
    out << ',';
    for (size_t i = 0; i < p.flags.size(); ++i) out << (i ? "|" : "") << p.flags[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace fleetlife
