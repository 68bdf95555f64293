#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleetlife/bootstrap.hpp"
#include "fleetlife/distributions.hpp"
#include "fleetlife/model.hpp"

namespace fleetlife {

/// Interval level and tail split; alpha_l + alpha_u = 1 - level.
struct IntervalSpec {
  double level = 0.90;
  double alpha_l = 0.05;
  double alpha_u = 0.05;

  static IntervalSpec symmetric(double level);
};

/// Type-7 (inclusive linear interpolation) empirical quantile of sorted
/// values.
double quantile_type7(const std::vector<double>& sorted_values, double p);

/// Plug-in interval: conditional quantiles at alpha_l and 1 - alpha_u
/// under the estimated parameters.
std::pair<double, double> naive_interval(const ConditionalLife& cl, const IntervalSpec& spec);

struct LifePrediction {
  std::string serial;
  std::string group;             // original group label
  std::string prediction_group;  // group whose parameters were used
  double current_age = 0.0;
  bool has_interval = false;
  double naive_lo = 0.0, naive_hi = 0.0;
  double cal_lo = 0.0, cal_hi = 0.0;
  double u_l = 0.0, u_u = 0.0;  // calibrated tail probabilities
  std::vector<std::string> flags;
};

/// Predictive-distribution calibration: simulate one future lifetime per
/// replicate from the base conditional law, transform through each
/// replicate's conditional cdf, and read off the empirical tail
/// quantiles. Deterministic in sim_seed.
LifePrediction calibrate_interval(const ConditionalLife& cl,
                                  const std::vector<LocationScaleParams>& replicate_params,
                                  const IntervalSpec& spec, std::uint64_t sim_seed);

/// Predictions for every at-risk (censored) unit, sorted by calibrated
/// lower endpoint for risk ranking. Unit i's seed derives from
/// (master_seed, individual_calibration, i) in serial-sorted order.
std::vector<LifePrediction> predict_fleet(const std::vector<LifetimeObservation>& obs,
                                          const Design& design, const FitResult& fit,
                                          const BootstrapEnsemble& ens, const StudyConfig& cfg,
                                          const IntervalSpec& spec, std::uint64_t master_seed,
                                          int jobs = 1);

std::string write_predictions_csv(const std::vector<LifePrediction>& preds);

}  // namespace fleetlife
