#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fleetlife/bootstrap.hpp"
#include "fleetlife/dates.hpp"
#include "fleetlife/model.hpp"

namespace fleetlife {

/// Conditional probability that a unit of age current_age fails by
/// horizon_age.
double conditional_fail_prob(Family f, const LocationScaleParams& p, double current_age,
                             double horizon_age);

/// Exact Poisson-binomial pmf over k = 0..n by iterative convolution.
std::vector<double> poisson_binomial_pmf(const std::vector<double>& rhos);
std::vector<double> poisson_binomial_cdf(const std::vector<double>& rhos);

struct CountMoments {
  double mu = 0.0;     // sum rho
  double sigma = 0.0;  // sqrt(sum rho(1-rho))
  double gamma = 0.0;  // skewness
};
CountMoments count_moments(const std::vector<double>& rhos);

/// Skewness-corrected normal approximation to P(K <= k), clamped to
/// [0,1] and monotonized in k (running maximum); the raw correction term
/// can dip locally.
double volkova_cdf(const std::vector<double>& rhos, int k);
std::vector<double> volkova_cdf_table(const std::vector<double>& rhos);

/// Outward integer inversion: lower = largest k with F(k-1) <= p_lo,
/// upper = smallest k with F(k) >= p_hi.
std::pair<int, int> invert_count_cdf(const std::vector<double>& cdf, double p_lo, double p_hi);

struct RiskUnit {
  std::string serial;
  std::string group;  // group that supplies the parameters
  std::string original_group;
  std::string stratum;
  std::string manufacturer;
  double current_age = 0.0;  // age at forecast start; 0 for future entrants
  double entry_years = 0.0;  // years after forecast start when the unit enters
  std::map<std::string, std::string> covariates;
};

struct RiskSet {
  std::vector<RiskUnit> units;  // serial-sorted
};

/// Censored survivors mapped to their prediction groups. Throws when an
/// at-risk unit has no fitted (or reassigned) group.
RiskSet build_risk_set(const std::vector<LifetimeObservation>& obs, const ModelSpec& spec,
                       const StudyConfig& cfg);

struct ForecastGrid {
  Date start;
  int horizon_months = 120;
  std::vector<Date> dates;  // month ends strictly increasing

  /// horizon 0 keeps a single degenerate point at the start date.
  static ForecastGrid make(const Date& start, int horizon_months);
};

struct CalibratedBand {
  double level = 0.0;
  int lower = 0;
  int upper = 0;
};

struct ForecastRow {
  Date date;
  int n_at_risk = 0;  // units active by this date
  double mu_K = 0.0, sigma_K = 0.0, gamma_K = 0.0;
  int naive_lo = 0, naive_hi = 0;  // diagnostic plug-in band at the first level
  std::vector<CalibratedBand> calibrated;
  double volkova_abs_err = 0.0;  // sup_k |volkova - exact| when the exact table is in reach
};

struct PopulationForecast {
  ForecastGrid grid;
  std::vector<double> levels;
  int n_units = 0;  // risk-set size including future entrants
  std::vector<ForecastRow> rows;
};

struct ForecastOptions {
  std::vector<double> levels = {0.90, 0.95};
  int jobs = 1;
  int exact_threshold = 2000;  // exact-oracle comparison cap
};

PopulationForecast forecast(const RiskSet& rs, const Design& design, const FitResult& fit,
                            const BootstrapEnsemble& ens, const ForecastGrid& grid,
                            std::uint64_t master_seed, const ForecastOptions& opts = {});

/// Forecast for the units selected by `keep`; errors on an empty subset.
PopulationForecast subset_forecast(const RiskSet& rs, const Design& design, const FitResult& fit,
                                   const BootstrapEnsemble& ens, const ForecastGrid& grid,
                                   std::uint64_t master_seed,
                                   const std::function<bool(const RiskUnit&)>& keep,
                                   const ForecastOptions& opts = {});

std::string write_forecast_csv(const PopulationForecast& fc);

}  // namespace fleetlife
