#pragma once

#include <cmath>
#include <string>
#include <string_view>

namespace fleetlife {

enum class Family { weibull, lognormal };

Family parse_family(std::string_view s);
std::string family_name(Family f);

/// Location/scale of log-lifetime. Canonical parameterization everywhere;
/// (eta, beta) for the Weibull is a reporting view.
struct LocationScaleParams {
  double mu = 0.0;     // location, log-years
  double sigma = 1.0;  // scale, > 0
};

inline double weibull_eta(const LocationScaleParams& p);    // exp(mu)
inline double weibull_shape(const LocationScaleParams& p);  // 1/sigma
LocationScaleParams from_eta_beta(double eta, double beta);

// Standard normal pieces (shared by the lognormal family and the
// skewness-corrected count approximation).
double std_normal_pdf(double z);
double std_normal_cdf(double z);
double std_normal_sf(double z);      // 1 - cdf, accurate in the right tail
double std_normal_log_sf(double z);  // log of the above, safe for large z
double std_normal_hazard(double z);  // pdf / sf
double std_normal_quantile(double p);

// Smallest extreme value pieces (the Weibull's log-life base).
double std_sev_pdf(double z);
double std_sev_cdf(double z);       // 1 - exp(-exp(z))
double std_sev_quantile(double p);  // log(-log(1-p))

// Lifetime distribution of T, log(T) location-scale.
double cdf(Family f, const LocationScaleParams& p, double t);
double pdf(Family f, const LocationScaleParams& p, double t);
double quantile(Family f, const LocationScaleParams& p, double prob);
double hazard(Family f, const LocationScaleParams& p, double t);
double survival(Family f, const LocationScaleParams& p, double t);
double log_survival(Family f, const LocationScaleParams& p, double t);

/// Remaining-life law of a unit that has survived to current_age.
struct ConditionalLife {
  Family family = Family::weibull;
  LocationScaleParams params;
  double current_age = 0.0;
};

/// P(T <= t | T > current_age); equals the unconditional cdf when
/// current_age == 0. Computed through survival ratios in log space so a
/// near-exhausted cdf does not cancel catastrophically.
double conditional_cdf(const ConditionalLife& cl, double t);
double conditional_quantile(const ConditionalLife& cl, double prob);

inline double weibull_eta(const LocationScaleParams& p) { return std::exp(p.mu); }
inline double weibull_shape(const LocationScaleParams& p) { return 1.0 / p.sigma; }

}  // namespace fleetlife
