#include "fleetlife/distributions.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fleetlife {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kLogSqrt2Pi = 0.9189385332046727418;

void check_params(const LocationScaleParams& p) {
  if (!std::isfinite(p.mu)) throw std::domain_error("location parameter must be finite");
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
    throw std::domain_error("scale parameter must be positive and finite");
  }
}

[[noreturn]] void bad_prob(double p) {
  throw std::domain_error("probability " + std::to_string(p) + " outside (0,1)");
}

double standardize(const LocationScaleParams& p, double t) {
  return (std::log(t) - p.mu) / p.sigma;
}

}  // namespace

Family parse_family(std::string_view s) {
  std::string low(s);
  std::transform(low.begin(), low.end(), low.begin(), [](unsigned char c) { return std::tolower(c); });
  if (low == "weibull") return Family::weibull;
  if (low == "lognormal") return Family::lognormal;
  throw std::invalid_argument("unknown family '" + std::string(s) + "'");
}

std::string family_name(Family f) {
  return f == Family::weibull ? "weibull" : "lognormal";
}

LocationScaleParams from_eta_beta(double eta, double beta) {
  if (!(eta > 0.0) || !(beta > 0.0)) throw std::domain_error("eta and beta must be positive");
  return LocationScaleParams{std::log(eta), 1.0 / beta};
}

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double std_normal_sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double std_normal_log_sf(double z) {
  if (z < 30.0) return std::log(std_normal_sf(z));
  // Asymptotic tail: sf(z) = pdf(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6)
  double z2 = z * z;
  double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(z) + std::log(series);
}

double std_normal_hazard(double z) {
  if (z < 30.0) return std_normal_pdf(z) / std_normal_sf(z);
  double z2 = z * z;
  return z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

// Wichura's AS 241 (PPND16): relative accuracy ~1e-16 over (0,1).
double std_normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) bad_prob(p);
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double std_sev_pdf(double z) { return std::exp(z - std::exp(z)); }

double std_sev_cdf(double z) { return -std::expm1(-std::exp(z)); }

double std_sev_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) bad_prob(p);
  return std::log(-std::log1p(-p));
}

double cdf(Family f, const LocationScaleParams& p, double t) {
  check_params(p);
  if (!std::isfinite(t) || t < 0.0) throw std::domain_error("lifetime must be finite and >= 0");
  if (t == 0.0) return 0.0;
  double z = standardize(p, t);
  return f == Family::weibull ? std_sev_cdf(z) : std_normal_cdf(z);
}

double pdf(Family f, const LocationScaleParams& p, double t) {
  check_params(p);
  if (!std::isfinite(t) || t <= 0.0) throw std::domain_error("pdf requires t > 0");
  double z = standardize(p, t);
  double base = f == Family::weibull ? std_sev_pdf(z) : std_normal_pdf(z);
  return base / (p.sigma * t);
}

double quantile(Family f, const LocationScaleParams& p, double prob) {
  check_params(p);
  if (!(prob > 0.0) || !(prob < 1.0)) bad_prob(prob);
  double z = f == Family::weibull ? std_sev_quantile(prob) : std_normal_quantile(prob);
  return std::exp(p.mu + p.sigma * z);
}

double log_survival(Family f, const LocationScaleParams& p, double t) {
  check_params(p);
  if (!std::isfinite(t) || t < 0.0) throw std::domain_error("lifetime must be finite and >= 0");
  if (t == 0.0) return 0.0;
  double z = standardize(p, t);
  return f == Family::weibull ? -std::exp(z) : std_normal_log_sf(z);
}

double survival(Family f, const LocationScaleParams& p, double t) {
  return std::exp(log_survival(f, p, t));
}

double hazard(Family f, const LocationScaleParams& p, double t) {
  check_params(p);
  if (!std::isfinite(t) || t <= 0.0) throw std::domain_error("hazard requires t > 0");
  double z = standardize(p, t);
  if (f == Family::weibull) {
    // f/S = exp(z)/(sigma t); exact for all z.
    return std::exp(z) / (p.sigma * t);
  }
  double s = std_normal_sf(z);
  if (s == 0.0) throw std::domain_error("hazard undefined: survival is 0 at machine precision");
  return std_normal_hazard(z) / (p.sigma * t);
}

double conditional_cdf(const ConditionalLife& cl, double t) {
  if (!(cl.current_age >= 0.0)) throw std::domain_error("current_age must be >= 0");
  if (t < cl.current_age) throw std::domain_error("conditional cdf requires t >= current_age");
  if (cl.current_age == 0.0) return cdf(cl.family, cl.params, t);
  double ls_now = log_survival(cl.family, cl.params, cl.current_age);
  if (ls_now == -std::numeric_limits<double>::infinity()) {
    throw std::domain_error("unit beyond model support: F(current_age) = 1");
  }
  double ls_t = log_survival(cl.family, cl.params, t);
  return -std::expm1(ls_t - ls_now);
}

double conditional_quantile(const ConditionalLife& cl, double prob) {
  if (!(prob > 0.0) || !(prob < 1.0)) bad_prob(prob);
  if (!(cl.current_age >= 0.0)) throw std::domain_error("current_age must be >= 0");
  if (cl.current_age == 0.0) return quantile(cl.family, cl.params, prob);
  double ls_now = log_survival(cl.family, cl.params, cl.current_age);
  if (ls_now == -std::numeric_limits<double>::infinity()) {
    throw std::domain_error("unit beyond model support: F(current_age) = 1");
  }
  // Solve log S(T) = log(1-p) + log S(t_i).
  double ls_target = std::log1p(-prob) + ls_now;
  const auto& p = cl.params;
  double z;
  if (cl.family == Family::weibull) {
    z = std::log(-ls_target);
  } else {
    double s = std::exp(ls_target);
    z = -std_normal_quantile(s);
  }
  double t = std::exp(p.mu + p.sigma * z);
  return std::max(t, cl.current_age);
}

}  // namespace fleetlife
