#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fleetlife/data.hpp"
#include "fleetlife/distributions.hpp"

namespace fleetlife {

/// One fitted stratum: the groups it pools, the categorical terms in its
/// location formula (empty = intercept only), and the shape class whose
/// sigma it shares.
struct StratumSpec {
  std::string label;
  std::vector<std::string> groups;
  std::vector<std::string> formula_terms;
  std::string shape_class;
};

struct ModelSpec {
  Family family = Family::weibull;
  std::vector<StratumSpec> strata;

  const StratumSpec* stratum_for_group(const std::string& group) const;
  void validate() const;
};

/// Compiled design: flat parameter layout (per-stratum intercept and
/// treatment contrasts, then one log-sigma per shape class) plus
/// per-observation term indices.
class Design {
 public:
  static Design build(const ModelSpec& spec, const std::vector<LifetimeObservation>& obs);

  size_t n_params() const { return names_.size(); }
  const std::vector<std::string>& param_names() const { return names_; }
  size_t n_obs() const { return rows_.size(); }
  int n_failures() const { return n_failures_; }
  const ModelSpec& spec() const { return spec_; }

  /// Eq-style log likelihood: failures contribute log f, censored units
  /// log S, and truncated units subtract log S(tau) of their entry age.
  /// With ignore_truncation the entry adjustment is dropped (nu forced
  /// to 1), the biased diagnostic variant.
  double loglik(const std::vector<double>& theta, const std::vector<double>* weights = nullptr,
                bool ignore_truncation = false) const;
  std::vector<double> loglik_grad(const std::vector<double>& theta,
                                  const std::vector<double>* weights = nullptr,
                                  bool ignore_truncation = false) const;

  /// Starting values from per-stratum probability-plot regression, with
  /// a log-age moment fallback.
  std::vector<double> initial_values(const std::vector<LifetimeObservation>& obs) const;

  /// (mu, sigma) of one unit under a parameter vector. Unseen covariate
  /// levels fall back to the stratum baseline; *warning (if non-null)
  /// records that.
  LocationScaleParams unit_params(const std::vector<double>& theta, const std::string& group,
                                  const std::map<std::string, std::string>& covariates,
                                  std::string* warning = nullptr) const;

  /// Failure counts by shape class, for the degenerate-stratum guard.
  std::map<std::string, int> failures_by_shape_class() const;
  /// Truncated fraction per stratum, for the heavy-truncation diagnostic.
  std::map<std::string, double> truncated_fraction_by_stratum() const;

  const std::map<std::string, std::string>& baselines(const std::string& stratum_label) const;

 private:
  struct Row {
    double log_age = 0.0;
    double log_tau = 0.0;
    bool truncated = false;
    bool failed = false;
    std::vector<int> coef_idx;  // intercept + one dummy per non-baseline level
    int sigma_idx = 0;
    int stratum_idx = 0;
  };

  ModelSpec spec_;
  std::vector<std::string> names_;
  std::vector<Row> rows_;
  int n_failures_ = 0;
  int n_sigma_ = 0;
  std::vector<std::string> shape_class_names_;
  // per stratum: term -> baseline level, term -> level -> coef index
  std::vector<std::map<std::string, std::string>> baseline_;
  std::vector<std::map<std::string, std::map<std::string, int>>> level_coef_;
  std::vector<int> intercept_idx_;
  std::vector<int> stratum_sigma_idx_;
};

struct FitOptions {
  std::optional<std::vector<double>> weights;
  std::optional<std::vector<double>> init;
  bool ignore_truncation = false;  // diagnostic: force nu = 1
  bool compute_covariance = true;
  int max_iterations = 500;
};

struct FitResult {
  ModelSpec spec;
  std::vector<std::string> param_names;
  std::vector<double> estimate;
  double loglik = 0.0;
  std::vector<double> covariance;  // row-major p x p, empty when !cov_ok
  bool cov_ok = false;
  bool converged = false;
  int iterations = 0;
  int n_obs = 0;
  int n_failures = 0;
  std::vector<std::string> diagnostics;

  double se(size_t j) const;
  size_t n_params() const { return estimate.size(); }
};

/// Maximize the stratified LTRC log likelihood. Throws DataError for
/// invalid observations and NumericalError when a shape class has no
/// failures. Non-convergence is reported in the result, never hidden.
FitResult fit_mle(const ModelSpec& spec, const std::vector<LifetimeObservation>& obs,
                  const FitOptions& opts = {});

/// Observations that participate in the likelihood: not flagged excluded
/// and belonging to a fitted stratum.
std::vector<LifetimeObservation> filter_fit_scope(const std::vector<LifetimeObservation>& obs,
                                                  const ModelSpec& spec);

/// Positivity-preserving Wald interval: exp(log point +/- z se/point).
std::pair<double, double> log_scale_wald(double point, double se, double level);

struct WaldRow {
  std::string name;
  double mle = 0.0;
  double se = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Reporting-scale intervals: eta per stratum/level (log scale) and the
/// shape beta per shape class (via log sigma). Throws on a singular
/// covariance.
std::vector<WaldRow> wald_intervals(const FitResult& fit, double level);

struct LrTest {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

/// Likelihood-ratio test of nested fits; reduced must be nested in full.
LrTest lr_test(const FitResult& full, const FitResult& reduced);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, int df);

/// Build a ModelSpec from flat config keys (stratum.<L>.groups,
/// stratum.<L>.formula, stratum.<L>.shape_class).
ModelSpec model_spec_from_config(const std::map<std::string, std::string>& kv, Family family);

}  // namespace fleetlife
