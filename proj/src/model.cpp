#include "fleetlife/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fleetlife/nonparametric.hpp"
#include "fleetlife/optimize.hpp"
#include "fleetlife/util.hpp"

namespace fleetlife {

const StratumSpec* ModelSpec::stratum_for_group(const std::string& group) const {
  for (const auto& s : strata) {
    if (std::find(s.groups.begin(), s.groups.end(), group) != s.groups.end()) return &s;
  }
  return nullptr;
}

void ModelSpec::validate() const {
  if (strata.empty()) throw DataError("model spec has no strata");
  std::set<std::string> labels, groups;
  for (const auto& s : strata) {
    if (!labels.insert(s.label).second) throw DataError("duplicate stratum label '" + s.label + "'");
    if (s.groups.empty()) throw DataError("stratum '" + s.label + "' lists no groups");
    if (s.shape_class.empty()) throw DataError("stratum '" + s.label + "' has no shape class");
    for (const auto& g : s.groups) {
      if (!groups.insert(g).second) {
        throw DataError("group '" + g + "' appears in more than one stratum");
      }
    }
  }
}

Design Design::build(const ModelSpec& spec, const std::vector<LifetimeObservation>& obs) {
  spec.validate();
  Design d;
  d.spec_ = spec;

  // Stratum membership and per-stratum level tallies.
  std::vector<std::vector<size_t>> members(spec.strata.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    const StratumSpec* s = spec.stratum_for_group(o.group);
    if (!s) throw DataError("observation '" + o.serial + "' (group '" + o.group +
                            "') does not belong to any fitted stratum");
    size_t si = size_t(s - spec.strata.data());
    members[si].push_back(i);
    if (o.delta == 1) {
      if (!(o.age > 0.0)) throw DataError("failed unit '" + o.serial + "' has age <= 0");
    }
    if (!(o.age >= 0.0) || !std::isfinite(o.age)) {
      throw DataError("unit '" + o.serial + "' has invalid age");
    }
    if (o.nu == 0 && o.tau_L >= o.age) {
      throw DataError("unit '" + o.serial + "' has truncation age >= outcome age");
    }
  }

  // Parameter layout: per-stratum coefficients first, then shared log sigmas.
  d.baseline_.resize(spec.strata.size());
  d.level_coef_.resize(spec.strata.size());
  d.intercept_idx_.resize(spec.strata.size());
  d.stratum_sigma_idx_.resize(spec.strata.size());
  for (size_t si = 0; si < spec.strata.size(); ++si) {
    const auto& st = spec.strata[si];
    if (members[si].empty()) throw DataError("stratum '" + st.label + "' has no observations");
    d.intercept_idx_[si] = int(d.names_.size());
    d.names_.push_back(st.label + ".intercept");
    for (const auto& term : st.formula_terms) {
      std::map<std::string, int> counts;
      for (size_t i : members[si]) {
        auto it = obs[i].covariates.find(term);
        if (it == obs[i].covariates.end()) {
          throw DataError("stratum '" + st.label + "': covariate '" + term + "' missing on unit '" +
                          obs[i].serial + "'");
        }
        counts[it->second] += 1;
      }
      // Most frequent level is the baseline; ties resolved lexicographically.
      std::string base;
      int best = -1;
      for (const auto& [level, c] : counts) {
        if (c > best) {
          base = level;
          best = c;
        }
      }
      d.baseline_[si][term] = base;
      for (const auto& [level, c] : counts) {
        if (level == base) continue;
        d.level_coef_[si][term][level] = int(d.names_.size());
        d.names_.push_back(st.label + "." + term + "=" + level);
      }
    }
  }
  std::set<std::string> class_set;
  for (const auto& st : spec.strata) class_set.insert(st.shape_class);
  d.shape_class_names_.assign(class_set.begin(), class_set.end());
  d.n_sigma_ = int(d.shape_class_names_.size());
  // Sigma indices in sorted class order so the layout is deterministic.
  std::map<std::string, int> class_idx;
  for (const auto& cls : d.shape_class_names_) {
    class_idx[cls] = int(d.names_.size());
    d.names_.push_back("log_sigma." + cls);
  }
  for (size_t si = 0; si < spec.strata.size(); ++si) {
    d.stratum_sigma_idx_[si] = class_idx.at(spec.strata[si].shape_class);
  }

  // Rows.
  d.rows_.reserve(obs.size());
  for (size_t si = 0; si < spec.strata.size(); ++si) {
    for (size_t i : members[si]) {
      const auto& o = obs[i];
      Row r;
      r.log_age = std::log(o.age);
      r.failed = o.delta == 1;
      r.truncated = o.nu == 0 && o.tau_L > 0.0;
      r.log_tau = r.truncated ? std::log(o.tau_L) : 0.0;
      r.sigma_idx = d.stratum_sigma_idx_[si];
      r.stratum_idx = int(si);
      r.coef_idx.push_back(d.intercept_idx_[si]);
      for (const auto& term : spec.strata[si].formula_terms) {
        const std::string& level = o.covariates.at(term);
        if (level != d.baseline_[si].at(term)) {
          r.coef_idx.push_back(d.level_coef_[si].at(term).at(level));
        }
      }
      if (r.failed) ++d.n_failures_;
      d.rows_.push_back(std::move(r));
    }
  }
  return d;
}

namespace {

// Per-row pieces of the log likelihood and its (mu, log sigma) partials.

struct Contrib {
  double ll = 0.0;
  double d_mu = 0.0;
  double d_ls = 0.0;  // d / d log(sigma)
};

inline Contrib failure_term(Family f, double z, double sigma, double log_age) {
  Contrib c;
  if (f == Family::weibull) {
    double ez = std::exp(z);
    c.ll = z - ez - std::log(sigma) - log_age;
    c.d_mu = (ez - 1.0) / sigma;
    c.d_ls = z * (ez - 1.0) - 1.0;
  } else {
    c.ll = -0.5 * z * z - std::log(sigma) - log_age - 0.9189385332046727418;
    c.d_mu = z / sigma;
    c.d_ls = z * z - 1.0;
  }
  return c;
}

inline Contrib survival_term(Family f, double z, double sigma) {
  Contrib c;
  if (f == Family::weibull) {
    double ez = std::exp(z);
    c.ll = -ez;
    c.d_mu = ez / sigma;
    c.d_ls = z * ez;
  } else {
    c.ll = std_normal_log_sf(z);
    double r = std_normal_hazard(z);
    c.d_mu = r / sigma;
    c.d_ls = z * r;
  }
  return c;
}

}  // namespace

double Design::loglik(const std::vector<double>& theta, const std::vector<double>* weights,
                      bool ignore_truncation) const {
  if (theta.size() != names_.size()) throw DataError("parameter vector has wrong length");
  if (weights) {
    if (weights->size() != rows_.size()) throw DataError("weights not aligned with observations");
    for (double w : *weights) {
      if (!(w > 0.0)) throw DataError("weights must be positive");
    }
  }
  const Family fam = spec_.family;
  double total = 0.0;
  for (size_t i = 0; i < rows_.size(); ++i) {
    const Row& r = rows_[i];
    double mu = 0.0;
    for (int j : r.coef_idx) mu += theta[size_t(j)];
    double sigma = std::exp(theta[size_t(r.sigma_idx)]);
    double z = (r.log_age - mu) / sigma;
    double ll = r.failed ? failure_term(fam, z, sigma, r.log_age).ll
                         : survival_term(fam, z, sigma).ll;
    if (r.truncated && !ignore_truncation) {
      double zt = (r.log_tau - mu) / sigma;
      ll -= survival_term(fam, zt, sigma).ll;
    }
    if (weights) ll *= (*weights)[i];
    total += ll;
  }
  return total;
}

std::vector<double> Design::loglik_grad(const std::vector<double>& theta,
                                        const std::vector<double>* weights,
                                        bool ignore_truncation) const {
  if (theta.size() != names_.size()) throw DataError("parameter vector has wrong length");
  const Family fam = spec_.family;
  std::vector<double> grad(names_.size(), 0.0);
  for (size_t i = 0; i < rows_.size(); ++i) {
    const Row& r = rows_[i];
    double mu = 0.0;
    for (int j : r.coef_idx) mu += theta[size_t(j)];
    double sigma = std::exp(theta[size_t(r.sigma_idx)]);
    double z = (r.log_age - mu) / sigma;
    Contrib c = r.failed ? failure_term(fam, z, sigma, r.log_age) : survival_term(fam, z, sigma);
    double d_mu = c.d_mu;
    double d_ls = c.d_ls;
    if (r.truncated && !ignore_truncation) {
      double zt = (r.log_tau - mu) / sigma;
      Contrib ct = survival_term(fam, zt, sigma);
      d_mu -= ct.d_mu;
      d_ls -= ct.d_ls;
    }
    double w = weights ? (*weights)[i] : 1.0;
    for (int j : r.coef_idx) grad[size_t(j)] += w * d_mu;
    grad[size_t(r.sigma_idx)] += w * d_ls;
  }
  return grad;
}

std::vector<double> Design::initial_values(const std::vector<LifetimeObservation>& obs) const {
  std::vector<double> theta(names_.size(), 0.0);

  // Collect stratum members again (build order is stable).
  std::vector<std::vector<const LifetimeObservation*>> members(spec_.strata.size());
  for (const auto& o : obs) {
    const StratumSpec* s = spec_.stratum_for_group(o.group);
    if (s) members[size_t(s - spec_.strata.data())].push_back(&o);
  }

  std::vector<double> sigma0(spec_.strata.size(), 0.5);
  for (size_t si = 0; si < spec_.strata.size(); ++si) {
    double mu0 = 0.0, s0 = 0.0;
    bool ok = false;
    std::vector<LifetimeObservation> sub;
    sub.reserve(members[si].size());
    for (auto* p : members[si]) sub.push_back(*p);
    if (!sub.empty()) {
      try {
        StepEstimate est = ltrc_product_limit(sub);
        if (!est.jump_times.empty()) {
          PlotPoints pts = plot_points(est, spec_.family);
          double a = 0.0, b = 0.0;
          if (plot_line(pts, a, b) && b > 1e-8) {
            s0 = 1.0 / b;
            mu0 = -a / b;
            ok = std::isfinite(mu0) && s0 > 1e-3 && s0 < 20.0;
          }
        }
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      // Moment fallback on log ages (failures when available).
      std::vector<double> la;
      for (auto* p : members[si]) {
        if (p->delta == 1) la.push_back(std::log(p->age));
      }
      if (la.size() < 2) {
        la.clear();
        for (auto* p : members[si]) {
          if (p->age > 0.0) la.push_back(std::log(p->age));
        }
      }
      double mean = 0.0;
      for (double v : la) mean += v;
      mean /= std::max<size_t>(la.size(), 1);
      double var = 0.0;
      for (double v : la) var += (v - mean) * (v - mean);
      var /= std::max<size_t>(la.size(), 1);
      mu0 = la.empty() ? 0.0 : mean;
      s0 = std::sqrt(var);
    }
    s0 = std::clamp(s0, 0.05, 5.0);
    theta[size_t(intercept_idx_[si])] = mu0;
    sigma0[si] = s0;
  }
  // Shape classes average the member strata scales.
  std::vector<double> acc(names_.size(), 0.0), cnt(names_.size(), 0.0);
  for (size_t si = 0; si < spec_.strata.size(); ++si) {
    acc[size_t(stratum_sigma_idx_[si])] += sigma0[si];
    cnt[size_t(stratum_sigma_idx_[si])] += 1.0;
  }
  for (size_t j = 0; j < names_.size(); ++j) {
    if (cnt[j] > 0.0) theta[j] = std::log(acc[j] / cnt[j]);
  }
  return theta;
}

LocationScaleParams Design::unit_params(const std::vector<double>& theta, const std::string& group,
                                        const std::map<std::string, std::string>& covariates,
                                        std::string* warning) const {
  const StratumSpec* s = spec_.stratum_for_group(group);
  if (!s) throw DataError("group '" + group + "' is not covered by the fitted model");
  size_t si = size_t(s - spec_.strata.data());
  double mu = theta[size_t(intercept_idx_[si])];
  for (const auto& term : s->formula_terms) {
    auto it = covariates.find(term);
    if (it == covariates.end()) {
      throw DataError("unit lacks covariate '" + term + "' required by stratum '" + s->label + "'");
    }
    const std::string& level = it->second;
    if (level == baseline_[si].at(term)) continue;
    const auto& levels = level_coef_[si].at(term);
    auto lv = levels.find(level);
    if (lv == levels.end()) {
      if (warning) {
        *warning = "level '" + level + "' of '" + term + "' unseen at fit time; baseline used";
      }
      continue;
    }
    mu += theta[size_t(lv->second)];
  }
  double sigma = std::exp(theta[size_t(stratum_sigma_idx_[si])]);
  return LocationScaleParams{mu, sigma};
}

std::map<std::string, int> Design::failures_by_shape_class() const {
  std::map<std::string, int> counts;
  for (const auto& cls : shape_class_names_) counts[cls] = 0;
  for (const auto& r : rows_) {
    if (r.failed) counts[spec_.strata[size_t(r.stratum_idx)].shape_class] += 1;
  }
  return counts;
}

std::map<std::string, double> Design::truncated_fraction_by_stratum() const {
  std::map<std::string, double> num, den;
  for (const auto& r : rows_) {
    const std::string& label = spec_.strata[size_t(r.stratum_idx)].label;
    den[label] += 1.0;
    if (r.truncated) num[label] += 1.0;
  }
  std::map<std::string, double> out;
  for (const auto& [label, d] : den) out[label] = num[label] / d;
  return out;
}

const std::map<std::string, std::string>& Design::baselines(const std::string& stratum_label) const {
  for (size_t si = 0; si < spec_.strata.size(); ++si) {
    if (spec_.strata[si].label == stratum_label) return baseline_[si];
  }
  throw DataError("unknown stratum '" + stratum_label + "'");
}

double FitResult::se(size_t j) const {
  if (!cov_ok) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(std::max(covariance[j * estimate.size() + j], 0.0));
}

namespace {

// Cholesky inverse of a symmetric positive-definite matrix. Returns false
// when the factorization breaks down.
bool invert_spd(std::vector<double> a, size_t p, std::vector<double>& inv) {
  std::vector<double> L(p * p, 0.0);
  for (size_t i = 0; i < p; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = a[i * p + j];
      for (size_t k = 0; k < j; ++k) sum -= L[i * p + k] * L[j * p + k];
      if (i == j) {
        if (!(sum > 0.0)) return false;
        L[i * p + i] = std::sqrt(sum);
      } else {
        L[i * p + j] = sum / L[j * p + j];
      }
    }
  }
  // Invert L, then inv = L^-T L^-1.
  std::vector<double> Linv(p * p, 0.0);
  for (size_t i = 0; i < p; ++i) {
    Linv[i * p + i] = 1.0 / L[i * p + i];
    for (size_t j = 0; j < i; ++j) {
      double sum = 0.0;
      for (size_t k = j; k < i; ++k) sum -= L[i * p + k] * Linv[k * p + j];
      Linv[i * p + j] = sum / L[i * p + i];
    }
  }
  inv.assign(p * p, 0.0);
  for (size_t i = 0; i < p; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (size_t k = std::max(i, j); k < p; ++k) sum += Linv[k * p + i] * Linv[k * p + j];
      inv[i * p + j] = inv[j * p + i] = sum;
    }
  }
  return true;
}

}  // namespace

FitResult fit_mle(const ModelSpec& spec, const std::vector<LifetimeObservation>& obs,
                  const FitOptions& opts) {
  Design design = Design::build(spec, obs);

  for (const auto& [cls, failures] : design.failures_by_shape_class()) {
    if (failures == 0) {
      throw NumericalError("shape class '" + cls +
                           "' has no failures; its scale parameter is not estimable");
    }
  }

  const std::vector<double>* weights = opts.weights ? &*opts.weights : nullptr;
  auto objective = [&](const std::vector<double>& x) {
    return -design.loglik(x, weights, opts.ignore_truncation);
  };
  auto gradient = [&](const std::vector<double>& x) {
    auto g = design.loglik_grad(x, weights, opts.ignore_truncation);
    for (auto& v : g) v = -v;
    return g;
  };

  std::vector<double> x0 = opts.init ? *opts.init : design.initial_values(obs);
  if (x0.size() != design.n_params()) throw DataError("initial vector has wrong length");

  OptimOptions oo;
  oo.max_iterations = opts.max_iterations;
  OptimResult opt = minimize(objective, gradient, x0, oo);

  FitResult fit;
  fit.spec = spec;
  fit.param_names = design.param_names();
  fit.estimate = opt.x;
  fit.loglik = -opt.fval;
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;
  fit.n_obs = int(design.n_obs());
  fit.n_failures = design.n_failures();
  if (!opt.converged) fit.diagnostics.push_back("optimizer: " + opt.message);

  for (const auto& [label, frac] : design.truncated_fraction_by_stratum()) {
    if (frac > 0.9) {
      fit.diagnostics.push_back("stratum '" + label + "' is " +
                                std::to_string(int(std::lround(frac * 100))) +
                                "% truncated; estimates may be unstable");
    }
  }

  if (opts.compute_covariance && opt.converged) {
    // Observed information: central differences of the analytic gradient.
    size_t p = design.n_params();
    std::vector<double> H(p * p, 0.0);
    for (size_t j = 0; j < p; ++j) {
      double h = 1e-5 * (1.0 + std::fabs(opt.x[j]));
      std::vector<double> xp = opt.x, xm = opt.x;
      xp[j] += h;
      xm[j] -= h;
      auto gp = design.loglik_grad(xp, weights, opts.ignore_truncation);
      auto gm = design.loglik_grad(xm, weights, opts.ignore_truncation);
      for (size_t i = 0; i < p; ++i) H[i * p + j] = -(gp[i] - gm[i]) / (2.0 * h);
    }
    for (size_t i = 0; i < p; ++i) {  // symmetrize
      for (size_t j = 0; j < i; ++j) {
        double v = 0.5 * (H[i * p + j] + H[j * p + i]);
        H[i * p + j] = H[j * p + i] = v;
      }
    }
    std::vector<double> cov;
    if (invert_spd(H, p, cov)) {
      fit.covariance = std::move(cov);
      fit.cov_ok = true;
    } else {
      fit.diagnostics.push_back("observed information is not positive definite");
    }
  }
  return fit;
}

std::vector<LifetimeObservation> filter_fit_scope(const std::vector<LifetimeObservation>& obs,
                                                  const ModelSpec& spec) {
  std::vector<LifetimeObservation> out;
  for (const auto& o : obs) {
    if (o.excluded_from_fit) continue;
    if (spec.stratum_for_group(o.group)) out.push_back(o);
  }
  return out;
}

std::pair<double, double> log_scale_wald(double point, double se, double level) {
  if (!(point > 0.0)) throw DataError("log-scale Wald interval needs a positive point estimate");
  if (!(level > 0.0) || !(level < 1.0)) throw DataError("level outside (0,1)");
  if (se == 0.0) return {point, point};
  double z = std_normal_quantile(0.5 + level / 2.0);
  double half = z * se / point;
  return {point * std::exp(-half), point * std::exp(half)};
}

std::vector<WaldRow> wald_intervals(const FitResult& fit, double level) {
  if (!fit.converged) throw NumericalError("wald_intervals requires a converged fit");
  if (!fit.cov_ok) throw NumericalError("covariance is singular; no Wald intervals");
  const size_t p = fit.estimate.size();
  auto cov = [&](size_t i, size_t j) { return fit.covariance[i * p + j]; };

  // Index parameters by name for eta/beta assembly.
  std::map<std::string, size_t> idx;
  for (size_t j = 0; j < p; ++j) idx[fit.param_names[j]] = j;

  std::vector<WaldRow> rows;
  for (const auto& st : fit.spec.strata) {
    size_t ij = idx.at(st.label + ".intercept");
    if (st.formula_terms.empty()) {
      double mu = fit.estimate[ij];
      double se_mu = std::sqrt(std::max(cov(ij, ij), 0.0));
      double eta = std::exp(mu);
      auto [lo, hi] = log_scale_wald(eta, eta * se_mu, level);
      rows.push_back({"eta(" + st.label + ")", eta, eta * se_mu, lo, hi});
      continue;
    }
    for (const auto& term : st.formula_terms) {
      // Every level of this term, other terms at their baselines.
      std::set<std::string> levels;
      std::string prefix = st.label + "." + term + "=";
      for (const auto& name : fit.param_names) {
        if (name.rfind(prefix, 0) == 0) levels.insert(name.substr(prefix.size()));
      }
      // Baseline level row: the intercept alone.
      {
        double mu = fit.estimate[ij];
        double se_mu = std::sqrt(std::max(cov(ij, ij), 0.0));
        double eta = std::exp(mu);
        auto [lo, hi] = log_scale_wald(eta, eta * se_mu, level);
        rows.push_back({"eta(" + st.label + ":" + term + "=baseline)", eta, eta * se_mu, lo, hi});
      }
      for (const auto& level_name : levels) {
        size_t cj = idx.at(prefix + level_name);
        double mu = fit.estimate[ij] + fit.estimate[cj];
        double var = cov(ij, ij) + cov(cj, cj) + 2.0 * cov(ij, cj);
        double se_mu = std::sqrt(std::max(var, 0.0));
        double eta = std::exp(mu);
        auto [lo, hi] = log_scale_wald(eta, eta * se_mu, level);
        rows.push_back({"eta(" + st.label + ":" + term + "=" + level_name + ")", eta, eta * se_mu,
                        lo, hi});
      }
    }
  }
  std::set<std::string> classes;
  for (const auto& st : fit.spec.strata) classes.insert(st.shape_class);
  for (const auto& cls : classes) {
    size_t sj = idx.at("log_sigma." + cls);
    double ls = fit.estimate[sj];
    double se_ls = std::sqrt(std::max(cov(sj, sj), 0.0));
    double beta = std::exp(-ls);
    auto [lo, hi] = log_scale_wald(beta, beta * se_ls, level);
    rows.push_back({"beta(" + cls + ")", beta, beta * se_ls, lo, hi});
  }
  return rows;
}

namespace {

// Regularized incomplete gamma Q(a, x) by series / continued fraction.
double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DataError("gamma_q domain error");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    // P by series, Q = 1 - P.
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Q by Lentz continued fraction.
  double b = x + 1.0 - a, c = 1e308, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

bool is_nested(const ModelSpec& full, const ModelSpec& reduced) {
  if (full.family != reduced.family) return false;
  if (full.strata.size() != reduced.strata.size()) return false;
  for (size_t i = 0; i < full.strata.size(); ++i) {
    const auto& f = full.strata[i];
    const auto& r = reduced.strata[i];
    if (f.label != r.label || f.shape_class != r.shape_class) return false;
    if (f.groups != r.groups) return false;
    for (const auto& term : r.formula_terms) {
      if (std::find(f.formula_terms.begin(), f.formula_terms.end(), term) ==
          f.formula_terms.end()) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

double chi_square_sf(double x, int df) {
  if (df <= 0) throw DataError("chi-square df must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

LrTest lr_test(const FitResult& full, const FitResult& reduced) {
  if (!is_nested(full.spec, reduced.spec)) {
    throw DataError("lr_test: reduced model is not nested in the full model");
  }
  int df = int(full.n_params()) - int(reduced.n_params());
  if (df < 0) throw DataError("lr_test: reduced model has more parameters than the full model");
  double stat = 2.0 * (full.loglik - reduced.loglik);
  if (stat < -1e-6) {
    throw NumericalError("lr_test: negative statistic " + format_double(stat) +
                         " signals an optimizer failure");
  }
  stat = std::max(stat, 0.0);
  LrTest out;
  out.statistic = stat;
  out.df = df;
  out.p_value = df == 0 ? 1.0 : chi_square_sf(stat, df);
  if (df == 0 && stat > 1e-8) {
    throw DataError("lr_test: models have equal dimension but different likelihoods");
  }
  return out;
}

ModelSpec model_spec_from_config(const std::map<std::string, std::string>& kv, Family family) {
  ModelSpec spec;
  spec.family = family;
  std::set<std::string> labels;
  for (const auto& [key, value] : kv) {
    if (key.rfind("stratum.", 0) != 0) continue;
    auto rest = key.substr(8);
    auto dot = rest.find('.');
    if (dot == std::string::npos) throw DataError("bad stratum key '" + key + "'");
    labels.insert(rest.substr(0, dot));
  }
  if (labels.empty()) throw DataError("config defines no strata (stratum.<label>.groups keys)");
  for (const auto& label : labels) {
    StratumSpec st;
    st.label = label;
    auto g = kv.find("stratum." + label + ".groups");
    if (g == kv.end()) throw DataError("stratum '" + label + "' missing .groups");
    for (const auto& s : split(g->second, ',')) {
      auto t = trim(s);
      if (!t.empty()) st.groups.push_back(t);
    }
    auto f = kv.find("stratum." + label + ".formula");
    if (f != kv.end() && !f->second.empty() && trim(f->second) != "1") {
      for (const auto& s : split(f->second, ',')) {
        auto t = trim(to_lower(s));
        if (!t.empty()) st.formula_terms.push_back(t);
      }
    }
    auto c = kv.find("stratum." + label + ".shape_class");
    st.shape_class = c != kv.end() && !c->second.empty() ? trim(c->second) : label;
    spec.strata.push_back(std::move(st));
  }
  spec.validate();
  return spec;
}

}  // namespace fleetlife
