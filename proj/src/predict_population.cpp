#include "fleetlife/predict_population.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fleetlife/predict_individual.hpp"
#include "fleetlife/rng.hpp"
#include "fleetlife/util.hpp"

namespace fleetlife {

double conditional_fail_prob(Family f, const LocationScaleParams& p, double current_age,
                             double horizon_age) {
  if (horizon_age < current_age) {
    throw DataError("horizon age precedes current age");
  }
  double ls_now = log_survival(f, p, current_age);
  if (!std::isfinite(ls_now)) return 1.0;  // model already places the unit beyond support
  double ls_w = log_survival(f, p, horizon_age);
  return std::clamp(-std::expm1(ls_w - ls_now), 0.0, 1.0);
}

namespace {

void check_rhos(const std::vector<double>& rhos) {
  for (double r : rhos) {
    if (!(r >= 0.0) || !(r <= 1.0)) {
      throw DataError("failure probability " + format_double(r) + " outside [0,1]");
    }
  }
}

}  // namespace

std::vector<double> poisson_binomial_pmf(const std::vector<double>& rhos) {
  check_rhos(rhos);
  std::vector<double> pmf(rhos.size() + 1, 0.0);
  pmf[0] = 1.0;
  size_t used = 0;
  for (double r : rhos) {
    ++used;
    for (size_t k = used; k-- > 1;) pmf[k] = pmf[k] * (1.0 - r) + pmf[k - 1] * r;
    pmf[0] *= 1.0 - r;
  }
  return pmf;
}

std::vector<double> poisson_binomial_cdf(const std::vector<double>& rhos) {
  auto cdf = poisson_binomial_pmf(rhos);
  for (size_t k = 1; k < cdf.size(); ++k) cdf[k] += cdf[k - 1];
  for (auto& v : cdf) v = std::min(v, 1.0);
  cdf.back() = 1.0;
  return cdf;
}

CountMoments count_moments(const std::vector<double>& rhos) {
  check_rhos(rhos);
  CountMoments m;
  double var = 0.0, third = 0.0;
  for (double r : rhos) {
    m.mu += r;
    var += r * (1.0 - r);
    third += r * (1.0 - r) * (1.0 - 2.0 * r);
  }
  m.sigma = std::sqrt(var);
  m.gamma = var > 0.0 ? third / (m.sigma * var) : 0.0;
  return m;
}

namespace {

double volkova_point(const CountMoments& m, int k) {
  double x = (double(k) + 0.5 - m.mu) / m.sigma;
  double g = std_normal_cdf(x) + m.gamma * (1.0 - x * x) * std_normal_pdf(x) / 6.0;
  return std::clamp(g, 0.0, 1.0);
}

}  // namespace

double volkova_cdf(const std::vector<double>& rhos, int k) {
  CountMoments m = count_moments(rhos);
  if (k < 0) return 0.0;
  int n = int(rhos.size());
  if (k >= n) return 1.0;
  if (m.sigma == 0.0) {
    // All rho are 0 or 1: K is a point mass at mu.
    return double(k) + 0.5 >= m.mu ? 1.0 : 0.0;
  }
  double v = 0.0;
  for (int j = 0; j <= k; ++j) v = std::max(v, volkova_point(m, j));
  return v;
}

std::vector<double> volkova_cdf_table(const std::vector<double>& rhos) {
  CountMoments m = count_moments(rhos);
  int n = int(rhos.size());
  std::vector<double> table(size_t(n) + 1);
  if (m.sigma == 0.0) {
    for (int k = 0; k <= n; ++k) table[size_t(k)] = double(k) + 0.5 >= m.mu ? 1.0 : 0.0;
    table[size_t(n)] = 1.0;
    return table;
  }
  double run = 0.0;
  for (int k = 0; k <= n; ++k) {
    run = std::max(run, volkova_point(m, k));
    table[size_t(k)] = run;
  }
  table[size_t(n)] = 1.0;
  return table;
}

std::pair<int, int> invert_count_cdf(const std::vector<double>& cdf, double p_lo, double p_hi) {
  if (cdf.empty()) throw DataError("empty count cdf");
  if (!(p_lo > 0.0) || !(p_hi < 1.0) || p_lo > p_hi) {
    throw DataError("count cdf inversion probabilities out of order");
  }
  int n = int(cdf.size()) - 1;
  int lo = 0;
  for (int k = 1; k <= n; ++k) {
    if (cdf[size_t(k - 1)] <= p_lo) lo = k;
    else break;
  }
  int hi = n;
  for (int k = 0; k <= n; ++k) {
    if (cdf[size_t(k)] >= p_hi) {
      hi = k;
      break;
    }
  }
  return {lo, std::max(hi, lo)};
}

RiskSet build_risk_set(const std::vector<LifetimeObservation>& obs, const ModelSpec& spec,
                       const StudyConfig& cfg) {
  RiskSet rs;
  for (const auto& o : obs) {
    if (o.delta != 0) continue;  // failed units are not at risk
    RiskUnit u;
    u.serial = o.serial;
    u.original_group = o.group;
    u.group = prediction_group(cfg, o.group);
    const StratumSpec* st = spec.stratum_for_group(u.group);
    if (!st) {
      throw DataError("at-risk unit '" + o.serial + "' (group '" + o.group +
                      "') maps to no fitted stratum");
    }
    u.stratum = st->label;
    u.manufacturer = o.covariates.at("manufacturer");
    u.current_age = o.age;
    u.entry_years = 0.0;
    u.covariates = o.covariates;
    rs.units.push_back(std::move(u));
  }
  std::sort(rs.units.begin(), rs.units.end(),
            [](const RiskUnit& a, const RiskUnit& b) { return a.serial < b.serial; });
  return rs;
}

ForecastGrid ForecastGrid::make(const Date& start, int horizon_months) {
  if (horizon_months < 0) throw DataError("forecast horizon must be >= 0");
  ForecastGrid g;
  g.start = start;
  g.horizon_months = horizon_months;
  if (horizon_months == 0) {
    g.dates.push_back(start);
    return g;
  }
  for (int k = 1; k <= horizon_months; ++k) {
    Date d = end_of_month(add_months(start, k));
    if (!g.dates.empty() && !(g.dates.back() < d)) continue;
    g.dates.push_back(d);
  }
  return g;
}

PopulationForecast forecast(const RiskSet& rs, const Design& design, const FitResult& fit,
                            const BootstrapEnsemble& ens, const ForecastGrid& grid,
                            std::uint64_t master_seed, const ForecastOptions& opts) {
  if (rs.units.empty()) throw DataError("empty risk set");
  if (grid.dates.empty()) throw DataError("empty forecast grid");
  if (ens.replicates.empty()) throw DataError("empty bootstrap ensemble");
  const size_t n = rs.units.size();
  const size_t B = ens.replicates.size();
  const Family fam = fit.spec.family;

  // Per-unit base parameters and per-replicate parameters; log survival
  // at the conditioning age is date-independent, so cache it.
  std::vector<LocationScaleParams> base(n);
  std::vector<double> ls_now(n);
  std::vector<std::vector<LocationScaleParams>> rep(B, std::vector<LocationScaleParams>(n));
  std::vector<std::vector<double>> rep_ls_now(B, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    const auto& u = rs.units[i];
    base[i] = design.unit_params(fit.estimate, u.group, u.covariates);
    ls_now[i] = log_survival(fam, base[i], u.current_age);
  }
  parallel_for(B, opts.jobs, [&](std::size_t b) {
    for (size_t i = 0; i < n; ++i) {
      const auto& u = rs.units[i];
      rep[b][i] = design.unit_params(ens.replicates[b], u.group, u.covariates);
      rep_ls_now[b][i] = log_survival(fam, rep[b][i], u.current_age);
    }
  });

  auto rho_between = [&](Family f, const LocationScaleParams& p, double lsn, double horizon_age) {
    if (!std::isfinite(lsn)) return 1.0;
    double ls_w = log_survival(f, p, horizon_age);
    return std::clamp(-std::expm1(ls_w - lsn), 0.0, 1.0);
  };

  PopulationForecast fc;
  fc.grid = grid;
  fc.levels = opts.levels;
  fc.n_units = int(n);
  fc.rows.resize(grid.dates.size());

  parallel_for(grid.dates.size(), opts.jobs, [&](std::size_t di) {
    const Date& date = grid.dates[di];
    double elapsed = years_between(grid.start, date);
    std::vector<size_t> active;
    std::vector<double> rho_hat;
    for (size_t i = 0; i < n; ++i) {
      const auto& u = rs.units[i];
      if (u.entry_years > elapsed) continue;  // not yet in service
      double horizon_age = u.current_age + (elapsed - u.entry_years);
      active.push_back(i);
      rho_hat.push_back(rho_between(fam, base[i], ls_now[i], horizon_age));
    }

    ForecastRow row;
    row.date = date;
    row.n_at_risk = int(active.size());
    CountMoments m = count_moments(rho_hat);
    row.mu_K = m.mu;
    row.sigma_K = m.sigma;
    row.gamma_K = m.gamma;

    std::vector<double> table = volkova_cdf_table(rho_hat);
    if (!active.empty() && int(active.size()) <= opts.exact_threshold) {
      std::vector<double> exact = poisson_binomial_cdf(rho_hat);
      double err = 0.0;
      for (size_t k = 0; k < exact.size(); ++k) err = std::max(err, std::fabs(table[k] - exact[k]));
      row.volkova_abs_err = err;
    }

    double alpha0 = (1.0 - opts.levels.front()) / 2.0;
    auto [nlo, nhi] = invert_count_cdf(table, alpha0, 1.0 - alpha0);
    row.naive_lo = nlo;
    row.naive_hi = nhi;

    // Calibration: one simulated count per replicate, scored through the
    // replicate's own approximate count cdf.
    Rng rng(derive_seed(master_seed, SeedStream::population_calibration, di));
    std::vector<double> u_star(B);
    for (size_t b = 0; b < B; ++b) {
      int k_star = 0;
      for (double r : rho_hat) {
        if (rng.bernoulli(r)) ++k_star;
      }
      std::vector<double> rho_b(active.size());
      for (size_t a = 0; a < active.size(); ++a) {
        size_t i = active[a];
        const auto& u = rs.units[i];
        double horizon_age = u.current_age + (elapsed - u.entry_years);
        rho_b[a] = rho_between(fam, rep[b][i], rep_ls_now[b][i], horizon_age);
      }
      CountMoments mb = count_moments(rho_b);
      double uval;
      if (mb.sigma == 0.0) {
        uval = double(k_star) + 0.5 >= mb.mu ? 1.0 : 0.0;
      } else {
        double run = 0.0;
        for (int j = 0; j <= k_star; ++j) run = std::max(run, volkova_point(mb, j));
        uval = run;
      }
      u_star[b] = uval;
    }
    std::sort(u_star.begin(), u_star.end());
    for (double level : opts.levels) {
      double alpha = (1.0 - level) / 2.0;
      double u_l = std::clamp(quantile_type7(u_star, alpha), 1e-12, 1.0 - 1e-12);
      double u_u = std::clamp(quantile_type7(u_star, 1.0 - alpha), u_l, 1.0 - 1e-12);
      auto [clo, chi] = invert_count_cdf(table, u_l, u_u);
      row.calibrated.push_back({level, clo, chi});
    }
    fc.rows[di] = std::move(row);
  });
  return fc;
}

PopulationForecast subset_forecast(const RiskSet& rs, const Design& design, const FitResult& fit,
                                   const BootstrapEnsemble& ens, const ForecastGrid& grid,
                                   std::uint64_t master_seed,
                                   const std::function<bool(const RiskUnit&)>& keep,
                                   const ForecastOptions& opts) {
  RiskSet sub;
  for (const auto& u : rs.units) {
    if (keep(u)) sub.units.push_back(u);
  }
  if (sub.units.empty()) throw DataError("empty risk set after subset filter");
  return forecast(sub, design, fit, ens, grid, master_seed, opts);
}

std::string write_forecast_csv(const PopulationForecast& fc) {
  std::ostringstream out;
  out << "date,n_at_risk,mu_K,sigma_K,gamma_K,naive_lo,naive_hi";
  for (double level : fc.levels) {
    int pct = int(std::lround(level * 100));
    out << ",cal" << pct << "_lo,cal" << pct << "_hi";
  }
  out << ",volkova_abs_err\n";
  for (const auto& r : fc.rows) {
    out << format_date(r.date) << ',' << r.n_at_risk << ',' << format_double(r.mu_K) << ','
        << format_double(r.sigma_K) << ',' << format_double(r.gamma_K) << ',' << r.naive_lo << ','
        << r.naive_hi;
    for (const auto& band : r.calibrated) out << ',' << band.lower << ',' << band.upper;
    out << ',' << format_double(r.volkova_abs_err) << "\n";
  }
  return out.str();
}

}  // namespace fleetlife
