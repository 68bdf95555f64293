#include "fleetlife/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fleetlife/bootstrap.hpp"
#include "fleetlife/model.hpp"
#include "fleetlife/predict_individual.hpp"
#include "fleetlife/predict_population.hpp"
#include "fleetlife/rng.hpp"
#include "fleetlife/util.hpp"

namespace fleetlife {

std::string CategoryMix::draw(double u) const {
  double acc = 0.0;
  for (const auto& [level, p] : levels) {
    acc += p;
    if (u < acc) return level;
  }
  return levels.back().first;
}

namespace {

CategoryMix parse_mix(const std::string& text) {
  CategoryMix mix;
  mix.levels.clear();
  double total = 0.0;
  for (const auto& part : split(text, ',')) {
    auto bits = split(part, ':');
    if (bits.size() != 2) throw DataError("bad category mix entry '" + part + "'");
    double p = parse_double(bits[1]);
    if (!(p >= 0.0)) throw DataError("negative mix probability in '" + part + "'");
    mix.levels.emplace_back(trim(bits[0]), p);
    total += p;
  }
  if (!(total > 0.0)) throw DataError("category mix has zero total mass");
  for (auto& [level, p] : mix.levels) p /= total;
  return mix;
}

}  // namespace

FleetScenario scenario_from_map(const std::map<std::string, std::string>& kv) {
  FleetScenario sc;
  if (auto it = kv.find("seed"); it != kv.end()) sc.seed = std::uint64_t(parse_long(it->second));
  if (auto it = kv.find("truncation_epoch"); it != kv.end()) {
    sc.truncation_epoch = parse_date(it->second);
  }
  if (auto it = kv.find("data_freeze"); it != kv.end()) sc.data_freeze = parse_date(it->second);

  std::set<std::string> names;
  for (const auto& [key, value] : kv) {
    if (key.rfind("group.", 0) != 0) continue;
    auto rest = key.substr(6);
    auto dot = rest.find('.');
    if (dot == std::string::npos) throw DataError("bad scenario key '" + key + "'");
    names.insert(rest.substr(0, dot));
  }
  if (names.empty()) throw DataError("scenario defines no groups (group.<name>.* keys)");

  for (const auto& name : names) {
    GroupScenario g;
    g.name = name;
    auto want = [&](const std::string& field) -> std::string {
      auto it = kv.find("group." + name + "." + field);
      if (it == kv.end()) throw DataError("scenario group '" + name + "' missing ." + field);
      return it->second;
    };
    auto maybe = [&](const std::string& field) -> const std::string* {
      auto it = kv.find("group." + name + "." + field);
      return it == kv.end() ? nullptr : &it->second;
    };
    g.manufacturer = maybe("manufacturer") ? *maybe("manufacturer") : name;
    g.family = maybe("family") ? parse_family(*maybe("family")) : Family::weibull;
    if (maybe("eta") || maybe("beta")) {
      g.params = from_eta_beta(parse_double(want("eta")), parse_double(want("beta")));
    } else {
      g.params = LocationScaleParams{parse_double(want("mu")), parse_double(want("sigma"))};
      if (!(g.params.sigma > 0.0)) throw DataError("scenario group '" + name + "': sigma <= 0");
    }
    g.count = int(parse_long(want("count")));
    if (g.count <= 0) throw DataError("scenario group '" + name + "': count must be positive");
    g.install_lo = parse_date(want("install_lo"));
    g.install_hi = parse_date(want("install_hi"));
    if (g.install_hi < g.install_lo) {
      throw DataError("scenario group '" + name + "': install window reversed");
    }
    if (sc.data_freeze < g.install_hi) {
      throw DataError("scenario group '" + name + "': installs extend past the data freeze");
    }
    if (maybe("insulation")) g.insulation = parse_mix(*maybe("insulation"));
    if (maybe("cooling")) g.cooling = parse_mix(*maybe("cooling"));
    sc.groups.push_back(std::move(g));
  }
  return sc;
}

GeneratedFleet generate_fleet(const FleetScenario& sc) {
  if (sc.groups.empty()) throw DataError("scenario has no groups");
  GeneratedFleet fleet;
  std::int64_t epoch_days = to_days(sc.truncation_epoch);
  std::int64_t freeze_days = to_days(sc.data_freeze);

  for (size_t gi = 0; gi < sc.groups.size(); ++gi) {
    const auto& g = sc.groups[gi];
    std::int64_t lo = to_days(g.install_lo), hi = to_days(g.install_hi);
    std::uint64_t gseed = derive_seed(sc.seed, SeedStream::fleet_generation, gi);
    for (int ui = 0; ui < g.count; ++ui) {
      Rng rng(derive_seed(gseed, SeedStream::fleet_generation, std::uint64_t(ui)));
      std::int64_t install = lo + std::int64_t(rng.uniform() * double(hi - lo + 1));
      install = std::min(install, hi);
      double life_years = quantile(g.family, g.params, rng.uniform());
      std::string insulation = g.insulation.draw(rng.uniform());
      std::string cooling = g.cooling.draw(rng.uniform());

      std::int64_t fail_days = install + std::int64_t(std::llround(life_years * kDaysPerYear));
      if (fail_days <= install) fail_days = install + 1;  // day-resolution lives
      if (fail_days < epoch_days) {
        ++fleet.discarded_unobservable;
        continue;
      }
      char serial[64];
      std::snprintf(serial, sizeof serial, "%s-%05d", g.name.c_str(), ui);
      RawRecord rec;
      rec.serial = serial;
      rec.manufacturer = g.manufacturer;
      rec.install_date = from_days(install);
      if (fail_days <= freeze_days) rec.fail_date = from_days(fail_days);
      rec.insulation = insulation;
      rec.cooling = cooling;
      fleet.true_lifetimes[rec.serial] = double(fail_days - install) / kDaysPerYear;
      fleet.unit_groups[rec.serial] = g.name;
      fleet.records.push_back(std::move(rec));
    }
  }
  if (fleet.records.empty()) throw DataError("scenario produced zero observable units");
  return fleet;
}

FleetScenario reference_scenario_large(std::uint64_t seed) {
  FleetScenario sc;
  sc.seed = seed;
  sc.truncation_epoch = Date{1980, 1, 1};
  sc.data_freeze = Date{2008, 3, 1};
  GroupScenario pre;
  pre.name = "MXP";
  pre.manufacturer = "MX";
  pre.family = Family::weibull;
  pre.params = from_eta_beta(100.0, 2.0);
  pre.count = 1155;
  pre.install_lo = Date{1950, 1, 1};
  pre.install_hi = Date{1968, 1, 1};
  GroupScenario post = pre;
  post.name = "MXQ";
  post.count = 945;
  post.install_lo = Date{1980, 1, 1};
  post.install_hi = Date{2008, 1, 1};
  sc.groups = {pre, post};
  return sc;
}

FleetScenario reference_scenario_fleet(std::uint64_t seed) {
  FleetScenario sc;
  sc.seed = seed;
  sc.truncation_epoch = Date{1980, 1, 1};
  sc.data_freeze = Date{2008, 3, 1};

  GroupScenario mb;
  mb.name = "MB";
  mb.manufacturer = "MB";
  mb.family = Family::weibull;
  mb.params = from_eta_beta(110.0, 2.0);
  mb.count = 215;
  mb.install_lo = Date{1952, 1, 1};
  mb.install_hi = Date{1972, 1, 1};
  mb.insulation = CategoryMix{{{"d55", 0.7}, {"d65", 0.3}}};
  mb.cooling = CategoryMix{{{"NIFE", 0.5}, {"FIFE", 0.3}, {"NINE", 0.2}}};

  GroupScenario mc;
  mc.name = "MC";
  mc.manufacturer = "MC";
  mc.family = Family::weibull;
  mc.params = from_eta_beta(95.0, 2.2);
  mc.count = 235;
  mc.install_lo = Date{1955, 1, 1};
  mc.install_hi = Date{1978, 1, 1};
  mc.insulation = CategoryMix{{{"d55", 0.5}, {"d65", 0.5}}};
  mc.cooling = CategoryMix{{{"NIFE", 0.4}, {"FIFE", 0.4}, {"unknown", 0.2}}};

  GroupScenario ma;
  ma.name = "MA";
  ma.manufacturer = "MA";
  ma.family = Family::weibull;
  ma.params = from_eta_beta(30.0, 5.5);
  ma.count = 165;
  ma.install_lo = Date{1988, 1, 1};
  ma.install_hi = Date{2005, 1, 1};
  ma.insulation = CategoryMix{{{"d65", 1.0}}};
  ma.cooling = CategoryMix{{{"FIFE", 0.7}, {"NIFE", 0.3}}};

  sc.groups = {ma, mb, mc};
  return sc;
}

FleetScenario reference_scenario_small(std::uint64_t seed) {
  FleetScenario sc;
  sc.seed = seed;
  sc.truncation_epoch = Date{1980, 1, 1};
  sc.data_freeze = Date{2008, 3, 1};
  GroupScenario g;
  g.name = "SM";
  g.manufacturer = "SM";
  g.family = Family::weibull;
  g.params = from_eta_beta(18.39, 5.83);
  g.count = 80;
  g.install_lo = Date{1988, 1, 1};
  g.install_hi = Date{2000, 1, 1};
  sc.groups = {g};
  return sc;
}

StudyConfig reference_fleet_config() {
  return study_config_from_map(reference_fleet_config_map());
}

std::map<std::string, std::string> reference_fleet_config_map() {
  return {
      {"data_freeze", "2008-03-01"},
      {"truncation_epoch", "1980-01-01"},
      {"cutting_year", "1987"},
      {"stratum.Old.groups", "MB_Old,MC_Old"},
      {"stratum.Old.formula", "1"},
      {"stratum.Old.shape_class", "Old"},
      {"stratum.New.groups", "MA_New"},
      {"stratum.New.formula", "1"},
      {"stratum.New.shape_class", "New"},
  };
}

std::vector<LifetimeObservation> pooled_observations(const GeneratedFleet& fleet, const Date& epoch,
                                                     const Date& freeze) {
  StudyConfig cfg;
  cfg.data_freeze = freeze;
  cfg.truncation_epoch = epoch;
  DerivedData derived = derive_observations(fleet.records, cfg);
  for (auto& o : derived.observations) o.group = "All";
  return derived.observations;
}

ModelSpec pooled_spec(Family family) {
  ModelSpec spec;
  spec.family = family;
  spec.strata.push_back({"All", {"All"}, {}, "All"});
  return spec;
}

MleStudyResult mle_bias_study(const FleetScenario& sc, double true_eta, double true_beta,
                              int replications, std::uint64_t seed, int jobs) {
  if (replications < 1) throw DataError("mle_bias_study needs replications >= 1");
  MleStudyResult out;
  out.replications = replications;

  struct RepResult {
    bool ok = false;
    bool within = false;
    bool naive_below_truth = false;
    bool naive_below_aware = false;
    double aware_eta = 0.0, naive_eta = 0.0;
  };
  std::vector<RepResult> reps(static_cast<std::size_t>(replications));

  parallel_for(size_t(replications), jobs, [&](std::size_t r) {
    FleetScenario rep_sc = sc;
    rep_sc.seed = derive_seed(seed, SeedStream::coverage_replication, r);
    GeneratedFleet fleet = generate_fleet(rep_sc);
    auto obs = pooled_observations(fleet, rep_sc.truncation_epoch, rep_sc.data_freeze);
    ModelSpec spec = pooled_spec(Family::weibull);

    FitOptions aware_opts;
    FitResult aware = fit_mle(spec, obs, aware_opts);
    FitOptions naive_opts;
    naive_opts.ignore_truncation = true;
    naive_opts.compute_covariance = false;
    FitResult naive = fit_mle(spec, obs, naive_opts);
    if (!aware.converged || !naive.converged || !aware.cov_ok) return;

    RepResult rr;
    rr.ok = true;
    double mu = aware.estimate[0], ls = aware.estimate[1];
    double se_mu = aware.se(0), se_ls = aware.se(1);
    rr.aware_eta = std::exp(mu);
    double aware_beta = std::exp(-ls);
    rr.naive_eta = std::exp(naive.estimate[0]);
    bool eta_ok = std::fabs(rr.aware_eta - true_eta) <= 3.0 * rr.aware_eta * se_mu;
    bool beta_ok = std::fabs(aware_beta - true_beta) <= 3.0 * aware_beta * se_ls;
    rr.within = eta_ok && beta_ok;
    rr.naive_below_truth = rr.naive_eta < true_eta;
    rr.naive_below_aware = rr.naive_eta < rr.aware_eta;
    reps[r] = rr;
  });

  double aware_sum = 0.0, naive_sum = 0.0;
  int ok = 0;
  for (const auto& rr : reps) {
    if (!rr.ok) {
      ++out.failed_replications;
      continue;
    }
    ++ok;
    out.aware_within_3se += rr.within;
    out.naive_eta_below_truth += rr.naive_below_truth;
    out.naive_below_aware += rr.naive_below_aware;
    aware_sum += rr.aware_eta;
    naive_sum += rr.naive_eta;
  }
  if (ok > 0) {
    out.aware_eta_mean = aware_sum / ok;
    out.naive_eta_mean = naive_sum / ok;
  }
  return out;
}

IndividualCoverageResult individual_coverage_study(const FleetScenario& sc, int n_fleets,
                                                   int units_per_fleet, int B, double level,
                                                   std::uint64_t seed, int jobs) {
  if (n_fleets < 1 || units_per_fleet < 1) throw DataError("coverage study needs positive sizes");
  IndividualCoverageResult out;
  out.fleets = n_fleets;

  struct FleetTally {
    bool ok = false;
    int units = 0, naive = 0, calibrated = 0;
  };
  std::vector<FleetTally> tallies(static_cast<std::size_t>(n_fleets));

  parallel_for(size_t(n_fleets), jobs, [&](std::size_t f) {
    std::uint64_t fseed = derive_seed(seed, SeedStream::coverage_replication, f);
    FleetScenario rep_sc = sc;
    rep_sc.seed = fseed;
    GeneratedFleet fleet = generate_fleet(rep_sc);
    auto obs = pooled_observations(fleet, rep_sc.truncation_epoch, rep_sc.data_freeze);
    ModelSpec spec = pooled_spec(Family::weibull);

    FleetTally tally;
    try {
      FitResult fit = fit_mle(spec, obs);
      if (!fit.converged) return;
      BootstrapOptions bo;
      bo.jobs = 1;  // fleets already run in parallel
      BootstrapEnsemble ens = run_bootstrap(spec, obs, fit, WeightLaw::gamma_unit, B, fseed, bo);

      std::vector<const LifetimeObservation*> at_risk;
      for (const auto& o : obs) {
        if (o.delta == 0) at_risk.push_back(&o);
      }
      std::sort(at_risk.begin(), at_risk.end(),
                [](auto* a, auto* b) { return a->serial < b->serial; });
      if (at_risk.empty()) return;

      LocationScaleParams est{fit.estimate[0], std::exp(fit.estimate[1])};
      std::vector<LocationScaleParams> reps;
      reps.reserve(ens.replicates.size());
      for (const auto& r : ens.replicates) {
        reps.push_back(LocationScaleParams{r[0], std::exp(r[1])});
      }
      IntervalSpec ispec = IntervalSpec::symmetric(level);
      int take = std::min<int>(units_per_fleet, int(at_risk.size()));
      for (int j = 0; j < take; ++j) {
        size_t idx = size_t((j * (at_risk.size() - 1)) / std::max(take - 1, 1));
        const auto& o = *at_risk[idx];
        double t_true = fleet.true_lifetimes.at(o.serial);
        ConditionalLife cl{Family::weibull, est, o.age};
        LifePrediction pred;
        try {
          pred = calibrate_interval(cl, reps, ispec,
                                    derive_seed(fseed, SeedStream::individual_calibration, idx));
        } catch (const std::domain_error&) {
          continue;
        }
        ++tally.units;
        tally.naive += pred.naive_lo <= t_true && t_true <= pred.naive_hi;
        tally.calibrated += pred.cal_lo <= t_true && t_true <= pred.cal_hi;
      }
      tally.ok = true;
    } catch (const Error&) {
      tally.ok = false;
    }
    tallies[f] = tally;
  });

  for (const auto& t : tallies) {
    if (!t.ok) {
      ++out.failed_fleets;
      continue;
    }
    out.units += t.units;
    out.naive_covered += t.naive;
    out.calibrated_covered += t.calibrated;
  }
  return out;
}

PopulationCoverageResult population_coverage_study(const FleetScenario& sc, int B, int futures,
                                                   int horizon_months, double level,
                                                   std::uint64_t seed, int jobs) {
  GeneratedFleet fleet = generate_fleet(sc);
  StudyConfig cfg = reference_fleet_config();
  cfg.data_freeze = sc.data_freeze;
  cfg.truncation_epoch = sc.truncation_epoch;
  DerivedData derived = derive_observations(fleet.records, cfg);
  stratify(derived.observations, fleet.records, cfg);

  ModelSpec spec = model_spec_from_config(reference_fleet_config_map(), Family::weibull);
  auto fit_obs = filter_fit_scope(derived.observations, spec);
  Design design = Design::build(spec, fit_obs);
  FitResult fit = fit_mle(spec, fit_obs);
  if (!fit.converged) throw NumericalError("population coverage study: base fit did not converge");

  BootstrapOptions bo;
  bo.jobs = jobs;
  BootstrapEnsemble ens = run_bootstrap(spec, fit_obs, fit, WeightLaw::gamma_unit, B, seed, bo);

  RiskSet rs = build_risk_set(derived.observations, spec, cfg);
  ForecastGrid grid = ForecastGrid::make(sc.data_freeze, horizon_months);
  ForecastOptions fo;
  fo.levels = {level};
  fo.jobs = jobs;
  PopulationForecast fc = forecast(rs, design, fit, ens, grid, seed, fo);

  PopulationCoverageResult out;
  out.futures = futures;
  out.grid_dates = int(fc.rows.size());
  for (const auto& row : fc.rows) out.max_volkova_err = std::max(out.max_volkova_err, row.volkova_abs_err);

  // True parameters per risk unit from the scenario group map.
  std::map<std::string, const GroupScenario*> by_name;
  for (const auto& g : sc.groups) by_name[g.name] = &g;
  const size_t n = rs.units.size();
  std::vector<const GroupScenario*> truth(n);
  for (size_t i = 0; i < n; ++i) {
    truth[i] = by_name.at(fleet.unit_groups.at(rs.units[i].serial));
  }
  std::vector<double> elapsed(fc.rows.size());
  for (size_t d = 0; d < fc.rows.size(); ++d) {
    elapsed[d] = years_between(grid.start, fc.rows[d].date);
  }

  std::vector<double> fractions(static_cast<std::size_t>(futures), 0.0);
  parallel_for(size_t(futures), jobs, [&](std::size_t s) {
    Rng rng(derive_seed(seed, SeedStream::future_simulation, s));
    std::vector<double> fail_after(n);  // years after forecast start
    for (size_t i = 0; i < n; ++i) {
      ConditionalLife cl{truth[i]->family, truth[i]->params, rs.units[i].current_age};
      fail_after[i] = conditional_quantile(cl, rng.uniform()) - rs.units[i].current_age;
    }
    int covered = 0;
    for (size_t d = 0; d < fc.rows.size(); ++d) {
      int k_true = 0;
      for (size_t i = 0; i < n; ++i) {
        if (fail_after[i] <= elapsed[d]) ++k_true;
      }
      const auto& band = fc.rows[d].calibrated.front();
      covered += band.lower <= k_true && k_true <= band.upper;
    }
    fractions[s] = fc.rows.empty() ? 0.0 : double(covered) / double(fc.rows.size());
  });
  double acc = 0.0;
  for (double v : fractions) acc += v;
  out.mean_fraction_covered = futures ? acc / futures : 0.0;
  return out;
}

}  // namespace fleetlife
