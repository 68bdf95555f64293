// fleetlife: fit parametric lifetime models to left-truncated,
// right-censored fleet data and forecast individual and population
// failures with bootstrap-calibrated intervals.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleetlife/bootstrap.hpp"
#include "fleetlife/data.hpp"
#include "fleetlife/manifest.hpp"
#include "fleetlife/model.hpp"
#include "fleetlife/nonparametric.hpp"
#include "fleetlife/predict_individual.hpp"
#include "fleetlife/predict_population.hpp"
#include "fleetlife/report.hpp"
#include "fleetlife/rng.hpp"
#include "fleetlife/simulation.hpp"
#include "fleetlife/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fleetlife;

namespace {

constexpr std::uint64_t kDefaultSeed = 20090421;

struct CommonArgs {
  std::string data_path;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool strict = false;
};

int default_jobs() {
  if (const char* env = std::getenv("FLEETLIFE_THREADS")) {
    try {
      return std::max(1, int(std::stol(env)));
    } catch (...) {
      throw DataError("FLEETLIFE_THREADS is not an integer");
    }
  }
  return 1;
}

std::uint64_t resolve_seed(const CommonArgs& a) {
  if (a.seed) return *a.seed;
  if (a.strict) throw DataError("--seed is required in --strict mode");
  return kDefaultSeed;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  for (const auto& part : split(text, ',')) {
    double v = parse_double(part);
    if (!(v > 0.0) || !(v < 1.0)) throw DataError("interval level outside (0,1): " + part);
    levels.push_back(v);
  }
  if (levels.empty()) throw DataError("--level lists no levels");
  return levels;
}

struct LoadedStudy {
  std::map<std::string, std::string> kv;
  StudyConfig cfg;
  std::vector<RawRecord> records;
  DerivedData derived;
  std::string config_hash;
  std::string data_digest;
  std::vector<std::string> warnings;
};

LoadedStudy load_study(const std::string& data_path, const std::string& config_path) {
  LoadedStudy s;
  std::string config_text = read_file(config_path);
  std::string data_text = read_file(data_path);
  s.config_hash = digest_hex(config_text);
  s.data_digest = digest_hex(data_text);
  s.kv = parse_config_text(config_text);
  s.cfg = study_config_from_map(s.kv);
  ParsedFleet fleet = parse_fleet_csv(data_text);
  s.records = std::move(fleet.records);
  s.warnings = std::move(fleet.warnings);
  s.derived = derive_observations(s.records, s.cfg);
  stratify(s.derived.observations, s.records, s.cfg);
  for (const auto& w : s.derived.warnings) s.warnings.push_back(w);
  return s;
}

void write_output(const fs::path& dir, const std::string& name, const std::string& contents,
                  const std::string& run_id) {
  fs::create_directories(dir);
  std::string body = contents;
  if (name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
    body = "# run " + run_id + "\n" + contents;
  }
  write_file((dir / name).string(), body);
}

RunManifest make_manifest(const std::string& command, const LoadedStudy* study,
                          const std::map<std::string, std::string>& extra_inputs,
                          std::optional<std::uint64_t> seed) {
  RunManifest m;
  m.command = command;
  if (study) {
    m.config_hash = study->config_hash;
    m.input_digests["config"] = study->config_hash;
    m.input_digests["data"] = study->data_digest;
  }
  for (const auto& [k, v] : extra_inputs) m.input_digests[k] = v;
  if (seed) {
    m.seed = *seed;
    m.seeded = true;
  }
  m.finalize();
  return m;
}

int config_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : int(parse_long(it->second));
}

// ---------------------------------------------------------------------------
// fit

json group_fit_report(const std::vector<LifetimeObservation>& obs, Family family,
                      const std::set<std::string>& excluded_groups) {
  std::map<std::string, std::vector<LifetimeObservation>> by_group;
  for (const auto& o : obs) by_group[o.group].push_back(o);

  json out = json::object();
  for (auto& [group, members] : by_group) {
    json entry;
    entry["n"] = members.size();
    int failures = 0, truncated = 0;
    for (const auto& o : members) {
      failures += o.delta;
      truncated += o.nu == 0;
    }
    entry["failures"] = failures;
    entry["truncated"] = truncated;
    entry["excluded_from_fit"] = excluded_groups.count(group) > 0;
    if (failures == 0) {
      entry["note"] = "no failures; single-group fit not possible";
      out[group] = entry;
      continue;
    }
    try {
      ModelSpec spec;
      spec.family = family;
      spec.strata.push_back({group, {group}, {}, group});
      auto scope = members;
      for (auto& o : scope) o.excluded_from_fit = false;  // diagnostics fit everything
      FitResult fit = fit_mle(spec, scope);
      entry["converged"] = fit.converged;
      entry["loglik"] = fit.loglik;
      if (fit.converged) {
        double mu = fit.estimate[0], ls = fit.estimate[1];
        entry["eta"] = std::exp(mu);
        entry["beta"] = std::exp(-ls);
        entry["mu"] = mu;
        entry["sigma"] = std::exp(ls);
        if (fit.cov_ok) {
          entry["se_eta"] = std::exp(mu) * fit.se(0);
          entry["se_beta"] = std::exp(-ls) * fit.se(1);
        }
        if (!fit.diagnostics.empty()) entry["diagnostics"] = fit.diagnostics;
      }
    } catch (const Error& e) {
      entry["error"] = e.what();
    }
    out[group] = entry;
  }
  return out;
}

int cmd_fit(const CommonArgs& args, const std::string& family_arg) {
  LoadedStudy study = load_study(args.data_path, args.config_path);

  std::vector<Family> families;
  std::string fam = family_arg;
  if (fam.empty()) {
    auto it = study.kv.find("family");
    fam = it == study.kv.end() ? "weibull" : it->second;
  }
  if (to_lower(fam) == "both") {
    families = {Family::weibull, Family::lognormal};
  } else {
    families = {parse_family(fam)};
  }

  RunManifest manifest = make_manifest("fit", &study, {}, std::nullopt);
  fs::path out(args.out_dir);
  std::set<std::string> excluded(study.cfg.fit_exclusions.begin(), study.cfg.fit_exclusions.end());

  json summary;
  summary["run_id"] = manifest.run_id;
  summary["dropped_unobservable"] = study.derived.dropped_unobservable;
  summary["warnings"] = study.warnings;

  // Nonparametric estimates and probability-plot points per group.
  std::map<std::string, std::vector<LifetimeObservation>> by_group;
  for (const auto& o : study.derived.observations) by_group[o.group].push_back(o);
  for (const auto& [group, members] : by_group) {
    StepEstimate est = ltrc_product_limit(members);
    write_output(out, "nonparametric_" + group + ".csv", write_step_estimate_csv(est),
                 manifest.run_id);
    if (!est.jump_times.empty()) {
      for (Family family : families) {
        PlotPoints pts = plot_points(est, family);
        write_output(out, "ppoints_" + group + "_" + family_name(family) + ".csv",
                     write_plot_points_csv(pts), manifest.run_id);
      }
    }
  }

  json family_block = json::object();
  for (Family family : families) {
    ModelSpec spec = model_spec_from_config(study.kv, family);
    auto fit_obs = filter_fit_scope(study.derived.observations, spec);
    FitResult fit = fit_mle(spec, fit_obs, FitOptions{.max_iterations = 800});
    if (!fit.converged) {
      throw NumericalError("fit (" + family_name(family) + ") did not converge: " +
                           (fit.diagnostics.empty() ? "no detail" : fit.diagnostics.front()));
    }
    ArtifactStamp stamp{manifest.run_id, study.config_hash, study.data_digest, kToolVersion};
    write_output(out, "fit_" + family_name(family) + ".json", fit_to_json(fit, stamp),
                 manifest.run_id);
    write_output(out, "groups_" + family_name(family) + ".json",
                 group_fit_report(study.derived.observations, family, excluded).dump(2) + "\n",
                 manifest.run_id);

    // Per-stratum likelihood-ratio tests against the intercept-only reduction.
    json lr = json::array();
    for (size_t si = 0; si < spec.strata.size(); ++si) {
      if (spec.strata[si].formula_terms.empty()) continue;
      ModelSpec reduced = spec;
      reduced.strata[si].formula_terms.clear();
      FitResult rfit = fit_mle(reduced, fit_obs, FitOptions{.max_iterations = 800});
      if (!rfit.converged) continue;
      LrTest t = lr_test(fit, rfit);
      lr.push_back({{"stratum", spec.strata[si].label},
                    {"full_terms", spec.strata[si].formula_terms},
                    {"full_loglik", fit.loglik},
                    {"reduced_loglik", rfit.loglik},
                    {"statistic", t.statistic},
                    {"df", t.df},
                    {"p_value", t.p_value}});
    }
    write_output(out, "lr_tests_" + family_name(family) + ".json", lr.dump(2) + "\n",
                 manifest.run_id);

    family_block[family_name(family)] = {{"loglik", fit.loglik},
                                         {"n_obs", fit.n_obs},
                                         {"n_failures", fit.n_failures},
                                         {"n_params", fit.n_params()},
                                         {"diagnostics", fit.diagnostics}};
  }
  summary["families"] = family_block;
  write_output(out, "summary.json", summary.dump(2) + "\n", manifest.run_id);
  write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
  return 0;
}

// ---------------------------------------------------------------------------
// bootstrap

int cmd_bootstrap(const CommonArgs& args, const std::string& fit_path, int replicates,
                  const std::string& law_name) {
  LoadedStudy study = load_study(args.data_path, args.config_path);
  std::uint64_t seed = resolve_seed(args);

  std::string fit_text = read_file(fit_path);
  ArtifactStamp fit_stamp;
  FitResult fit = fit_from_json(fit_text, &fit_stamp);
  if (fit_stamp.config_hash != study.config_hash || fit_stamp.data_digest != study.data_digest) {
    throw DataError("fit artifact is stale: config/data digests do not match");
  }

  auto fit_obs = filter_fit_scope(study.derived.observations, fit.spec);
  int B = replicates > 0 ? replicates : config_int(study.kv, "replicates", 2000);
  WeightLaw law = law_name.empty() ? WeightLaw::gamma_unit : parse_weight_law(law_name);

  BootstrapOptions bo;
  bo.jobs = args.jobs;
  BootstrapEnsemble ens = run_bootstrap(fit.spec, fit_obs, fit, law, B, seed, bo);

  RunManifest manifest = make_manifest("bootstrap", &study, {{"fit", digest_hex(fit_text)}}, seed);
  ArtifactStamp stamp{manifest.run_id, study.config_hash, study.data_digest, kToolVersion};
  fs::path out(args.out_dir);
  write_output(out, "ensemble_" + family_name(fit.spec.family) + ".json",
               ensemble_to_json(ens, stamp), manifest.run_id);
  write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
  return 0;
}

// ---------------------------------------------------------------------------
// predict

std::string plot_individual_csv(const std::vector<LifePrediction>& preds) {
  std::ostringstream out;
  out << "# axis: log-years\n";
  out << "rank,serial,group,age,cal_lo,cal_hi\n";
  int rank = 0;
  for (const auto& p : preds) {
    if (!p.has_interval) continue;
    out << ++rank << ',' << p.serial << ',' << p.group << ',' << format_double(p.current_age)
        << ',' << format_double(p.cal_lo) << ',' << format_double(p.cal_hi) << "\n";
  }
  return out.str();
}

int cmd_predict(const CommonArgs& args, const std::string& fit_path, const std::string& ens_path,
                const std::string& levels_text, int horizon_months) {
  LoadedStudy study = load_study(args.data_path, args.config_path);
  std::uint64_t seed = resolve_seed(args);
  std::vector<double> levels = parse_levels(levels_text);

  std::string fit_text = read_file(fit_path);
  std::string ens_text = read_file(ens_path);
  ArtifactStamp fit_stamp, ens_stamp;
  FitResult fit = fit_from_json(fit_text, &fit_stamp);
  BootstrapEnsemble ens = ensemble_from_json(ens_text, &ens_stamp);
  if (fit_stamp.config_hash != study.config_hash || fit_stamp.data_digest != study.data_digest) {
    throw DataError("fit artifact is stale: config/data digests do not match");
  }
  if (ens_stamp.config_hash != study.config_hash || ens_stamp.data_digest != study.data_digest) {
    throw DataError("ensemble artifact is stale: config/data digests do not match");
  }
  if (ens.base_fit.estimate != fit.estimate) {
    throw DataError("ensemble was built from a different fit (base estimates differ)");
  }

  auto fit_obs = filter_fit_scope(study.derived.observations, fit.spec);
  Design design = Design::build(fit.spec, fit_obs);

  RunManifest manifest = make_manifest(
      "predict", &study, {{"fit", digest_hex(fit_text)}, {"ensemble", digest_hex(ens_text)}}, seed);
  fs::path out(args.out_dir);

  IntervalSpec ispec = IntervalSpec::symmetric(levels.front());
  auto preds = predict_fleet(study.derived.observations, design, fit, ens, study.cfg, ispec, seed,
                             args.jobs);
  write_output(out, "predictions.csv", write_predictions_csv(preds), manifest.run_id);
  write_output(out, "plot_individual.csv", plot_individual_csv(preds), manifest.run_id);

  if (horizon_months <= 0) horizon_months = config_int(study.kv, "horizon_months", 120);
  RiskSet rs = build_risk_set(study.derived.observations, fit.spec, study.cfg);
  ForecastGrid grid = ForecastGrid::make(study.cfg.data_freeze, horizon_months);
  ForecastOptions fo;
  fo.levels = levels;
  fo.jobs = args.jobs;
  fo.exact_threshold = config_int(study.kv, "exact_threshold", 2000);

  PopulationForecast combined = forecast(rs, design, fit, ens, grid, seed, fo);
  write_output(out, "forecast_combined.csv", write_forecast_csv(combined), manifest.run_id);

  std::set<std::string> strata, manufacturers;
  for (const auto& u : rs.units) {
    strata.insert(u.stratum);
    manufacturers.insert(u.manufacturer);
  }
  for (const auto& label : strata) {
    auto fc = subset_forecast(
        rs, design, fit, ens, grid, seed, [&](const RiskUnit& u) { return u.stratum == label; },
        fo);
    write_output(out, "forecast_stratum_" + label + ".csv", write_forecast_csv(fc),
                 manifest.run_id);
  }
  for (const auto& m : manufacturers) {
    auto fc = subset_forecast(
        rs, design, fit, ens, grid, seed, [&](const RiskUnit& u) { return u.manufacturer == m; },
        fo);
    write_output(out, "forecast_mfr_" + m + ".csv", write_forecast_csv(fc), manifest.run_id);
  }
  write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
  return 0;
}

// ---------------------------------------------------------------------------
// backtest

int cmd_backtest(const CommonArgs& args, const std::string& pseudo_freeze_text, int replicates,
                 const std::string& levels_text) {
  LoadedStudy study = load_study(args.data_path, args.config_path);
  std::uint64_t seed = resolve_seed(args);
  double level = parse_levels(levels_text).front();
  Date pseudo = parse_date(pseudo_freeze_text);
  if (!(study.cfg.truncation_epoch < pseudo)) {
    throw DataError("--pseudo-freeze must be after the truncation epoch");
  }
  if (study.cfg.data_freeze < pseudo) {
    throw DataError("--pseudo-freeze must not be after the data freeze");
  }

  RunManifest manifest = make_manifest("backtest", &study, {}, seed);
  fs::path out(args.out_dir);
  json report;
  report["pseudo_freeze"] = format_date(pseudo);
  report["level"] = level;

  if (pseudo == study.cfg.data_freeze) {
    report["note"] = "degenerate window: pseudo freeze equals the data freeze";
    write_output(out, "backtest.json", report.dump(2) + "\n", manifest.run_id);
    write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
    return 0;
  }

  // Fit view: the records as they looked at the pseudo freeze.
  std::vector<RawRecord> view;
  std::vector<const RawRecord*> entrants;
  for (const auto& r : study.records) {
    if (r.install_date > pseudo) {
      entrants.push_back(&r);
      continue;
    }
    RawRecord v = r;
    if (v.fail_date && pseudo < *v.fail_date) v.fail_date.reset();  // not yet failed
    view.push_back(std::move(v));
  }
  StudyConfig view_cfg = study.cfg;
  view_cfg.data_freeze = pseudo;
  DerivedData view_data = derive_observations(view, view_cfg);
  stratify(view_data.observations, view, view_cfg);

  Family family = Family::weibull;
  if (auto it = study.kv.find("family"); it != study.kv.end() && to_lower(it->second) != "both") {
    family = parse_family(it->second);
  }
  ModelSpec spec = model_spec_from_config(study.kv, family);
  auto fit_obs = filter_fit_scope(view_data.observations, spec);
  FitResult fit;
  try {
    fit = fit_mle(spec, fit_obs, FitOptions{.max_iterations = 800});
  } catch (const NumericalError& e) {
    throw NumericalError(
        std::string("backtest refit failed (too few failures before the pseudo freeze?): ") +
        e.what());
  }
  if (!fit.converged) throw NumericalError("backtest refit did not converge");
  Design design = Design::build(spec, fit_obs);

  int B = replicates > 0 ? replicates : config_int(study.kv, "replicates", 500);
  BootstrapOptions bo;
  bo.jobs = args.jobs;
  BootstrapEnsemble ens = run_bootstrap(spec, fit_obs, fit, WeightLaw::gamma_unit, B, seed, bo);

  // Risk set: survivors at the pseudo freeze plus later entrants, which
  // join with age zero when they enter service.
  RiskSet rs = build_risk_set(view_data.observations, spec, study.cfg);
  std::map<std::string, std::string> merge;
  for (const auto& rule : study.cfg.group_merge_rules) {
    for (const auto& src : rule.sources) merge[src] = rule.target;
  }
  for (const RawRecord* r : entrants) {
    std::string group =
        r->manufacturer + (r->install_date.year < study.cfg.cutting_year ? "_Old" : "_New");
    if (auto m = merge.find(group); m != merge.end()) group = m->second;
    RiskUnit u;
    u.serial = r->serial;
    u.original_group = group;
    u.group = prediction_group(study.cfg, group);
    const StratumSpec* st = spec.stratum_for_group(u.group);
    if (!st) {
      throw DataError("backtest entrant '" + r->serial + "' (group '" + group +
                      "') maps to no fitted stratum");
    }
    u.stratum = st->label;
    u.manufacturer = r->manufacturer;
    u.current_age = 0.0;
    u.entry_years = years_between(pseudo, r->install_date);
    u.covariates = {{"manufacturer", r->manufacturer},
                    {"insulation", r->insulation},
                    {"cooling", r->cooling}};
    rs.units.push_back(std::move(u));
  }
  std::sort(rs.units.begin(), rs.units.end(),
            [](const RiskUnit& a, const RiskUnit& b) { return a.serial < b.serial; });

  // Monthly grid across the holdout window.
  int months = 0;
  while (!(study.cfg.data_freeze < end_of_month(add_months(pseudo, months + 1)))) ++months;
  if (months == 0) throw DataError("holdout window shorter than one month");
  ForecastGrid grid = ForecastGrid::make(pseudo, months);

  ForecastOptions fo;
  fo.levels = {level};
  fo.jobs = args.jobs;
  PopulationForecast fc = forecast(rs, design, fit, ens, grid, seed, fo);

  // Observed counts over the holdout: every tracked unit is fully observed
  // through the real freeze, so the nonparametric estimate of the fraction
  // failing reduces to the empirical counting process.
  std::map<std::string, Date> fail_dates;
  for (const auto& r : study.records) {
    if (r.fail_date) fail_dates[r.serial] = *r.fail_date;
  }
  std::set<std::string> tracked;
  for (const auto& u : rs.units) tracked.insert(u.serial);

  std::ostringstream csv;
  csv << "date,n_at_risk,mu_K,cal_lo,cal_hi,observed_K,pred_fraction,frac_lo,frac_hi,"
         "observed_fraction,covered\n";
  int covered_dates = 0;
  bool width_decrease = false;
  double prev_width = -1.0;
  for (const auto& row : fc.rows) {
    int observed = 0;
    for (const auto& [serial, fd] : fail_dates) {
      if (tracked.count(serial) && pseudo < fd && !(row.date < fd)) ++observed;
    }
    const auto& band = row.calibrated.front();
    bool covered = band.lower <= observed && observed <= band.upper;
    covered_dates += covered;
    double n = std::max(row.n_at_risk, 1);
    double width = double(band.upper - band.lower) / n;
    if (prev_width >= 0.0 && width < prev_width - 1e-12) width_decrease = true;
    prev_width = width;
    csv << format_date(row.date) << ',' << row.n_at_risk << ',' << format_double(row.mu_K) << ','
        << band.lower << ',' << band.upper << ',' << observed << ','
        << format_double(row.mu_K / n) << ',' << format_double(band.lower / n) << ','
        << format_double(band.upper / n) << ',' << format_double(observed / n) << ','
        << (covered ? 1 : 0) << "\n";
  }
  write_output(out, "backtest.csv", csv.str(), manifest.run_id);

  report["n_grid_dates"] = fc.rows.size();
  report["covered_dates"] = covered_dates;
  report["fraction_covered"] = fc.rows.empty() ? 0.0 : double(covered_dates) / fc.rows.size();
  report["entrants"] = entrants.size();
  report["band_width_decreases_somewhere"] = width_decrease;
  report["loglik"] = fit.loglik;
  write_output(out, "backtest.json", report.dump(2) + "\n", manifest.run_id);
  write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
  return 0;
}

// ---------------------------------------------------------------------------
// sensitivity

int cmd_sensitivity(const CommonArgs& args, const std::string& family_arg,
                    const std::string& cutting_years_text, int replicates,
                    const std::string& levels_text, int horizon_months) {
  LoadedStudy study = load_study(args.data_path, args.config_path);
  std::uint64_t seed = resolve_seed(args);
  std::vector<double> levels = parse_levels(levels_text);
  if (horizon_months <= 0) horizon_months = config_int(study.kv, "horizon_months", 120);
  int B = replicates > 0 ? replicates : config_int(study.kv, "sensitivity_replicates", 300);

  RunManifest manifest = make_manifest("sensitivity", &study, {}, seed);
  fs::path out(args.out_dir);
  ForecastGrid grid = ForecastGrid::make(study.cfg.data_freeze, horizon_months);

  auto run_variant = [&](const StudyConfig& cfg, Family family) -> PopulationForecast {
    DerivedData derived = derive_observations(study.records, cfg);
    stratify(derived.observations, study.records, cfg);
    ModelSpec spec = model_spec_from_config(study.kv, family);
    auto fit_obs = filter_fit_scope(derived.observations, spec);
    FitResult fit = fit_mle(spec, fit_obs, FitOptions{.max_iterations = 800});
    if (!fit.converged) throw NumericalError("sensitivity variant fit did not converge");
    Design design = Design::build(spec, fit_obs);
    BootstrapOptions bo;
    bo.jobs = args.jobs;
    BootstrapEnsemble ens = run_bootstrap(spec, fit_obs, fit, WeightLaw::gamma_unit, B, seed, bo);
    RiskSet rs = build_risk_set(derived.observations, spec, cfg);
    ForecastOptions fo;
    fo.levels = levels;
    fo.jobs = args.jobs;
    return forecast(rs, design, fit, ens, grid, seed, fo);
  };

  json report;
  report["horizon_months"] = horizon_months;
  report["replicates"] = B;

  if (!cutting_years_text.empty()) {
    int lo_year = study.records.front().install_date.year, hi_year = lo_year;
    for (const auto& r : study.records) {
      lo_year = std::min(lo_year, r.install_date.year);
      hi_year = std::max(hi_year, r.install_date.year);
    }
    std::vector<int> years;
    for (const auto& part : split(cutting_years_text, ',')) {
      int y = int(parse_long(part));
      if (y <= lo_year || y > hi_year) {
        throw DataError("cutting year " + std::to_string(y) + " outside the install range [" +
                        std::to_string(lo_year) + ", " + std::to_string(hi_year) + "]");
      }
      years.push_back(y);
    }
    Family family = family_arg.empty() || to_lower(family_arg) == "both"
                        ? Family::weibull
                        : parse_family(family_arg);
    PopulationForecast baseline = run_variant(study.cfg, family);

    std::ostringstream csv;
    csv << "cutting_year,date,mu_K,delta_vs_baseline\n";
    json variants = json::array();
    for (int y : years) {
      StudyConfig cfg = study.cfg;
      cfg.cutting_year = y;
      PopulationForecast fc =
          y == study.cfg.cutting_year ? baseline : run_variant(cfg, family);
      double end_delta = 0.0;
      for (size_t d = 0; d < fc.rows.size(); ++d) {
        double delta = fc.rows[d].mu_K - baseline.rows[d].mu_K;
        if (d + 1 == fc.rows.size()) end_delta = delta;
        csv << y << ',' << format_date(fc.rows[d].date) << ',' << format_double(fc.rows[d].mu_K)
            << ',' << format_double(delta) << "\n";
      }
      variants.push_back(
          {{"cutting_year", y}, {"mu_K_end", fc.rows.back().mu_K}, {"delta_end", end_delta}});
      write_output(out, "forecast_cut" + std::to_string(y) + ".csv", write_forecast_csv(fc),
                   manifest.run_id);
    }
    report["axis"] = "cutting_year";
    report["baseline_cutting_year"] = study.cfg.cutting_year;
    report["variants"] = variants;
    write_output(out, "sensitivity_cutting.csv", csv.str(), manifest.run_id);
  } else {
    PopulationForecast wei = run_variant(study.cfg, Family::weibull);
    PopulationForecast lgn = run_variant(study.cfg, Family::lognormal);
    std::ostringstream csv;
    csv << "date,mu_K_weibull,mu_K_lognormal,delta\n";
    for (size_t d = 0; d < wei.rows.size(); ++d) {
      csv << format_date(wei.rows[d].date) << ',' << format_double(wei.rows[d].mu_K) << ','
          << format_double(lgn.rows[d].mu_K) << ','
          << format_double(lgn.rows[d].mu_K - wei.rows[d].mu_K) << "\n";
    }
    write_output(out, "sensitivity_family.csv", csv.str(), manifest.run_id);
    write_output(out, "forecast_weibull.csv", write_forecast_csv(wei), manifest.run_id);
    write_output(out, "forecast_lognormal.csv", write_forecast_csv(lgn), manifest.run_id);
    report["axis"] = "family";
    report["mu_K_end_weibull"] = wei.rows.back().mu_K;
    report["mu_K_end_lognormal"] = lgn.rows.back().mu_K;
  }
  write_output(out, "sensitivity.json", report.dump(2) + "\n", manifest.run_id);
  write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const CommonArgs& args, const std::string& scenario_path, int coverage_reps) {
  std::string scenario_text = read_file(scenario_path);
  auto kv = parse_config_text(scenario_text);
  FleetScenario sc = scenario_from_map(kv);
  if (args.seed) sc.seed = *args.seed;
  if (args.strict && !args.seed) throw DataError("--seed is required in --strict mode");

  GeneratedFleet fleet = generate_fleet(sc);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.input_digests["scenario"] = digest_hex(scenario_text);
  manifest.config_hash = digest_hex(scenario_text);
  manifest.seed = sc.seed;
  manifest.seeded = true;
  manifest.finalize();

  fs::path out(args.out_dir);
  write_output(out, "fleet.csv", write_fleet_csv(fleet.records), manifest.run_id);

  json info;
  info["groups"] = json::object();
  for (const auto& g : sc.groups) {
    info["groups"][g.name] = {{"count", g.count}, {"family", family_name(g.family)}};
  }
  info["observable_units"] = fleet.records.size();
  info["discarded_unobservable"] = fleet.discarded_unobservable;
  write_output(out, "fleet_summary.json", info.dump(2) + "\n", manifest.run_id);

  if (coverage_reps > 0) {
    // Coverage studies need one shared truth across groups.
    for (const auto& g : sc.groups) {
      if (g.family != sc.groups.front().family || g.params.mu != sc.groups.front().params.mu ||
          g.params.sigma != sc.groups.front().params.sigma) {
        throw DataError("coverage study requires a homogeneous scenario (same family and "
                        "parameters in every group)");
      }
    }
    const auto& tp = sc.groups.front().params;
    CoverageReport report;
    report.mle =
        mle_bias_study(sc, std::exp(tp.mu), 1.0 / tp.sigma, coverage_reps, sc.seed, args.jobs);
    report.individual =
        individual_coverage_study(sc, std::min(coverage_reps, 50), 10, 200, 0.90, sc.seed,
                                  args.jobs);
    ArtifactStamp stamp{manifest.run_id, manifest.config_hash, "", kToolVersion};
    write_output(out, "coverage.json", coverage_report_to_json(report, stamp), manifest.run_id);
  }
  write_output(out, "manifest.json", manifest.to_json(), manifest.run_id);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fleet lifetime fitting and failure forecasting"};
  app.require_subcommand(1);

  CommonArgs common;
  common.jobs = -1;  // resolved after parse so the env fallback applies

  std::string family_arg, levels_text = "0.90,0.95", law_name, fit_path, ens_path;
  std::string pseudo_freeze, cutting_years, scenario_path, seed_text;
  int replicates = 0, horizon_months = 0, coverage_reps = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    if (needs_data) {
      cmd->add_option("--data", common.data_path, "fleet CSV path")->required();
      cmd->add_option("--config", common.config_path, "study config path")->required();
    }
    cmd->add_option("--out", common.out_dir, "output directory")->required();
    cmd->add_option("--seed", seed_text, "master RNG seed");
    cmd->add_option("--jobs", common.jobs, "worker thread count (FLEETLIFE_THREADS fallback)");
    cmd->add_flag("--strict", common.strict, "require --seed on randomized commands");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit lifetime models and export reports");
  add_common(fit, true);
  fit->add_option("--family", family_arg, "weibull | lognormal | both");

  CLI::App* boot = app.add_subcommand("bootstrap", "random weighted likelihood bootstrap");
  add_common(boot, true);
  boot->add_option("--fit", fit_path, "fit artifact (fit_<family>.json)")->required();
  boot->add_option("--replicates", replicates, "bootstrap replicates B");
  boot->add_option("--law", law_name, "weight law: gamma1|gamma05|gamma2|betasqrt");

  CLI::App* pred = app.add_subcommand("predict", "individual and population predictions");
  add_common(pred, true);
  pred->add_option("--fit", fit_path, "fit artifact")->required();
  pred->add_option("--ensemble", ens_path, "bootstrap ensemble artifact")->required();
  pred->add_option("--level", levels_text, "interval levels, e.g. 0.90,0.95");
  pred->add_option("--horizon-months", horizon_months, "forecast horizon in months");

  CLI::App* back = app.add_subcommand("backtest", "refit at an earlier freeze and check holdout");
  add_common(back, true);
  back->add_option("--pseudo-freeze", pseudo_freeze, "earlier data-freeze date")->required();
  back->add_option("--replicates", replicates, "bootstrap replicates B");
  back->add_option("--level", levels_text, "interval level");

  CLI::App* sens = app.add_subcommand("sensitivity", "perturb model assumptions");
  add_common(sens, true);
  sens->add_option("--family", family_arg, "family axis when 'both'; else fixed family");
  sens->add_option("--cutting-years", cutting_years, "comma list of Old/New cut years");
  sens->add_option("--replicates", replicates, "bootstrap replicates per variant");
  sens->add_option("--level", levels_text, "interval levels");
  sens->add_option("--horizon-months", horizon_months, "forecast horizon in months");

  CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic fleet from a scenario");
  add_common(sim, false);
  sim->add_option("--scenario", scenario_path, "scenario config path")->required();
  sim->add_option("--coverage-reps", coverage_reps, "run a coverage study with this many reps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1
  }

  try {
    if (!seed_text.empty()) common.seed = std::uint64_t(std::stoull(seed_text));
    if (common.jobs <= 0) common.jobs = default_jobs();
    if (fit->parsed()) return cmd_fit(common, family_arg);
    if (boot->parsed()) return cmd_bootstrap(common, fit_path, replicates, law_name);
    if (pred->parsed()) return cmd_predict(common, fit_path, ens_path, levels_text, horizon_months);
    if (back->parsed()) return cmd_backtest(common, pseudo_freeze, replicates, levels_text);
    if (sens->parsed()) {
      return cmd_sensitivity(common, family_arg, cutting_years, replicates, levels_text,
                             horizon_months);
    }
    if (sim->parsed()) return cmd_simulate(common, scenario_path, coverage_reps);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const DataError& e) {
    json err = {{"error", {{"type", "data"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    json err = {{"error", {{"type", "data"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    json err = {{"error", {{"type", "numerical"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
}
