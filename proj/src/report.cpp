#include "fleetlife/report.hpp"

#include <cmath>

#include <json.hpp>

#include "fleetlife/util.hpp"

namespace fleetlife {

using nlohmann::json;

namespace {

json spec_to_json(const ModelSpec& spec) {
  json strata = json::array();
  for (const auto& st : spec.strata) {
    strata.push_back({{"label", st.label},
                      {"groups", st.groups},
                      {"formula", st.formula_terms},
                      {"shape_class", st.shape_class}});
  }
  return {{"family", family_name(spec.family)}, {"strata", strata}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.family = parse_family(j.at("family").get<std::string>());
  for (const auto& st : j.at("strata")) {
    StratumSpec s;
    s.label = st.at("label").get<std::string>();
    s.groups = st.at("groups").get<std::vector<std::string>>();
    s.formula_terms = st.at("formula").get<std::vector<std::string>>();
    s.shape_class = st.at("shape_class").get<std::string>();
    spec.strata.push_back(std::move(s));
  }
  spec.validate();
  return spec;
}

json stamp_to_json(const ArtifactStamp& stamp) {
  return {{"run_id", stamp.run_id},
          {"config_hash", stamp.config_hash},
          {"data_digest", stamp.data_digest},
          {"tool_version", stamp.tool_version}};
}

ArtifactStamp stamp_from_json(const json& j) {
  ArtifactStamp s;
  s.run_id = j.value("run_id", "");
  s.config_hash = j.value("config_hash", "");
  s.data_digest = j.value("data_digest", "");
  s.tool_version = j.value("tool_version", "");
  return s;
}

}  // namespace

std::string fit_to_json(const FitResult& fit, const ArtifactStamp& stamp,
                        const std::vector<double>& wald_levels) {
  json j;
  j["artifact"] = stamp_to_json(stamp);
  j["spec"] = spec_to_json(fit.spec);
  j["loglik"] = fit.loglik;
  j["convergence"] = {{"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"cov_ok", fit.cov_ok}};
  j["n_obs"] = fit.n_obs;
  j["n_failures"] = fit.n_failures;
  j["diagnostics"] = fit.diagnostics;

  json params = json::array();
  for (size_t k = 0; k < fit.estimate.size(); ++k) {
    json p = {{"name", fit.param_names[k]}, {"estimate", fit.estimate[k]}};
    if (fit.cov_ok) p["se"] = fit.se(k);
    params.push_back(std::move(p));
  }
  j["parameters"] = params;
  if (fit.cov_ok) j["covariance"] = fit.covariance;

  if (fit.converged && fit.cov_ok) {
    json tables = json::object();
    for (double level : wald_levels) {
      json rows = json::array();
      for (const auto& row : wald_intervals(fit, level)) {
        rows.push_back({{"parameter", row.name},
                        {"mle", row.mle},
                        {"se", row.se},
                        {"lower", row.lower},
                        {"upper", row.upper}});
      }
      char key[16];
      std::snprintf(key, sizeof key, "%g", level);
      tables[key] = std::move(rows);
    }
    j["wald_intervals"] = tables;
  }
  return j.dump(2) + "\n";
}

FitResult fit_from_json(const std::string& text, ArtifactStamp* stamp) {
  json j = json::parse(text);
  FitResult fit;
  fit.spec = spec_from_json(j.at("spec"));
  fit.loglik = j.at("loglik").get<double>();
  fit.converged = j.at("convergence").at("converged").get<bool>();
  fit.iterations = j.at("convergence").at("iterations").get<int>();
  fit.cov_ok = j.at("convergence").at("cov_ok").get<bool>();
  fit.n_obs = j.at("n_obs").get<int>();
  fit.n_failures = j.at("n_failures").get<int>();
  fit.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  for (const auto& p : j.at("parameters")) {
    fit.param_names.push_back(p.at("name").get<std::string>());
    fit.estimate.push_back(p.at("estimate").get<double>());
  }
  if (fit.cov_ok) fit.covariance = j.at("covariance").get<std::vector<double>>();
  if (stamp) *stamp = stamp_from_json(j.at("artifact"));
  return fit;
}

std::string ensemble_to_json(const BootstrapEnsemble& ens, const ArtifactStamp& stamp) {
  json j;
  j["artifact"] = stamp_to_json(stamp);
  j["spec"] = spec_to_json(ens.spec);
  j["law"] = weight_law_name(ens.law);
  j["master_seed"] = ens.master_seed;
  j["requested"] = ens.requested;
  j["failed_count"] = ens.failed_count;
  j["seeds"] = ens.seeds;
  j["replicates"] = ens.replicates;
  j["base_estimate"] = ens.base_fit.estimate;
  j["base_loglik"] = ens.base_fit.loglik;
  return j.dump() + "\n";
}

BootstrapEnsemble ensemble_from_json(const std::string& text, ArtifactStamp* stamp) {
  json j = json::parse(text);
  BootstrapEnsemble ens;
  ens.spec = spec_from_json(j.at("spec"));
  ens.law = parse_weight_law(j.at("law").get<std::string>());
  ens.master_seed = j.at("master_seed").get<std::uint64_t>();
  ens.requested = j.at("requested").get<int>();
  ens.failed_count = j.at("failed_count").get<int>();
  ens.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  ens.replicates = j.at("replicates").get<std::vector<std::vector<double>>>();
  ens.base_fit.spec = ens.spec;
  ens.base_fit.estimate = j.at("base_estimate").get<std::vector<double>>();
  ens.base_fit.loglik = j.at("base_loglik").get<double>();
  ens.base_fit.converged = true;
  if (stamp) *stamp = stamp_from_json(j.at("artifact"));
  return ens;
}

std::string coverage_report_to_json(const CoverageReport& report, const ArtifactStamp& stamp) {
  json j;
  j["artifact"] = stamp_to_json(stamp);
  j["mle"] = {{"replications", report.mle.replications},
              {"failed_replications", report.mle.failed_replications},
              {"aware_within_3se", report.mle.aware_within_3se},
              {"naive_eta_below_truth", report.mle.naive_eta_below_truth},
              {"naive_below_aware", report.mle.naive_below_aware},
              {"aware_eta_mean", report.mle.aware_eta_mean},
              {"naive_eta_mean", report.mle.naive_eta_mean}};
  j["individual_intervals"] = {{"fleets", report.individual.fleets},
                               {"failed_fleets", report.individual.failed_fleets},
                               {"units", report.individual.units},
                               {"naive_coverage", report.individual.naive_rate()},
                               {"calibrated_coverage", report.individual.calibrated_rate()}};
  j["population_intervals"] = {{"futures", report.population.futures},
                               {"grid_dates", report.population.grid_dates},
                               {"mean_fraction_covered", report.population.mean_fraction_covered},
                               {"max_volkova_abs_err", report.population.max_volkova_err}};
  return j.dump(2) + "\n";
}

}  // namespace fleetlife
