#pragma once

#include <string>

#include "fleetlife/bootstrap.hpp"
#include "fleetlife/model.hpp"
#include "fleetlife/simulation.hpp"

namespace fleetlife {

/// Artifact metadata stamped into every JSON report.
struct ArtifactStamp {
  std::string run_id;
  std::string config_hash;
  std::string data_digest;
  std::string tool_version;
};

/// Fit report: estimates on (mu, sigma) and (eta, beta) scales, standard
/// errors, Wald intervals, loglikelihood, and the convergence block.
std::string fit_to_json(const FitResult& fit, const ArtifactStamp& stamp,
                        const std::vector<double>& wald_levels = {0.95});
FitResult fit_from_json(const std::string& text, ArtifactStamp* stamp = nullptr);

std::string ensemble_to_json(const BootstrapEnsemble& ens, const ArtifactStamp& stamp);
BootstrapEnsemble ensemble_from_json(const std::string& text, ArtifactStamp* stamp = nullptr);

std::string coverage_report_to_json(const CoverageReport& report, const ArtifactStamp& stamp);

}  // namespace fleetlife
