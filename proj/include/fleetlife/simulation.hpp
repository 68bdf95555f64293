#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fleetlife/data.hpp"
#include "fleetlife/distributions.hpp"
#include "fleetlife/model.hpp"

namespace fleetlife {

struct CategoryMix {
  std::vector<std::pair<std::string, double>> levels;  // level -> probability

  std::string draw(double u) const;
};

struct GroupScenario {
  std::string name;
  std::string manufacturer;
  Family family = Family::weibull;
  LocationScaleParams params;
  int count = 0;       // units generated before the observability filter
  Date install_lo, install_hi;
  CategoryMix insulation{{{"d65", 1.0}}};
  CategoryMix cooling{{{"NINE", 1.0}}};
};

/// Fleet generator with known truth: staggered entry over calendar
/// spans, real left truncation induced by discarding units that failed
/// before the epoch, and right censoring at the freeze date.
struct FleetScenario {
  std::vector<GroupScenario> groups;
  Date truncation_epoch{1980, 1, 1};
  Date data_freeze{2008, 3, 1};
  std::uint64_t seed = 1;
};

FleetScenario scenario_from_map(const std::map<std::string, std::string>& kv);

struct GeneratedFleet {
  std::vector<RawRecord> records;
  int discarded_unobservable = 0;
  /// True lifetime by serial, for coverage studies (never written to the
  /// fleet CSV).
  std::map<std::string, double> true_lifetimes;
  std::map<std::string, std::string> unit_groups;  // serial -> scenario group
};

GeneratedFleet generate_fleet(const FleetScenario& sc);

/// The acceptance reference scenarios.
FleetScenario reference_scenario_large(std::uint64_t seed);   // single pooled Weibull fleet
FleetScenario reference_scenario_fleet(std::uint64_t seed);   // stratified Old/New fleet
FleetScenario reference_scenario_small(std::uint64_t seed);   // small-n heavy-censoring fleet

/// Study-config / model pairing for the stratified reference fleet.
StudyConfig reference_fleet_config();
std::map<std::string, std::string> reference_fleet_config_map();

/// Single-stratum view of a generated fleet (every unit in group "All").
std::vector<LifetimeObservation> pooled_observations(const GeneratedFleet& fleet, const Date& epoch,
                                                     const Date& freeze);
ModelSpec pooled_spec(Family family);

struct MleStudyResult {
  int replications = 0;
  int aware_within_3se = 0;  // both eta and beta within 3 reported se
  int naive_eta_below_truth = 0;
  int naive_below_aware = 0;
  double aware_eta_mean = 0.0;
  double naive_eta_mean = 0.0;
  int failed_replications = 0;
};

/// Repeated-fit study on the pooled scenario: truncation-aware vs
/// truncation-ignoring estimates against the known truth.
MleStudyResult mle_bias_study(const FleetScenario& sc, double true_eta, double true_beta,
                              int replications, std::uint64_t seed, int jobs);

struct IndividualCoverageResult {
  int fleets = 0;
  int units = 0;
  int naive_covered = 0;
  int calibrated_covered = 0;
  int failed_fleets = 0;

  double naive_rate() const { return units ? double(naive_covered) / units : 0.0; }
  double calibrated_rate() const { return units ? double(calibrated_covered) / units : 0.0; }
};

/// Fit + bootstrap each simulated fleet, then check whether naive and
/// calibrated intervals capture the units' true (generated) failure
/// ages. The generated lifetime of a censored unit already follows the
/// conditional law given survival to its censoring age.
IndividualCoverageResult individual_coverage_study(const FleetScenario& sc, int n_fleets,
                                                   int units_per_fleet, int B, double level,
                                                   std::uint64_t seed, int jobs);

struct PopulationCoverageResult {
  int futures = 0;
  int grid_dates = 0;
  double mean_fraction_covered = 0.0;
  double max_volkova_err = 0.0;
};

/// One stratified reference fleet: fit, bootstrap, forecast calibrated
/// bands, then simulate fresh futures from the true parameters and count
/// the grid dates whose true cumulative count stays inside the band.
PopulationCoverageResult population_coverage_study(const FleetScenario& sc, int B, int futures,
                                                   int horizon_months, double level,
                                                   std::uint64_t seed, int jobs);

/// Combined report used by the simulate command; JSON-serialized by the
/// report module.
struct CoverageReport {
  MleStudyResult mle;
  IndividualCoverageResult individual;
  PopulationCoverageResult population;
};

}  // namespace fleetlife
