#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fleetlife/dates.hpp"

namespace fleetlife {

/// One fleet CSV row. Canonical header:
///   serial,manufacturer,install_date,fail_date,insulation,cooling
/// Empty fail_date means the unit is still in service.
struct RawRecord {
  std::string serial;
  std::string manufacturer;
  Date install_date;
  std::optional<Date> fail_date;
  std::string insulation;  // d55 | d65 | unknown
  std::string cooling;     // NINE | NIFE | FIFE | unknown
};

struct ParsedFleet {
  std::vector<RawRecord> records;
  std::vector<std::string> warnings;
};

ParsedFleet parse_fleet_csv(const std::string& text);
std::string write_fleet_csv(const std::vector<RawRecord>& records);

/// Derived age data for one unit. age is the failure age when delta=1,
/// the censoring age when delta=0. nu=0 marks a left-truncated unit with
/// entry age tau_L.
struct LifetimeObservation {
  std::string serial;
  double age = 0.0;
  int delta = 0;         // 1 = failed, 0 = censored
  int nu = 1;            // 0 = truncated, 1 = not truncated
  double tau_L = 0.0;    // meaningful only when nu == 0
  std::map<std::string, std::string> covariates;  // manufacturer, insulation, cooling
  std::string group;
  bool excluded_from_fit = false;
  std::string exclusion_reason;
};

struct GroupMergeRule {
  std::vector<std::string> sources;
  std::string target;
};

/// Study-level knobs. Read from a flat key=value config file; every key
/// matches a field name here.
struct StudyConfig {
  Date data_freeze;
  Date truncation_epoch{1980, 1, 1};
  int cutting_year = 1987;
  std::optional<double> early_failure_exclusion_years;
  std::vector<GroupMergeRule> group_merge_rules = {
      {{"MC_New", "ME_New", "Other_New"}, "MC.ME.Other_New"}};
  std::vector<std::string> fit_exclusions;
  std::map<std::string, std::string> prediction_reassignments;
};

struct DerivedData {
  std::vector<LifetimeObservation> observations;
  int dropped_unobservable = 0;  // installed and failed before the epoch
  std::vector<std::string> warnings;
};

/// Turn raw records into LTRC observations relative to the freeze date
/// and truncation epoch. Units that failed before the epoch were never
/// observable and are dropped (counted).
DerivedData derive_observations(const std::vector<RawRecord>& records, const StudyConfig& cfg);

/// Assign fitting-group labels: manufacturer x Old/New by install year,
/// then merge rules, fit exclusions, and prediction reassignments.
/// Requires the install dates again to read the install year.
void stratify(std::vector<LifetimeObservation>& obs, const std::vector<RawRecord>& records,
              const StudyConfig& cfg);

/// Observation CSV (derived data export); parse(write(x)) == x exactly.
std::string write_observations_csv(const std::vector<LifetimeObservation>& obs);
std::vector<LifetimeObservation> parse_observations_csv(const std::string& text);

/// Flat key=value config text -> key/value map ('#' comments allowed).
std::map<std::string, std::string> parse_config_text(const std::string& text);

StudyConfig study_config_from_map(const std::map<std::string, std::string>& kv);

/// Resolve the group whose fitted parameters predict this unit:
/// the unit's own group unless a prediction reassignment redirects it.
std::string prediction_group(const StudyConfig& cfg, const std::string& group);

}  // namespace fleetlife
