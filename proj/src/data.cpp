#include "fleetlife/data.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fleetlife/util.hpp"

namespace fleetlife {

namespace {

const char* kFleetHeader = "serial,manufacturer,install_date,fail_date,insulation,cooling";

std::string normalize_insulation(const std::string& raw, int row, std::vector<std::string>& warnings) {
  std::string v = to_lower(trim(raw));
  if (v == "d55" || v == "d65" || v == "unknown") return v;
  warnings.push_back("row " + std::to_string(row) + ": unknown insulation code '" + trim(raw) +
                     "' mapped to \"unknown\"");
  return "unknown";
}

std::string normalize_cooling(const std::string& raw, int row, std::vector<std::string>& warnings) {
  std::string v = to_lower(trim(raw));
  if (v == "nine" || v == "nife" || v == "fife") {
    std::string up = v;
    for (auto& c : up) c = char(std::toupper(static_cast<unsigned char>(c)));
    return up;
  }
  if (v == "unknown") return "unknown";
  warnings.push_back("row " + std::to_string(row) + ": unknown cooling code '" + trim(raw) +
                     "' mapped to \"unknown\"");
  return "unknown";
}

}  // namespace

ParsedFleet parse_fleet_csv(const std::string& text) {
  ParsedFleet out;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  bool have_header = false;
  std::set<std::string> seen_serials;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    if (!have_header) {
      if (trim(to_lower(line)) != kFleetHeader) {
        throw DataError("row 1: expected header '" + std::string(kFleetHeader) + "'");
      }
      have_header = true;
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != 6) {
      throw DataError("row " + std::to_string(row) + ": expected 6 fields, got " +
                      std::to_string(fields.size()));
    }
    RawRecord rec;
    rec.serial = trim(fields[0]);
    if (rec.serial.empty()) throw DataError("row " + std::to_string(row) + ": empty serial");
    if (!seen_serials.insert(rec.serial).second) {
      throw DataError("row " + std::to_string(row) + ": duplicate serial '" + rec.serial + "'");
    }
    rec.manufacturer = trim(fields[1]);
    if (rec.manufacturer.empty()) {
      throw DataError("row " + std::to_string(row) + ": empty manufacturer");
    }
    try {
      rec.install_date = parse_date(trim(fields[2]));
      std::string fd = trim(fields[3]);
      if (!fd.empty()) rec.fail_date = parse_date(fd);
    } catch (const std::exception& e) {
      throw DataError("row " + std::to_string(row) + ": " + e.what());
    }
    if (rec.fail_date && *rec.fail_date < rec.install_date) {
      throw DataError("row " + std::to_string(row) + ": fail_date precedes install_date for serial '" +
                      rec.serial + "'");
    }
    rec.insulation = normalize_insulation(fields[4], row, out.warnings);
    rec.cooling = normalize_cooling(fields[5], row, out.warnings);
    out.records.push_back(std::move(rec));
  }
  if (!have_header) throw DataError("missing header row");
  return out;
}

std::string write_fleet_csv(const std::vector<RawRecord>& records) {
  std::ostringstream out;
  out << kFleetHeader << "\n";
  for (const auto& r : records) {
    out << r.serial << ',' << r.manufacturer << ',' << format_date(r.install_date) << ','
        << (r.fail_date ? format_date(*r.fail_date) : std::string()) << ',' << r.insulation << ','
        << r.cooling << "\n";
  }
  return out.str();
}

DerivedData derive_observations(const std::vector<RawRecord>& records, const StudyConfig& cfg) {
  if (cfg.truncation_epoch > cfg.data_freeze) {
    throw DataError("truncation_epoch is after data_freeze");
  }
  DerivedData out;
  for (const auto& r : records) {
    if (r.install_date > cfg.data_freeze) {
      throw DataError("serial '" + r.serial + "' installed after the data-freeze date");
    }
    if (r.fail_date && *r.fail_date < cfg.truncation_epoch) {
      ++out.dropped_unobservable;  // never observable under the record-keeping rule
      continue;
    }
    LifetimeObservation obs;
    obs.serial = r.serial;
    obs.covariates = {{"manufacturer", r.manufacturer},
                      {"insulation", r.insulation},
                      {"cooling", r.cooling}};
    if (r.fail_date) {
      obs.delta = 1;
      obs.age = years_between(r.install_date, *r.fail_date);
    } else {
      obs.delta = 0;
      obs.age = years_between(r.install_date, cfg.data_freeze);
    }
    if (r.install_date < cfg.truncation_epoch) {
      obs.nu = 0;
      obs.tau_L = years_between(r.install_date, cfg.truncation_epoch);
    } else {
      obs.nu = 1;
      obs.tau_L = 0.0;
    }
    if (cfg.early_failure_exclusion_years && obs.delta == 1 &&
        obs.age < *cfg.early_failure_exclusion_years) {
      obs.excluded_from_fit = true;
      obs.exclusion_reason = "early_failure";
    }
    out.observations.push_back(std::move(obs));
  }
  if (out.dropped_unobservable > 0) {
    out.warnings.push_back(std::to_string(out.dropped_unobservable) +
                           " unit(s) installed and failed before the truncation epoch dropped");
  }
  int zero_age = 0;
  for (const auto& o : out.observations) zero_age += o.delta == 0 && o.age == 0.0;
  if (zero_age > 0) {
    out.warnings.push_back(std::to_string(zero_age) +
                           " unit(s) censored at age 0 (installed on the data-freeze date)");
  }
  return out;
}

void stratify(std::vector<LifetimeObservation>& obs, const std::vector<RawRecord>& records,
              const StudyConfig& cfg) {
  std::map<std::string, int> install_year;
  for (const auto& r : records) install_year[r.serial] = r.install_date.year;

  std::map<std::string, std::string> merge;
  for (const auto& rule : cfg.group_merge_rules) {
    for (const auto& src : rule.sources) merge[src] = rule.target;
  }
  std::set<std::string> excluded(cfg.fit_exclusions.begin(), cfg.fit_exclusions.end());

  for (auto& o : obs) {
    auto it = install_year.find(o.serial);
    if (it == install_year.end()) {
      throw DataError("serial '" + o.serial + "' has no raw record for stratification");
    }
    std::string label = o.covariates.at("manufacturer") +
                        (it->second < cfg.cutting_year ? "_Old" : "_New");
    if (auto m = merge.find(label); m != merge.end()) label = m->second;
    o.group = label;
    if (excluded.count(label)) {
      o.excluded_from_fit = true;
      if (o.exclusion_reason.empty()) o.exclusion_reason = "group_excluded";
      if (o.delta == 0 && !cfg.prediction_reassignments.count(label)) {
        throw DataError("group '" + label +
                        "' is excluded from fitting but has no prediction reassignment (serial '" +
                        o.serial + "')");
      }
    }
  }
}

std::string prediction_group(const StudyConfig& cfg, const std::string& group) {
  auto it = cfg.prediction_reassignments.find(group);
  return it == cfg.prediction_reassignments.end() ? group : it->second;
}

std::string write_observations_csv(const std::vector<LifetimeObservation>& obs) {
  std::ostringstream out;
  out << "serial,group,age,delta,nu,tau_L,manufacturer,insulation,cooling,excluded_from_fit,"
         "exclusion_reason\n";
  for (const auto& o : obs) {
    out << o.serial << ',' << o.group << ',' << format_double(o.age) << ',' << o.delta << ','
        << o.nu << ',' << (o.nu == 0 ? format_double(o.tau_L) : std::string()) << ','
        << o.covariates.at("manufacturer") << ',' << o.covariates.at("insulation") << ','
        << o.covariates.at("cooling") << ',' << (o.excluded_from_fit ? 1 : 0) << ','
        << o.exclusion_reason << "\n";
  }
  return out.str();
}

std::vector<LifetimeObservation> parse_observations_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<LifetimeObservation> out;
  int row = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line[0] == '#') continue;
    if (!have_header) {
      have_header = true;
      continue;
    }
    auto f = split(line, ',');
    if (f.size() != 11) {
      throw DataError("observations row " + std::to_string(row) + ": expected 11 fields");
    }
    LifetimeObservation o;
    o.serial = f[0];
    o.group = f[1];
    o.age = parse_double(f[2]);
    o.delta = int(parse_long(f[3]));
    o.nu = int(parse_long(f[4]));
    o.tau_L = o.nu == 0 ? parse_double(f[5]) : 0.0;
    o.covariates = {{"manufacturer", f[6]}, {"insulation", f[7]}, {"cooling", f[8]}};
    o.excluded_from_fit = parse_long(f[9]) != 0;
    o.exclusion_reason = f[10];
    out.push_back(std::move(o));
  }
  return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto pos = stripped.find('=');
    if (pos == std::string::npos) {
      throw DataError("config line " + std::to_string(row) + ": expected key = value");
    }
    std::string key = trim(stripped.substr(0, pos));
    std::string value = trim(stripped.substr(pos + 1));
    if (key.empty()) throw DataError("config line " + std::to_string(row) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw DataError("config line " + std::to_string(row) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

StudyConfig study_config_from_map(const std::map<std::string, std::string>& kv) {
  StudyConfig cfg;
  auto it = kv.find("data_freeze");
  if (it == kv.end()) throw DataError("config: missing required key 'data_freeze'");
  cfg.data_freeze = parse_date(it->second);
  if ((it = kv.find("truncation_epoch")) != kv.end()) cfg.truncation_epoch = parse_date(it->second);
  if ((it = kv.find("cutting_year")) != kv.end()) cfg.cutting_year = int(parse_long(it->second));
  if ((it = kv.find("early_failure_exclusion_years")) != kv.end() && !it->second.empty()) {
    cfg.early_failure_exclusion_years = parse_double(it->second);
  }
  if ((it = kv.find("group_merge_rules")) != kv.end()) {
    cfg.group_merge_rules.clear();
    if (!it->second.empty() && to_lower(it->second) != "none") {
      for (const auto& rule_text : split(it->second, ';')) {
        auto arrow = rule_text.find("->");
        if (arrow == std::string::npos) {
          throw DataError("group_merge_rules: expected 'A+B->Target' in '" + rule_text + "'");
        }
        GroupMergeRule rule;
        for (const auto& s : split(rule_text.substr(0, arrow), '+')) rule.sources.push_back(trim(s));
        rule.target = trim(rule_text.substr(arrow + 2));
        if (rule.target.empty() || rule.sources.empty()) {
          throw DataError("group_merge_rules: empty side in '" + rule_text + "'");
        }
        cfg.group_merge_rules.push_back(std::move(rule));
      }
    }
  }
  if ((it = kv.find("fit_exclusions")) != kv.end() && !it->second.empty()) {
    for (const auto& g : split(it->second, ',')) cfg.fit_exclusions.push_back(trim(g));
  }
  if ((it = kv.find("prediction_reassignments")) != kv.end() && !it->second.empty()) {
    for (const auto& pair_text : split(it->second, ';')) {
      auto arrow = pair_text.find("->");
      if (arrow == std::string::npos) {
        throw DataError("prediction_reassignments: expected 'From->To' in '" + pair_text + "'");
      }
      cfg.prediction_reassignments[trim(pair_text.substr(0, arrow))] =
          trim(pair_text.substr(arrow + 2));
    }
  }
  if (cfg.truncation_epoch > cfg.data_freeze) {
    throw DataError("config: truncation_epoch is after data_freeze");
  }
  return cfg;
}

}  // namespace fleetlife
