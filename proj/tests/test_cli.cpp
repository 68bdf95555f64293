#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "fleetlife/data.hpp"
#include "fleetlife/simulation.hpp"
#include "fleetlife/util.hpp"

using namespace fleetlife;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;

  Workspace() {
    root = fs::temp_directory_path() /
           ("fleetlife_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }

  fs::path file(const std::string& name, const std::string& contents) const {
    fs::path p = root / name;
    write_file(p.string(), contents);
    return p;
  }
};

int run_cli(const std::string& args) {
  std::string cmd = std::string(FLEETLIFE_BIN) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

int run_cli_capture(const std::string& args, const fs::path& stderr_file) {
  std::string cmd =
      std::string(FLEETLIFE_BIN) + " " + args + " 2>" + stderr_file.string() + " >/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kConfig =
    "data_freeze = 2008-03-01\n"
    "truncation_epoch = 1980-01-01\n"
    "cutting_year = 1987\n"
    "stratum.Old.groups = MB_Old,MC_Old\n"
    "stratum.Old.formula = 1\n"
    "stratum.New.groups = MA_New\n"
    "stratum.New.formula = 1\n"
    "replicates = 120\n"
    "horizon_months = 24\n";

std::string small_fleet_csv() {
  FleetScenario sc = reference_scenario_fleet(31415);
  // Shrink for test speed; keep the stratification shape.
  for (auto& g : sc.groups) g.count = g.count / 2;
  GeneratedFleet fleet = generate_fleet(sc);
  return write_fleet_csv(fleet.records);
}

// Byte-compare all regular files in two directories, skipping the manifests
// (their timestamps legitimately differ).
bool outputs_identical(const fs::path& a, const fs::path& b) {
  std::map<std::string, std::string> da, db;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
      da[fs::relative(entry.path(), a).string()] = read_file(entry.path().string());
    }
  }
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file() && entry.path().filename() != "manifest.json") {
      db[fs::relative(entry.path(), b).string()] = read_file(entry.path().string());
    }
  }
  return !da.empty() && da == db;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run_cli("definitely-not-a-command") == 1);
  CHECK(run_cli("fit") == 1);  // missing required flags
}

TEST_CASE("data errors exit 2 with machine-readable json") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto bad = ws.file("bad.csv", "not,a,fleet\n1,2,3\n");
  auto err = ws.root / "err.txt";
  int code = run_cli_capture("fit --data " + bad.string() + " --config " + cfg.string() +
                                 " --out " + (ws.root / "out").string(),
                             err);
  CHECK(code == 2);
  std::string text = read_file(err.string());
  CHECK(text.find("\"error\"") != std::string::npos);
  CHECK(text.find("\"type\":\"data\"") != std::string::npos);
}

TEST_CASE("strict mode requires a seed") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", small_fleet_csv());
  auto out = ws.root / "fit";
  REQUIRE(run_cli("fit --data " + data.string() + " --config " + cfg.string() + " --out " +
                  out.string()) == 0);
  int code = run_cli("bootstrap --data " + data.string() + " --config " + cfg.string() +
                     " --fit " + (out / "fit_weibull.json").string() + " --out " +
                     (ws.root / "b").string() + " --strict --replicates 100");
  CHECK(code == 2);
}

TEST_CASE("simulate is deterministic and echoes the scenario") {
  Workspace ws;
  auto scenario = ws.file("scn",
                          "seed = 77\n"
                          "truncation_epoch = 1980-01-01\n"
                          "data_freeze = 2008-03-01\n"
                          "group.MA.eta = 30\n"
                          "group.MA.beta = 5.5\n"
                          "group.MA.count = 120\n"
                          "group.MA.install_lo = 1988-01-01\n"
                          "group.MA.install_hi = 2005-01-01\n");
  REQUIRE(run_cli("simulate --scenario " + scenario.string() + " --out " +
                  (ws.root / "s1").string()) == 0);
  REQUIRE(run_cli("simulate --scenario " + scenario.string() + " --out " +
                  (ws.root / "s2").string()) == 0);
  CHECK(outputs_identical(ws.root / "s1", ws.root / "s2"));
  CHECK(fs::exists(ws.root / "s1" / "fleet.csv"));
  std::string manifest = read_file((ws.root / "s1" / "manifest.json").string());
  CHECK(manifest.find("scenario") != std::string::npos);
  CHECK(manifest.find("\"seed\": 77") != std::string::npos);

  // A different seed changes the fleet.
  REQUIRE(run_cli("simulate --scenario " + scenario.string() + " --seed 78 --out " +
                  (ws.root / "s3").string()) == 0);
  CHECK_FALSE(outputs_identical(ws.root / "s1", ws.root / "s3"));
}

TEST_CASE("full pipeline produces the documented artifacts") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", small_fleet_csv());
  auto fit_dir = ws.root / "fit";
  auto boot_dir = ws.root / "boot";
  auto pred_dir = ws.root / "pred";

  REQUIRE(run_cli("fit --data " + data.string() + " --config " + cfg.string() + " --out " +
                  fit_dir.string() + " --family both") == 0);
  CHECK(fs::exists(fit_dir / "fit_weibull.json"));
  CHECK(fs::exists(fit_dir / "fit_lognormal.json"));
  CHECK(fs::exists(fit_dir / "groups_weibull.json"));
  CHECK(fs::exists(fit_dir / "summary.json"));
  CHECK(fs::exists(fit_dir / "nonparametric_MA_New.csv"));
  CHECK(fs::exists(fit_dir / "ppoints_MA_New_weibull.csv"));

  REQUIRE(run_cli("bootstrap --data " + data.string() + " --config " + cfg.string() + " --fit " +
                  (fit_dir / "fit_weibull.json").string() + " --out " + boot_dir.string() +
                  " --seed 42 --replicates 120") == 0);
  CHECK(fs::exists(boot_dir / "ensemble_weibull.json"));

  REQUIRE(run_cli("predict --data " + data.string() + " --config " + cfg.string() + " --fit " +
                  (fit_dir / "fit_weibull.json").string() + " --ensemble " +
                  (boot_dir / "ensemble_weibull.json").string() + " --out " + pred_dir.string() +
                  " --seed 43 --level 0.90,0.95") == 0);
  CHECK(fs::exists(pred_dir / "predictions.csv"));
  CHECK(fs::exists(pred_dir / "plot_individual.csv"));
  CHECK(fs::exists(pred_dir / "forecast_combined.csv"));
  CHECK(fs::exists(pred_dir / "forecast_stratum_Old.csv"));
  CHECK(fs::exists(pred_dir / "forecast_stratum_New.csv"));
  CHECK(fs::exists(pred_dir / "forecast_mfr_MA.csv"));

  // Stale-artifact detection: changing the config invalidates the artifacts.
  auto cfg2 = ws.file("cfg2", std::string(kConfig) + "horizon_months = 12\n");
  CHECK(run_cli("predict --data " + data.string() + " --config " + cfg2.string() + " --fit " +
                (fit_dir / "fit_weibull.json").string() + " --ensemble " +
                (boot_dir / "ensemble_weibull.json").string() + " --out " +
                (ws.root / "stale").string() + " --seed 43") == 2);
}

TEST_CASE("group with zero failures in fit scope exits nonzero naming it") {
  Workspace ws;
  // Two censored-only MB_Old units alongside healthy MA_New data.
  FleetScenario sc = reference_scenario_fleet(5555);
  sc.groups.erase(sc.groups.begin() + 1, sc.groups.end());  // keep MA only
  GeneratedFleet fleet = generate_fleet(sc);
  auto records = fleet.records;
  RawRecord extra;
  extra.serial = "MBX-1";
  extra.manufacturer = "MB";
  extra.install_date = Date{1960, 1, 1};
  extra.insulation = "d55";
  extra.cooling = "NINE";
  records.push_back(extra);
  extra.serial = "MBX-2";
  records.push_back(extra);

  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", write_fleet_csv(records));
  auto err = ws.root / "err.txt";
  int code = run_cli_capture("fit --data " + data.string() + " --config " + cfg.string() +
                                 " --out " + (ws.root / "out").string(),
                             err);
  CHECK(code == 3);
  CHECK(read_file(err.string()).find("Old") != std::string::npos);
}

TEST_CASE("pipeline determinism across runs and job counts") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", small_fleet_csv());

  auto run_pipeline = [&](const std::string& tag, int jobs) {
    fs::path base = ws.root / tag;
    std::string j = " --jobs " + std::to_string(jobs);
    REQUIRE(run_cli("fit --data " + data.string() + " --config " + cfg.string() + " --out " +
                    (base / "fit").string() + j) == 0);
    REQUIRE(run_cli("bootstrap --data " + data.string() + " --config " + cfg.string() +
                    " --fit " + (base / "fit" / "fit_weibull.json").string() + " --out " +
                    (base / "boot").string() + " --seed 7 --replicates 100" + j) == 0);
    REQUIRE(run_cli("predict --data " + data.string() + " --config " + cfg.string() + " --fit " +
                    (base / "fit" / "fit_weibull.json").string() + " --ensemble " +
                    (base / "boot" / "ensemble_weibull.json").string() + " --out " +
                    (base / "pred").string() + " --seed 9 --horizon-months 12" + j) == 0);
    return base;
  };
  fs::path a = run_pipeline("a", 1);
  fs::path b = run_pipeline("b", 2);
  CHECK(outputs_identical(a, b));
}

TEST_CASE("backtest emits the holdout comparison") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", small_fleet_csv());
  auto out = ws.root / "bt";
  REQUIRE(run_cli("backtest --data " + data.string() + " --config " + cfg.string() + " --out " +
                  out.string() + " --pseudo-freeze 1997-01-01 --seed 5 --replicates 120 "
                  "--level 0.90") == 0);
  CHECK(fs::exists(out / "backtest.csv"));
  std::string report = read_file((out / "backtest.json").string());
  CHECK(report.find("fraction_covered") != std::string::npos);
  CHECK(report.find("entrants") != std::string::npos);

  // Degenerate window: pseudo freeze equals the freeze date.
  auto out2 = ws.root / "bt2";
  REQUIRE(run_cli("backtest --data " + data.string() + " --config " + cfg.string() + " --out " +
                  out2.string() + " --pseudo-freeze 2008-03-01 --seed 5") == 0);
  CHECK(read_file((out2 / "backtest.json").string()).find("degenerate") != std::string::npos);

  // Pseudo freeze before the epoch is a data error.
  CHECK(run_cli("backtest --data " + data.string() + " --config " + cfg.string() + " --out " +
                (ws.root / "bt3").string() + " --pseudo-freeze 1979-01-01 --seed 5") == 2);
}

TEST_CASE("sensitivity: cutting years produce one variant per year") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", small_fleet_csv());
  auto out = ws.root / "sens";
  REQUIRE(run_cli("sensitivity --data " + data.string() + " --config " + cfg.string() +
                  " --out " + out.string() +
                  " --cutting-years 1986,1987,1988 --seed 3 --replicates 100 "
                  "--horizon-months 12 --level 0.90") == 0);
  CHECK(fs::exists(out / "forecast_cut1986.csv"));
  CHECK(fs::exists(out / "forecast_cut1987.csv"));
  CHECK(fs::exists(out / "forecast_cut1988.csv"));
  std::string csv = read_file((out / "sensitivity_cutting.csv").string());
  // The identity perturbation (baseline year) has zero deltas everywhere.
  for (const auto& line : split(csv, '\n')) {
    if (line.rfind("1987,", 0) == 0) {
      CHECK(line.substr(line.rfind(',') + 1) == "0");
    }
  }
  // Cutting year outside the install range is a data error.
  CHECK(run_cli("sensitivity --data " + data.string() + " --config " + cfg.string() + " --out " +
                (ws.root / "sens2").string() + " --cutting-years 1890 --seed 3") == 2);
}

TEST_CASE("sensitivity: family axis reports both curves") {
  Workspace ws;
  auto cfg = ws.file("cfg", kConfig);
  auto data = ws.file("fleet.csv", small_fleet_csv());
  auto out = ws.root / "fam";
  REQUIRE(run_cli("sensitivity --data " + data.string() + " --config " + cfg.string() +
                  " --out " + out.string() +
                  " --family both --seed 3 --replicates 100 --horizon-months 12 "
                  "--level 0.90") == 0);
  CHECK(fs::exists(out / "sensitivity_family.csv"));
  CHECK(fs::exists(out / "forecast_weibull.csv"));
  CHECK(fs::exists(out / "forecast_lognormal.csv"));
}
