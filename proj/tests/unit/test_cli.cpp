#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ucspd/error.hpp"
#include "ucspd_app/cli.hpp"
#include "ucspd_app/commands.hpp"
#include "ucspd_app/scenario.hpp"

using namespace ucspd;
using namespace ucspd::app;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = UCSPD_SCENARIO_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_root() {
  return fs::temp_directory_path() / ("ucspd_test_" + std::to_string(::getpid()));
}

struct RemoveScratch {
  ~RemoveScratch() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} remove_scratch;

fs::path scratch(const std::string& name) {
  auto dir = scratch_root() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ucspd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return {};
}

std::string l2_with(const std::string& from, const std::string& to) {
  auto text = slurp(kScenarios / "paper_l2.scenario");
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("bundled paper_l2 scenario parses and echoes") {
  const auto s = load_scenario(kScenarios / "paper_l2.scenario");
  CHECK(s.name == "paper_l2");
  CHECK(s.crystal.length_mm == 2.0);
  CHECK(s.crystal.tau_g_fs_per_mm == 204.3);
  CHECK(s.pump.fwhm_fs == 200.0);
  CHECK(s.pump_power_mw == 300.0);
  CHECK(s.signal.fwhm_fs == 240.0);
  CHECK(s.mean_photons_per_pulse == 0.1);
  CHECK(s.timebin.slot_spacing_fs == 800.0);
  CHECK(s.eta_internal() == Approx(0.101).epsilon(1e-12));
  CHECK(s.eta_external() == Approx(0.101 * 0.41 * 0.85 * 0.94).epsilon(1e-12));
  CHECK(s.operating_noise_cps() == Approx(800.0).epsilon(1e-12));

  // JSON is YAML, so the echo must parse back to the same scenario.
  const auto echo = to_json(s);
  CHECK(echo["crystal"]["length_mm"] == 2.0);
  CHECK(echo["detector"]["noise"]["calibration"]["cps"] == 800.0);
  const auto again = parse_scenario(echo.dump());
  CHECK(to_json(again) == echo);
  CHECK(scenario_hash(again) == scenario_hash(s));

  auto other = s;
  other.output_dir = "elsewhere";
  CHECK(scenario_hash(other) == scenario_hash(s));
  other.seed += 1;
  CHECK(scenario_hash(other) != scenario_hash(s));
}

TEST_CASE("scenario validation errors") {
  SUBCASE("empty document lists every required key") {
    const auto msg = error_of("");
    for (const auto& key : required_keys()) CHECK(msg.find(key) != std::string::npos);
  }
  SUBCASE("negative crystal length cites the crystal invariant") {
    const auto msg = error_of(l2_with("length_mm: 2", "length_mm: -2"));
    CHECK(msg.find("CrystalSpec") != std::string::npos);
    CHECK(msg.find("length_mm") != std::string::npos);
  }
  SUBCASE("unknown key names its path") {
    const auto msg = error_of(l2_with("  temperature_c: 85", "  temperature_c: 85\n  colour: red"));
    CHECK(msg.find("crystal.colour") != std::string::npos);
  }
  SUBCASE("unknown top-level section") {
    CHECK(error_of(l2_with("grid:", "grids:")).find("grids") != std::string::npos);
  }
  SUBCASE("type mismatch names its path") {
    const auto msg = error_of(l2_with("fwhm_fs: 200", "fwhm_fs: wide"));
    CHECK(msg.find("pump.fwhm_fs") != std::string::npos);
  }
  SUBCASE("negative seed") {
    CHECK(error_of(l2_with("seed: 20210102", "seed: -4")).find("seed") != std::string::npos);
  }
  SUBCASE("scenario-level constraints") {
    CHECK(error_of(l2_with("points: 24", "points: 3")).find("sweep.points") != std::string::npos);
    CHECK(error_of(l2_with("contrast: 0.982", "contrast: 1.5")).find("sweep.contrast") !=
          std::string::npos);
  }
  SUBCASE("malformed YAML") { CHECK(error_of("name: [unclosed").find("YAML") != std::string::npos); }
}

TEST_CASE("report on paper_l2") {
  const auto dir = scratch("report_l2");
  const auto r = cli({"report", (kScenarios / "paper_l2.scenario").string(), "--out", dir.string(),
                      "--quiet"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const auto report = read_json(dir / "report.json");
  CHECK(report["fwhm_fs"].get<double>() == Approx(412.0).epsilon(2.0 / 412.0));
  CHECK(report["eta_external"].get<double>() == Approx(0.0331).epsilon(0.002));
  CHECK(report["limit"].get<double>() == Approx(3.4e-5).epsilon(0.02));
  CHECK(report["visibility"].get<double>() == Approx(0.982).epsilon(0.002 / 0.982));
  CHECK(report["argmin_power_mw"].get<double>() == Approx(300.0).epsilon(0.1));
  CHECK(report["fitted_resolution_fwhm_fs"].get<double>() == Approx(412.0).epsilon(0.03));
  CHECK(report["deconv_center_to_side_ratio"].get<double>() == Approx(4.0).epsilon(0.1));

  const auto manifest = read_json(dir / "manifest.json");
  CHECK(manifest["subcommand"] == "report");
  CHECK(manifest.contains("created_utc"));

  SUBCASE("every artifact carries the scenario hash") {
    const auto hash = report["scenario_hash"].get<std::string>();
    for (const auto& entry : fs::directory_iterator(dir)) {
      CHECK_MESSAGE(slurp(entry.path()).find(hash) != std::string::npos, entry.path().string());
    }
  }

  SUBCASE("aggregation refuses a foreign artifact") {
    const auto hash = report["scenario_hash"].get<std::string>();
    CHECK_NOTHROW(aggregate_report(dir, hash));
    const auto l3 = scratch("report_l3_limits");
    run_command("limits", load_scenario(kScenarios / "paper_l3.scenario"), l3);
    fs::copy_file(l3 / "limits.json", dir / "limits.json", fs::copy_options::overwrite_existing);
    CHECK_THROWS_AS(aggregate_report(dir, hash), InvalidArgument);
  }

  SUBCASE("aggregation refuses a tampered CSV") {
    const auto hash = report["scenario_hash"].get<std::string>();
    auto text = slurp(dir / "sweep.csv");
    text.replace(text.find(hash), hash.size(), std::string(hash.size(), '0'));
    std::ofstream(dir / "sweep.csv", std::ios::binary) << text;
    CHECK_THROWS_AS(aggregate_report(dir, hash), InvalidArgument);
  }
}

TEST_CASE("reruns are byte-identical") {
  const auto scenario = (kScenarios / "paper_l1.scenario").string();
  for (const char* cmd : {"scan", "sweep", "deconv", "limits", "timebin", "resolve", "fitvis"}) {
    CAPTURE(cmd);
    const auto a = scratch(std::string("det_a_") + cmd);
    const auto b = scratch(std::string("det_b_") + cmd);
    REQUIRE(cli({cmd, "--scenario", scenario, "--out", a.string(), "--quiet"}).code == 0);
    REQUIRE(cli({cmd, "--scenario", scenario, "--out", b.string(), "--quiet"}).code == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().filename() == "manifest.json") continue;
      CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
      ++compared;
    }
    CHECK(compared >= 2);
  }

  const auto c = scratch("det_seed");
  const auto a = scratch_root() / "det_a_scan";
  REQUIRE(cli({"scan", scenario, "--out", c.string(), "--seed", "99", "--quiet"}).code == 0);
  CHECK(slurp(c / "scan.csv") != slurp(a / "scan.csv"));
}

TEST_CASE("resolve across the bundled crystals follows the length trend") {
  std::vector<double> widths, etas;
  for (const char* name : {"paper_l1", "paper_l2", "paper_l3"}) {
    const auto dir = scratch(std::string("resolve_") + name);
    const auto r = cli({"resolve", (kScenarios / (std::string(name) + ".scenario")).string(),
                        "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j == read_json(dir / "resolution.json"));
    widths.push_back(j["fwhm_fs"].get<double>());
    etas.push_back(j["eta_internal"].get<double>());
    CHECK(slurp(dir / "resolution.csv").find("t_fs,value") != std::string::npos);
  }
  CHECK(widths[0] == Approx(252.0).epsilon(2.0 / 252.0));
  CHECK(widths[1] == Approx(412.0).epsilon(2.0 / 412.0));
  CHECK(widths[2] == Approx(613.0).epsilon(2.0 / 613.0));
  CHECK(etas[0] < etas[1]);
  CHECK(etas[1] < etas[2]);
  CHECK(etas[2] - etas[1] < 0.5 * (etas[1] - etas[0]));
}

TEST_CASE("exit codes") {
  const auto scenario = (kScenarios / "paper_l2.scenario").string();
  SUBCASE("unknown subcommand prints usage") {
    const auto r = cli({"frobnicate", scenario});
    CHECK(r.code == 1);
    CHECK(r.err.find("resolve") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);
  }
  SUBCASE("missing scenario") {
    CHECK(cli({"resolve"}).code == 1);
    CHECK(cli({"resolve", "/nonexistent/x.scenario"}).code == 1);
  }
  SUBCASE("invalid scenario with JSON error report") {
    const auto dir = scratch("bad");
    std::ofstream(dir / "bad.scenario") << l2_with("length_mm: 2", "length_mm: -1");
    const auto r = cli({"resolve", (dir / "bad.scenario").string(), "--format", "json"});
    CHECK(r.code == 1);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["error"]["kind"] == "validation");
    CHECK(j["error"]["exit_code"] == 1);
  }
  SUBCASE("numerical failure") {
    const auto dir = scratch("dark");
    std::ofstream(dir / "dark.scenario")
        << l2_with("peak_counts: 1.0e6", "peak_counts: 0");
    const auto r = cli({"sweep", (dir / "dark.scenario").string(), "--out", dir.string(),
                        "--format", "json"});
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.out)["error"]["kind"] == "numerical");
  }
  SUBCASE("csv summary") {
    const auto dir = scratch("csvfmt");
    const auto r = cli({"limits", scenario, "--out", dir.string(), "--format", "csv"});
    CHECK(r.code == 0);
    CHECK(r.out.find("operating.limit_per_pulse,") != std::string::npos);
  }
  SUBCASE("installed binary") {
    const std::string cmd = std::string(UCSPD_CLI_PATH) + " frobnicate >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 1);
  }
}

TEST_CASE("fitvis and deconv read external data") {
  const auto dir = scratch("external");
  REQUIRE(cli({"sweep", (kScenarios / "paper_l2.scenario").string(), "--out", dir.string(),
               "--quiet"})
              .code == 0);
  REQUIRE(cli({"timebin", (kScenarios / "paper_l2.scenario").string(), "--out", dir.string(),
               "--quiet"})
              .code == 0);
  auto text = l2_with("  dwell_s: 1\n\ntimebin:",
                      "  dwell_s: 1\n  input_csv: sweep.csv\n\ntimebin:");
  const auto pos = text.find("  peak_counts: 1.0e5");
  text.replace(pos, 20, "  peak_counts: 1.0e5\n  input_csv: timebin_measured.csv");
  std::ofstream(dir / "external.scenario") << text;

  const auto fit = cli({"fitvis", (dir / "external.scenario").string(), "--out",
                        (dir / "fit").string()});
  REQUIRE(fit.code == 0);
  const auto j = nlohmann::json::parse(fit.out);
  CHECK(j["source"] == "sweep.csv");
  CHECK(j["fit"]["visibility"].get<double>() == Approx(0.982).epsilon(0.002 / 0.982));
  CHECK(j["residuals"].size() == 24);

  const auto dc = cli({"deconv", (dir / "external.scenario").string(), "--out",
                       (dir / "dc").string()});
  REQUIRE(dc.code == 0);
  const auto d = nlohmann::json::parse(dc.out);
  CHECK(d["peaks"].size() == 3);
  CHECK(d["settings"]["dt_fs"] == 1.0);
}
