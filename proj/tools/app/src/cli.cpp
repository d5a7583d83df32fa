#include "ucspd_app/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "ucspd/error.hpp"
#include "ucspd_app/artifacts.hpp"
#include "ucspd_app/commands.hpp"
#include "ucspd_app/scenario.hpp"

namespace ucspd::app {
namespace {

using nlohmann::json;

enum Exit { kOk = 0, kValidation = 1, kNumerical = 2 };

const char* describe(const std::string& name) {
  if (name == "resolve") return "temporal resolution function T(t) and its FWHM";
  if (name == "scan") return "simulated pump-delay scan with a gate-width fit";
  if (name == "sweep") return "simulated phase sweep with a visibility fit";
  if (name == "timebin") return "time-bin cascade slot probabilities and waveforms";
  if (name == "limits") return "detection limit versus pump power";
  if (name == "deconv") return "Richardson-Lucy recovery of a blurred waveform";
  if (name == "fitvis") return "visibility fit of a phase sweep (simulated or from input_csv)";
  return "full pipeline and a one-file summary";
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      flatten(value, name, out);
    } else if (value.is_string()) {
      out << name << ',' << value.get<std::string>() << '\n';
    } else if (value.is_number_float()) {
      out << name << ',' << format_shortest(value.get<double>()) << '\n';
    } else if (!value.is_array()) {
      out << name << ',' << value.dump() << '\n';
    }
  }
}

int fail(int code, const std::string& message, bool as_json, std::ostream& out,
         std::ostream& err) {
  err << "error: " << message << '\n';
  if (as_json) {
    out << json{{"error",
                 {{"kind", code == kValidation ? "validation" : "numerical"},
                  {"message", message},
                  {"exit_code", code}}}}
               .dump(2)
        << '\n';
  }
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Up-conversion single-photon detector simulator", "ucspd"};
  std::string scenario_flag, positional, out_dir, format = "json";
  std::uint64_t seed = 0;
  bool quiet = false;

  app.add_option("--scenario", scenario_flag, "scenario file (YAML)");
  auto* seed_opt = app.add_option("--seed", seed, "override the scenario seed");
  app.add_option("--out", out_dir, "output directory (default: scenario output_dir)");
  app.add_option("--format", format, "stdout summary format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--quiet", quiet, "print nothing on success");
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, describe(name));
    sub->add_option("scenario", positional, "scenario file (alternative to --scenario)");
    sub->fallthrough();
  }
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  const bool as_json = format == "json";
  const std::string command = app.get_subcommands().front()->get_name();
  if (!scenario_flag.empty() && !positional.empty() && scenario_flag != positional) {
    return fail(kValidation, "scenario given twice with different paths", as_json, out, err);
  }
  const std::string path = scenario_flag.empty() ? positional : scenario_flag;
  if (path.empty()) {
    err << "error: a scenario file is required\n\n" << app.help();
    return kValidation;
  }

  try {
    Scenario scenario = load_scenario(path);
    if (seed_opt->count()) scenario.seed = seed;
    if (out_dir.empty()) {
      out_dir = scenario.output_dir.empty() ? "out/" + scenario.name : scenario.output_dir;
    }
    const auto result = run_command(command, scenario, out_dir);

    const json manifest{{"subcommand", command},
                        {"scenario", path},
                        {"scenario_hash", scenario_hash(scenario)},
                        {"seed", scenario.seed},
                        {"version", UCSPD_VERSION},
                        {"created_utc", utc_now()},
                        {"files", result.files}};
    std::ofstream(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary)
        << manifest.dump(2) << '\n';

    if (!quiet) {
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      if (as_json) {
        out << result.summary.dump(2) << '\n';
      } else {
        flatten(result.summary, "", out);
      }
    }
    return kOk;
  } catch (const InvalidArgument& e) {
    return fail(kValidation, e.what(), as_json, out, err);
  } catch (const NumericalError& e) {
    return fail(kNumerical, e.what(), as_json, out, err);
  } catch (const std::exception& e) {
    return fail(kNumerical, e.what(), as_json, out, err);
  }
}

}  // namespace ucspd::app
