#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ucspd_app/scenario.hpp"

namespace ucspd::app {

struct CommandResult {
  nlohmann::json summary;
  std::vector<std::string> files;  // relative to the output directory
  std::vector<std::string> warnings;
};

/// resolve, scan, sweep, timebin, limits, deconv, fitvis, report
const std::vector<std::string>& subcommands();

/// Runs one subcommand, writing its artifacts into `out_dir`. Throws InvalidArgument for bad
/// input and NumericalError when a computation fails.
CommandResult run_command(const std::string& name, const Scenario& scenario,
                          const std::filesystem::path& out_dir);

/// Reads the JSON artifacts of a finished pipeline in `dir` and condenses them into one summary.
/// Every artifact they reference must carry `expected_hash`.
nlohmann::json aggregate_report(const std::filesystem::path& dir,
                                const std::string& expected_hash);

}  // namespace ucspd::app
