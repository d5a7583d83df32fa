#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "ucspd/waveform.hpp"
#include "ucspd_app/svg_plot.hpp"

namespace ucspd::app {

/// Shortest round-trip decimal form.
std::string format_shortest(double v);

/// Writes run artifacts into one directory. CSV files start with a `# scenario_hash=` line and
/// JSON files carry a top-level "scenario_hash" field.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, std::string hash);

  void csv(const std::string& name, const std::string& header,
           const std::vector<std::vector<std::string>>& rows);
  void waveform(const std::string& name, const SampledWaveform& w);
  void json(const std::string& name, nlohmann::json body);
  /// Plot failures become warnings.
  void plot(const std::string& name, const PlotSpec& spec);

  const std::filesystem::path& dir() const { return dir_; }
  const std::string& hash() const { return hash_; }
  const std::vector<std::string>& files() const { return files_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  void write(const std::string& name, const std::string& text);

  std::filesystem::path dir_;
  std::string hash_;
  std::vector<std::string> files_;
  std::vector<std::string> warnings_;
};

/// Scenario hash embedded in a CSV or JSON artifact; empty when none is found.
std::string read_artifact_hash(const std::filesystem::path& path);

}  // namespace ucspd::app
