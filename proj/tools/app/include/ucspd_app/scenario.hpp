#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "ucspd/detector.hpp"
#include "ucspd/response.hpp"
#include "ucspd/waveform.hpp"

namespace ucspd::app {

struct NoiseSection {
  double dark_cps = 100.0;
  double growth_per_unit_eta = 0.0;  // 0 selects the automatic value
  double calibration_power_mw = 0.0;
  double calibration_cps = 0.0;
};

struct PumpEfficiencySection {
  double p_sat_mw = PumpEfficiencyModel::kDefaultSaturationMw;
  std::vector<CalibrationPoint> calibration;
};

struct ScanSection {
  double start_fs = -1500.0;
  double stop_fs = 1500.0;
  double step_fs = 10.0;
  double dwell_s = 1.0;
};

struct SweepSection {
  int points = 24;
  double decoder_phase_rad = 0.0;
  double contrast = 0.982;
  double peak_counts = 1e6;  // expected center-slot counts at the fringe maximum
  double noise_cps = 0.0;
  double dwell_s = 1.0;
  std::string input_csv;     // fitvis reads this instead of simulating when set
};

struct TimeBinSection {
  double slot_spacing_fs = 800.0;
  double phi_rad = 0.0;
  double phi_prime_rad = 0.0;
  double contrast = 1.0;
};

struct DeconvSection {
  int iterations = 500;
  double threshold = 1e-6;
  double dt_fs = 10.0;
  double peak_counts = 1e5;
  std::string input_csv;
};

struct LimitsSection {
  double power_min_mw = 0.0;
  double power_max_mw = 500.0;
  double power_step_mw = 10.0;
  double integration_s = 1.0;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::filesystem::path base_dir;  // directory of the scenario file; resolves input_csv

  CrystalSpec crystal;
  PulseSpec pump;
  double pump_power_mw = 0.0;
  double rep_rate_hz = 76.3e6;
  PulseSpec signal;
  double mean_photons_per_pulse = 0.0;

  EfficiencyChain chain;  // internal efficiency filled in at pump_power_mw
  PumpEfficiencySection pump_efficiency;
  NoiseSection noise;
  double dt_fs = 1.0;

  ScanSection scan;
  SweepSection sweep;
  TimeBinSection timebin;
  DeconvSection deconv;
  LimitsSection limits;

  // Derived during parsing.
  PumpEfficiencyModel pump_model;
  NoiseModel noise_model;

  double eta_internal() const { return chain.internal_upconversion; }
  double eta_external() const { return external_efficiency(chain); }
  double operating_noise_cps() const { return noise_cps(noise_model, eta_internal()); }
  std::filesystem::path resolve_input(const std::string& path) const;
};

/// Parses and validates a YAML scenario. Unknown keys, type mismatches and violated
/// invariants throw InvalidArgument naming the key path.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Every configured value, in the same key layout as the scenario file.
nlohmann::json to_json(const Scenario& scenario);

/// FNV-1a 64 (hex) of the canonical echo with output_dir removed.
std::string scenario_hash(const Scenario& scenario);

/// Keys a scenario document must provide.
const std::vector<std::string>& required_keys();

}  // namespace ucspd::app
