#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ucspd/waveform.hpp"

namespace ucspd {

enum class ScanKind { delay, phase };

const char* to_string(ScanKind kind);

struct ScanConfig {
  ScanKind kind = ScanKind::delay;
  std::vector<double> coordinates;  // fs for delay scans, rad for phase sweeps
  double dwell_s = 1.0;
  double mean_photons_per_pulse = 0.1;
  double rep_rate_hz = 76.3e6;
  std::uint64_t seed = 0;
};

void validate(const ScanConfig& config);

struct ScanResult {
  std::vector<double> coordinates;
  std::vector<std::uint64_t> counts;
  std::vector<double> expected;  // mean counts per point (rate * dwell)
  ScanConfig config;
  std::string rng;  // generator and substream scheme
};

/// Evenly spaced coordinates start, start + step, ... <= stop (inclusive within 1e-9 step).
std::vector<double> linear_coordinates(double start, double stop, double step);

/// Normalized pump-delay overlap O(tau) = [S_in (*) T](tau) / max.
class OverlapKernel {
 public:
  OverlapKernel(const SampledWaveform& signal, const SampledWaveform& resolution);

  double operator()(double delay_fs) const { return curve_.at(delay_fs); }
  const SampledWaveform& curve() const { return curve_; }

 private:
  SampledWaveform curve_;
};

struct RateParameters {
  double mean_photons_per_pulse = 0.1;
  double external_eta = 0.0;  // at optimal overlap
  double rep_rate_hz = 76.3e6;
  double noise_cps = 0.0;
};

void validate(const RateParameters& p);

/// rep_rate * mu * eta_ext * O(delay) + noise  (counts per second).
double expected_rate(const OverlapKernel& overlap, double delay_fs, const RateParameters& p);
double expected_rate(const SampledWaveform& signal, const SampledWaveform& resolution,
                     double delay_fs, const RateParameters& p);

/// 64-bit seed for the generator of scan point `index` (splitmix64 of seed and index).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

struct ExecutionOptions {
  unsigned threads = 1;  // 0 = hardware concurrency
};

using RateFunction = std::function<double(double)>;  // counts per second at a coordinate

/// counts[i] ~ Poisson(rate(coord_i) * dwell) from an independent substream per point.
/// Results do not depend on thread count.
ScanResult run_scan(const ScanConfig& config, const RateFunction& rate,
                    ExecutionOptions exec = {});

struct PhaseSweepConfig {
  std::vector<double> phases;      // encoder phase phi, rad
  double decoder_phase_rad = 0.0;  // phi'
  double contrast = 1.0;
  double counts_scale = 1e6;  // expected center-slot counts per dwell at probability 1
  double noise_cps = 0.0;
  double dwell_s = 1.0;
  std::uint64_t seed = 0;
};

/// Poisson counts around counts_scale * center_bin_expectation(phi - phi', contrast)
/// + noise * dwell.
ScanResult run_phase_sweep(const PhaseSweepConfig& config, ExecutionOptions exec = {});

}  // namespace ucspd
