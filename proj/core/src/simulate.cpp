#include "ucspd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "ucspd/error.hpp"
#include "ucspd/timebin.hpp"

namespace ucspd {

using detail::require;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t draw_poisson(double mean, std::uint64_t seed) {
  if (mean == 0.0) return 0;
  std::mt19937_64 engine(seed);
  std::poisson_distribution<std::int64_t> dist(mean);
  return static_cast<std::uint64_t>(dist(engine));
}

}  // namespace

const char* to_string(ScanKind kind) { return kind == ScanKind::delay ? "delay" : "phase"; }

void validate(const ScanConfig& config) {
  require(!config.coordinates.empty(), "scan needs at least one coordinate");
  require(config.dwell_s > 0.0 && std::isfinite(config.dwell_s), "dwell_s must be > 0");
  require(config.rep_rate_hz > 0.0 && std::isfinite(config.rep_rate_hz),
          "rep_rate_hz must be > 0");
  require(config.mean_photons_per_pulse >= 0.0, "mean_photons_per_pulse must be >= 0");
  for (double c : config.coordinates) require(std::isfinite(c), "scan coordinates must be finite");
  if (config.kind == ScanKind::delay) {
    const auto& c = config.coordinates;
    const bool increasing = std::adjacent_find(c.begin(), c.end(), std::greater_equal<>()) == c.end();
    const bool decreasing = std::adjacent_find(c.begin(), c.end(), std::less_equal<>()) == c.end();
    require(increasing || decreasing, "delay scan coordinates must be strictly monotone");
  }
}

std::vector<double> linear_coordinates(double start, double stop, double step) {
  require(step > 0.0 && std::isfinite(step), "scan step must be > 0");
  require(stop >= start, "scan stop must be >= start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = start + static_cast<double>(k) * step;
  return out;
}

OverlapKernel::OverlapKernel(const SampledWaveform& signal, const SampledWaveform& resolution)
    : curve_(convolve(signal, resolution).peak_normalized()) {}

void validate(const RateParameters& p) {
  require(p.mean_photons_per_pulse >= 0.0, "mean photons per pulse must be >= 0");
  require(p.external_eta >= 0.0 && p.external_eta <= 1.0, "external efficiency must be in [0,1]");
  require(p.rep_rate_hz > 0.0, "repetition rate must be > 0");
  require(p.noise_cps >= 0.0, "noise count rate must be >= 0");
}

double expected_rate(const OverlapKernel& overlap, double delay_fs, const RateParameters& p) {
  validate(p);
  return p.rep_rate_hz * p.mean_photons_per_pulse * p.external_eta * overlap(delay_fs) +
         p.noise_cps;
}

double expected_rate(const SampledWaveform& signal, const SampledWaveform& resolution,
                     double delay_fs, const RateParameters& p) {
  return expected_rate(OverlapKernel(signal, resolution), delay_fs, p);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

ScanResult run_scan(const ScanConfig& config, const RateFunction& rate, ExecutionOptions exec) {
  validate(config);
  const std::size_t n = config.coordinates.size();

  ScanResult result;
  result.coordinates = config.coordinates;
  result.counts.assign(n, 0);
  result.expected.assign(n, 0.0);
  result.config = config;
  result.rng = "mt19937_64 per point, seeded splitmix64(seed, index); std::poisson_distribution";

  // Rates are evaluated up front so invalid rates fail before any sampling.
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rate(config.coordinates[i]);
    if (!(r >= 0.0) || !std::isfinite(r)) {
      std::ostringstream msg;
      msg << "rate must be finite and >= 0 (got " << r << " at coordinate "
          << config.coordinates[i] << ")";
      throw InvalidArgument(msg.str());
    }
    result.expected[i] = r * config.dwell_s;
  }

  unsigned threads = exec.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                       : exec.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      result.counts[i] = draw_poisson(result.expected[i], substream_seed(config.seed, i));
    }
  };

  if (threads <= 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
      pool.emplace_back(work, begin, std::min(n, begin + chunk));
    }
    for (auto& t : pool) t.join();
  }
  return result;
}

ScanResult run_phase_sweep(const PhaseSweepConfig& config, ExecutionOptions exec) {
  require(config.contrast > 0.0 && config.contrast <= 1.0, "contrast must be in (0,1]");
  require(config.counts_scale >= 0.0, "counts_scale must be >= 0");
  require(config.noise_cps >= 0.0, "noise_cps must be >= 0");

  ScanConfig scan;
  scan.kind = ScanKind::phase;
  scan.coordinates = config.phases;
  scan.dwell_s = config.dwell_s;
  scan.seed = config.seed;
  const auto rate = [&](double phi) {
    const double p = center_bin_expectation(phi - config.decoder_phase_rad, config.contrast);
    return config.counts_scale * p / config.dwell_s + config.noise_cps;
  };
  return run_scan(scan, rate, exec);
}

}  // namespace ucspd
