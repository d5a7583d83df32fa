#include "ucspd/response.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ucspd/error.hpp"

namespace ucspd {

using detail::require;

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// erf(a) - erf(b) without cancellation when both arguments sit in the same tail.
double erf_difference(double a, double b) {
  if (a >= 0.0 && b >= 0.0) return std::erfc(b) - std::erfc(a);
  if (a <= 0.0 && b <= 0.0) return std::erfc(-a) - std::erfc(-b);
  return std::erf(a) - std::erf(b);
}

}  // namespace

void validate(const CrystalSpec& crystal) {
  require(crystal.length_mm > 0.0 && std::isfinite(crystal.length_mm),
          "crystal length_mm must be > 0");
  require(crystal.tau_g_fs_per_mm > 0.0 && std::isfinite(crystal.tau_g_fs_per_mm),
          "crystal tau_g_fs_per_mm must be > 0");
}

double resolution_half_span(const PulseSpec& pump, const CrystalSpec& crystal) {
  return 0.5 * crystal.gate_width_fs() + 3.0 * pump.fwhm_fs;
}

SampledWaveform resolution_function(const PulseSpec& pump, const CrystalSpec& crystal,
                                    const Grid& grid, Normalization norm) {
  validate(pump);
  validate(crystal);
  validate(grid);

  const double need = resolution_half_span(pump, crystal);
  const double slack = 1e-9 * grid.dt;
  if (grid.t0 > -need + slack || grid.t_end() < need - slack) {
    std::ostringstream msg;
    msg << "truncated response: grid [" << grid.t0 << ", " << grid.t_end()
        << "] fs must span +/-" << need << " fs";
    throw InvalidArgument(msg.str());
  }

  // Pump on a zero-centered kernel grid so convolve_same keeps T on the caller's grid.
  const PulseSpec centered_pump{pump.fwhm_fs, 0.0, pump.amplitude};
  const auto kernel = gaussian_waveform(centered_pump, Grid::centered(need, grid.dt));
  // Gate as cell-averaged coverage of [center - w/2, center + w/2], so its area is exactly
  // tau_g*L on any grid. A pump delay shifts T through the gate position.
  std::vector<double> gate(grid.n);
  const double lo = pump.center_fs - 0.5 * crystal.gate_width_fs();
  const double hi = pump.center_fs + 0.5 * crystal.gate_width_fs();
  for (std::size_t k = 0; k < grid.n; ++k) {
    const double cell_lo = grid.time(k) - 0.5 * grid.dt;
    const double cell_hi = grid.time(k) + 0.5 * grid.dt;
    gate[k] = std::max(0.0, std::min(hi, cell_hi) - std::max(lo, cell_lo)) / grid.dt;
  }
  auto t = convolve_same(SampledWaveform(grid, std::move(gate)), kernel);
  return norm == Normalization::peak ? t.peak_normalized() : t;
}

SampledWaveform predict_measured(const SampledWaveform& signal, const SampledWaveform& resolution,
                                 Normalization norm) {
  auto out = convolve(signal, resolution);
  return norm == Normalization::peak ? out.peak_normalized() : out;
}

double analytic_gate_response(double t_fs, double pump_fwhm_fs, double signal_fwhm_fs,
                              double gate_width_fs) {
  require(pump_fwhm_fs > 0.0 && signal_fwhm_fs > 0.0, "pulse widths must be > 0");
  const double k =
      std::sqrt(kLn2 / (pump_fwhm_fs * pump_fwhm_fs + signal_fwhm_fs * signal_fwhm_fs));
  return erf_difference(k * (gate_width_fs - 2.0 * t_fs), k * (-gate_width_fs - 2.0 * t_fs));
}

double analytic_response(double t_fs, double pump_fwhm_fs, double signal_fwhm_fs,
                         const CrystalSpec& crystal) {
  return analytic_gate_response(t_fs, pump_fwhm_fs, signal_fwhm_fs, crystal.gate_width_fs());
}

}  // namespace ucspd
