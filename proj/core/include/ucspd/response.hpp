#pragma once

#include <optional>
#include <string>

#include "ucspd/waveform.hpp"

namespace ucspd {

/// Nonlinear crystal used as the up-conversion time gate.
struct CrystalSpec {
  double length_mm = 0.0;
  double tau_g_fs_per_mm = 204.3;  // pump/signal group delay per unit length
  std::string label;
  // Informational only; the temporal model does not use them.
  std::optional<double> poling_period_um;
  std::optional<double> temperature_c;

  /// Gate width tau_g * L in fs.
  double gate_width_fs() const { return tau_g_fs_per_mm * length_mm; }
};

void validate(const CrystalSpec& crystal);

enum class Normalization { none, peak };

/// Minimum half span a grid must cover for resolution_function.
double resolution_half_span(const PulseSpec& pump, const CrystalSpec& crystal);

/// Temporal resolution function T(t): pump intensity convolved with a unit gate of width
/// tau_g*L centered at 0, sampled on `grid`. With Normalization::none the pump is used
/// at its own amplitude, so the peak is the gate-integrated pump intensity (fs).
SampledWaveform resolution_function(const PulseSpec& pump, const CrystalSpec& crystal,
                                    const Grid& grid,
                                    Normalization norm = Normalization::peak);

/// Measured waveform S_out = S_in (*) T.
SampledWaveform predict_measured(const SampledWaveform& signal, const SampledWaveform& resolution,
                                 Normalization norm = Normalization::peak);

/// Closed form of S_out for Gaussian pump and signal (unnormalized, peak -> 2 for long gates):
///   erf[k (tau_g L - 2t)] - erf[k (-tau_g L - 2t)],  k = sqrt(ln2 / (dp^2 + ds^2)).
double analytic_response(double t_fs, double pump_fwhm_fs, double signal_fwhm_fs,
                         const CrystalSpec& crystal);

/// Same closed form parametrized directly by gate width.
double analytic_gate_response(double t_fs, double pump_fwhm_fs, double signal_fwhm_fs,
                              double gate_width_fs);

}  // namespace ucspd
