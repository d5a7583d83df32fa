#pragma once

#include <complex>
#include <vector>

#include "ucspd/waveform.hpp"

namespace ucspd {

/// Single photon in a superposition over time slots |1>, |2>, ... spaced slot_spacing_fs apart.
struct TimeBinState {
  std::vector<std::complex<double>> amplitudes;
  double slot_spacing_fs = 0.0;

  /// |1>: one photon in the first slot.
  static TimeBinState single_photon(double slot_spacing_fs);

  double norm_squared() const;
  TimeBinState normalized() const;
};

void validate(const TimeBinState& state);

/// Unbalanced interferometer: the long arm delays by delay_slots and picks up phase_rad.
struct InterferometerSpec {
  int delay_slots = 1;
  double phase_rad = 0.0;
  double contrast = 1.0;  // amplitude factor on the delayed arm, in (0, 1]
};

void validate(const InterferometerSpec& ifm);

enum class PostSelect { keep_losses, renormalize };

/// a_n -> (a_n + contrast * e^{i phase} a_{n - delay}) / sqrt(2); output grows by delay_slots.
TimeBinState apply_interferometer(const TimeBinState& state, const InterferometerSpec& ifm,
                                  PostSelect post = PostSelect::keep_losses);

/// Encoder then decoder with the same delay: |1> -> [1, e^{i phi} + e^{i phi'}, e^{i(phi+phi')}]/2.
TimeBinState cascade(double phi, double phi_prime, double slot_spacing_fs, double contrast = 1.0);

/// |a_k|^2 normalized to sum to 1.
std::vector<double> slot_probabilities(const TimeBinState& state);

/// Incoherent per-slot sum: sum_k |a_k|^2 * Gaussian(fwhm, center = k * spacing), unit peak each.
SampledWaveform synthesize_waveform(const TimeBinState& state, double pulse_fwhm_fs,
                                    const Grid& grid);

/// Center-slot probability with imperfect interference: (1 + contrast cos(phase_diff)) / 3.
/// contrast = 1 reproduces 4 cos^2(phase_diff / 2) / 6.
double center_bin_expectation(double phase_diff_rad, double contrast);

}  // namespace ucspd
