#include "ucspd/timebin.hpp"

#include <cmath>
#include <numeric>

#include "ucspd/error.hpp"

namespace ucspd {

using detail::require;

TimeBinState TimeBinState::single_photon(double slot_spacing_fs) {
  TimeBinState s{{{1.0, 0.0}}, slot_spacing_fs};
  validate(s);
  return s;
}

double TimeBinState::norm_squared() const {
  return std::accumulate(amplitudes.begin(), amplitudes.end(), 0.0,
                         [](double acc, std::complex<double> a) { return acc + std::norm(a); });
}

TimeBinState TimeBinState::normalized() const {
  const double n2 = norm_squared();
  require(n2 > 0.0, "cannot normalize an all-zero time-bin state");
  TimeBinState out = *this;
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& a : out.amplitudes) a *= inv;
  return out;
}

void validate(const TimeBinState& state) {
  require(!state.amplitudes.empty(), "time-bin state needs at least one slot");
  require(state.slot_spacing_fs > 0.0 && std::isfinite(state.slot_spacing_fs),
          "slot_spacing_fs must be > 0");
  for (const auto& a : state.amplitudes) {
    require(std::isfinite(a.real()) && std::isfinite(a.imag()), "amplitudes must be finite");
  }
}

void validate(const InterferometerSpec& ifm) {
  require(ifm.delay_slots >= 1, "interferometer delay_slots must be >= 1");
  require(ifm.contrast > 0.0 && ifm.contrast <= 1.0, "interferometer contrast must be in (0,1]");
  require(std::isfinite(ifm.phase_rad), "interferometer phase must be finite");
}

TimeBinState apply_interferometer(const TimeBinState& state, const InterferometerSpec& ifm,
                                  PostSelect post) {
  validate(state);
  validate(ifm);
  const auto delay = static_cast<std::size_t>(ifm.delay_slots);
  const std::size_t n_in = state.amplitudes.size();
  const auto arm = ifm.contrast * std::polar(1.0, ifm.phase_rad);
  const double split = 1.0 / std::sqrt(2.0);

  TimeBinState out{std::vector<std::complex<double>>(n_in + delay), state.slot_spacing_fs};
  for (std::size_t n = 0; n < n_in; ++n) {
    out.amplitudes[n] += split * state.amplitudes[n];
    out.amplitudes[n + delay] += split * arm * state.amplitudes[n];
  }
  return post == PostSelect::renormalize ? out.normalized() : out;
}

TimeBinState cascade(double phi, double phi_prime, double slot_spacing_fs, double contrast) {
  const auto encoded = apply_interferometer(TimeBinState::single_photon(slot_spacing_fs),
                                            {1, phi, contrast});
  return apply_interferometer(encoded, {1, phi_prime, contrast});
}

std::vector<double> slot_probabilities(const TimeBinState& state) {
  validate(state);
  const double total = state.norm_squared();
  require(total > 0.0, "slot probabilities of an all-zero state are undefined");
  std::vector<double> p(state.amplitudes.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(state.amplitudes[k]) / total;
  return p;
}

SampledWaveform synthesize_waveform(const TimeBinState& state, double pulse_fwhm_fs,
                                    const Grid& grid) {
  validate(state);
  validate(grid);
  require(pulse_fwhm_fs > 0.0, "pulse fwhm must be > 0");
  const double last_center =
      static_cast<double>(state.amplitudes.size() - 1) * state.slot_spacing_fs;
  const double margin = 3.0 * pulse_fwhm_fs;
  const double slack = 1e-9 * grid.dt;
  require(grid.t0 <= -margin + slack && grid.t_end() >= last_center + margin - slack,
          "grid too narrow: must cover all slots +/- 3 fwhm");

  std::vector<double> s(grid.n, 0.0);
  for (std::size_t k = 0; k < state.amplitudes.size(); ++k) {
    const double weight = std::norm(state.amplitudes[k]);
    if (weight == 0.0) continue;
    const PulseSpec pulse{pulse_fwhm_fs, static_cast<double>(k) * state.slot_spacing_fs, 1.0};
    for (std::size_t i = 0; i < grid.n; ++i) s[i] += weight * gaussian_value(pulse, grid.time(i));
  }
  return {grid, std::move(s)};
}

double center_bin_expectation(double phase_diff_rad, double contrast) {
  require(contrast > 0.0 && contrast <= 1.0, "contrast must be in (0,1]");
  return (1.0 + contrast * std::cos(phase_diff_rad)) / 3.0;
}

}  // namespace ucspd
