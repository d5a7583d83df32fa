#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ucspd/simulate.hpp"
#include "ucspd/waveform.hpp"

namespace ucspd {

// ---------------------------------------------------------------------------------------------
// Deconvolution

struct DeconvolutionSettings {
  std::string algorithm = "richardson-lucy";
  int iterations = 500;          // cap
  double threshold = 1e-6;       // stop when sum|x_new - x| / sum|x| falls below this
};

void validate(const DeconvolutionSettings& settings);

struct DeconvolutionResult {
  SampledWaveform estimate;
  int iterations = 0;
  bool converged = false;       // threshold reached before the cap
  double relative_change = 0.0; // last iteration
  double residual = 0.0;        // ||estimate (*) T - measured||_2 / ||measured||_2
};

/// Richardson-Lucy estimate of S_in from measured = S_in (*) T. The estimate lives on the
/// measured grid; T must share dt and contain a sample at t = 0. Total intensity of the
/// estimate equals that of `measured` after every iteration.
DeconvolutionResult deconvolve(const SampledWaveform& measured, const SampledWaveform& resolution,
                               const DeconvolutionSettings& settings = {});

// ---------------------------------------------------------------------------------------------
// Sinusoidal fringe fit: rate(phi) = offset * (1 + V cos(phi - phase0))

struct SineFit {
  double offset = 0.0;     // counts per second
  double amplitude = 0.0;  // counts per second
  double phase0 = 0.0;     // rad, in (-pi, pi]
  double visibility = 0.0; // amplitude / offset
  double sigma_offset = 0.0;
  double sigma_amplitude = 0.0;
  double sigma_phase0 = 0.0;
  double sigma_visibility = 0.0;
  double chi2_reduced = 0.0;
  int dof = 0;
};

/// Poisson-weighted linear least squares in (offset, a cos, a sin). Uncertainties come from the
/// fit covariance scaled by the reduced chi-square.
SineFit fit_sine(std::span<const double> phases, std::span<const double> counts, double dwell_s);
SineFit fit_sine(const ScanResult& sweep);

// ---------------------------------------------------------------------------------------------
// Gate fit: counts(tau) = A * [erf(k (w - 2(tau - c))) - erf(k (-w - 2(tau - c)))] + B

struct GateModelParams {
  double amplitude = 0.0;
  double gate_width_fs = 0.0;
  double center_fs = 0.0;
  double background = 0.0;
};

double gate_model(double tau_fs, const GateModelParams& p, double pump_fwhm_fs,
                  double signal_fwhm_fs);
/// d model / d (amplitude, gate_width, center, background).
std::array<double, 4> gate_model_gradient(double tau_fs, const GateModelParams& p,
                                          double pump_fwhm_fs, double signal_fwhm_fs);

struct GateFit {
  GateModelParams params;
  double gate_width_fs = 0.0;
  double uncertainty_fs = 0.0;  // one sigma
  double chi2_reduced = 0.0;
  int iterations = 0;
};

/// Levenberg-Marquardt fit of the closed-form gate shape to a delay scan. Throws
/// NumericalError (with the residual) when the fit does not converge or the gate amplitude is
/// not significant.
GateFit fit_erf_gate(std::span<const double> delays_fs, std::span<const double> counts,
                     double pump_fwhm_fs, double signal_fwhm_fs);
GateFit fit_erf_gate(const ScanResult& scan, double pump_fwhm_fs, double signal_fwhm_fs);

std::vector<double> as_doubles(std::span<const std::uint64_t> counts);

}  // namespace ucspd
