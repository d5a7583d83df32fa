#pragma once

#include <span>
#include <vector>

namespace ucspd {

/// Internal conversion efficiency followed by the downstream loss chain.
struct EfficiencyChain {
  double internal_upconversion = 0.0;
  double apd_efficiency = 0.41;
  double fiber_coupling = 0.85;
  double filter_transmittance = 0.94;

  /// Same downstream factors with a different internal efficiency.
  EfficiencyChain with_internal(double eta) const {
    EfficiencyChain c = *this;
    c.internal_upconversion = eta;
    return c;
  }
};

void validate(const EfficiencyChain& chain);

/// Product of all four factors: the efficiency seen from the detector input.
double external_efficiency(const EfficiencyChain& chain);

/// Downstream factors only (APD * fiber * filter).
double downstream_efficiency(const EfficiencyChain& chain);

struct CalibrationPoint {
  double power_mw = 0.0;
  double efficiency = 0.0;
};

/// Saturating pump-power dependence eta(P) = eta_max * (1 - exp(-P / p_sat)).
/// The functional form is a modeling choice; only one calibrated point per crystal is known.
struct PumpEfficiencyModel {
  double eta_max = 0.0;
  double p_sat_mw = 0.0;
  std::vector<CalibrationPoint> calibration;

  /// Single point: p_sat is fixed and eta_max solved. Two or more: both fitted (least squares).
  static PumpEfficiencyModel calibrate(std::span<const CalibrationPoint> points,
                                       double p_sat_mw = kDefaultSaturationMw);

  static constexpr double kDefaultSaturationMw = 200.0;
};

void validate(const PumpEfficiencyModel& model);

double efficiency_at_power(const PumpEfficiencyModel& model, double power_mw);

/// Phenomenological noise count rate vs internal efficiency:
///   noise(eta) = dark + n0 * (exp(growth * eta) - 1),  noise(0) = dark.
struct NoiseModel {
  double dark_cps = 0.0;
  double n0_cps = 0.0;
  double growth_per_unit_eta = 0.0;

  /// Solve n0 so noise(eta) == cps. growth <= 0 selects 2/eta, which places the minimum of
  /// sqrt(noise)/eta (the detection limit) at the calibration point when dark counts are small.
  static NoiseModel calibrate(double dark_cps, double eta, double cps, double growth = 0.0);
};

void validate(const NoiseModel& model);

double noise_cps(const NoiseModel& model, double eta);

/// Mean photons per pulse whose signal equals three Poisson standard deviations of the noise
/// counts accumulated over `integration_s`:
///   3 sqrt(noise * T) / (T * rep_rate * eta_ext)
double detection_limit(double noise_cps, double integration_s, double external_eta,
                       double rep_rate_hz);

struct LimitPoint {
  double power_mw;
  double eta_internal;
  double eta_external;
  double noise_cps;
  double limit_per_pulse;
};

struct LimitSweep {
  std::vector<LimitPoint> points;
  std::size_t argmin = 0;

  const LimitPoint& best() const { return points.at(argmin); }
};

LimitSweep sweep_limits(const PumpEfficiencyModel& pump, const NoiseModel& noise,
                        const EfficiencyChain& chain, std::span<const double> powers_mw,
                        double integration_s, double rep_rate_hz);

}  // namespace ucspd
