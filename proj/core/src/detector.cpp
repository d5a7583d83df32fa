#include "ucspd/detector.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ucspd/error.hpp"

namespace ucspd {

using detail::require;

namespace {

bool is_fraction(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

double saturating(double eta_max, double p_sat, double power) {
  return eta_max * -std::expm1(-power / p_sat);
}

// Least-squares eta_max for fixed p_sat (the model is linear in eta_max).
double best_eta_max(std::span<const CalibrationPoint> points, double p_sat) {
  double num = 0.0, den = 0.0;
  for (const auto& p : points) {
    const double g = -std::expm1(-p.power_mw / p_sat);
    num += g * p.efficiency;
    den += g * g;
  }
  return num / den;
}

double sse(std::span<const CalibrationPoint> points, double p_sat) {
  const double eta_max = best_eta_max(points, p_sat);
  double s = 0.0;
  for (const auto& p : points) {
    const double r = saturating(eta_max, p_sat, p.power_mw) - p.efficiency;
    s += r * r;
  }
  return s;
}

}  // namespace

void validate(const EfficiencyChain& chain) {
  require(is_fraction(chain.internal_upconversion), "internal_upconversion must be in [0,1]");
  require(is_fraction(chain.apd_efficiency), "apd_efficiency must be in [0,1]");
  require(is_fraction(chain.fiber_coupling), "fiber_coupling must be in [0,1]");
  require(is_fraction(chain.filter_transmittance), "filter_transmittance must be in [0,1]");
}

double downstream_efficiency(const EfficiencyChain& chain) {
  validate(chain);
  return chain.apd_efficiency * chain.fiber_coupling * chain.filter_transmittance;
}

double external_efficiency(const EfficiencyChain& chain) {
  return chain.internal_upconversion * downstream_efficiency(chain);
}

PumpEfficiencyModel PumpEfficiencyModel::calibrate(std::span<const CalibrationPoint> points,
                                                   double p_sat_mw) {
  require(!points.empty(), "pump efficiency calibration needs at least one point");
  for (const auto& p : points) {
    require(p.power_mw > 0.0 && std::isfinite(p.power_mw), "calibration power must be > 0");
    require(p.efficiency > 0.0 && p.efficiency <= 1.0, "calibration efficiency must be in (0,1]");
  }
  PumpEfficiencyModel model;
  model.calibration.assign(points.begin(), points.end());
  if (points.size() == 1) {
    require(p_sat_mw > 0.0 && std::isfinite(p_sat_mw), "p_sat_mw must be > 0");
    model.p_sat_mw = p_sat_mw;
  } else {
    // Golden-section search on log(p_sat) over [1 mW, 1e5 mW].
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(1.0), b = std::log(1e5);
    double c = b - phi * (b - a), d = a + phi * (b - a);
    for (int i = 0; i < 200 && b - a > 1e-12; ++i) {
      if (sse(points, std::exp(c)) < sse(points, std::exp(d))) {
        b = d;
      } else {
        a = c;
      }
      c = b - phi * (b - a);
      d = a + phi * (b - a);
    }
    model.p_sat_mw = std::exp(0.5 * (a + b));
  }
  model.eta_max = best_eta_max(points, model.p_sat_mw);
  validate(model);
  return model;
}

void validate(const PumpEfficiencyModel& model) {
  require(model.p_sat_mw > 0.0 && std::isfinite(model.p_sat_mw), "p_sat_mw must be > 0");
  require(is_fraction(model.eta_max), "eta_max must be in [0,1]");
  for (const auto& p : model.calibration) {
    const double predicted = saturating(model.eta_max, model.p_sat_mw, p.power_mw);
    if (std::abs(predicted - p.efficiency) > 0.05 * p.efficiency) {
      std::ostringstream msg;
      msg << "pump efficiency model misses calibration point (" << p.power_mw << " mW, "
          << p.efficiency << ") by more than 5%: model gives " << predicted;
      throw InvalidArgument(msg.str());
    }
  }
}

double efficiency_at_power(const PumpEfficiencyModel& model, double power_mw) {
  require(power_mw >= 0.0 && std::isfinite(power_mw), "pump power must be >= 0");
  return saturating(model.eta_max, model.p_sat_mw, power_mw);
}

NoiseModel NoiseModel::calibrate(double dark_cps, double eta, double cps, double growth) {
  require(dark_cps >= 0.0, "dark_cps must be >= 0");
  require(eta > 0.0 && eta <= 1.0, "noise calibration efficiency must be in (0,1]");
  require(cps >= dark_cps, "calibrated noise must not be below the dark count floor");
  NoiseModel m;
  m.dark_cps = dark_cps;
  m.growth_per_unit_eta = growth > 0.0 ? growth : 2.0 / eta;
  m.n0_cps = (cps - dark_cps) / std::expm1(m.growth_per_unit_eta * eta);
  validate(m);
  return m;
}

void validate(const NoiseModel& model) {
  require(model.dark_cps >= 0.0 && std::isfinite(model.dark_cps), "dark_cps must be >= 0");
  require(model.n0_cps >= 0.0 && std::isfinite(model.n0_cps), "n0_cps must be >= 0");
  require(model.growth_per_unit_eta >= 0.0 && std::isfinite(model.growth_per_unit_eta),
          "growth_per_unit_eta must be >= 0");
}

double noise_cps(const NoiseModel& model, double eta) {
  require(eta >= 0.0 && eta <= 1.0, "efficiency must be in [0,1]");
  return model.dark_cps + model.n0_cps * std::expm1(model.growth_per_unit_eta * eta);
}

double detection_limit(double noise, double integration_s, double external_eta,
                       double rep_rate_hz) {
  require(noise >= 0.0 && std::isfinite(noise), "noise count rate must be >= 0");
  require(integration_s > 0.0, "integration time must be > 0");
  require(rep_rate_hz > 0.0, "repetition rate must be > 0");
  if (!(external_eta > 0.0)) throw InvalidArgument("efficiency must be positive");
  const double sigma_counts = std::sqrt(noise * integration_s);
  return 3.0 * sigma_counts / (integration_s * rep_rate_hz * external_eta);
}

LimitSweep sweep_limits(const PumpEfficiencyModel& pump, const NoiseModel& noise,
                        const EfficiencyChain& chain, std::span<const double> powers_mw,
                        double integration_s, double rep_rate_hz) {
  require(!powers_mw.empty(), "limit sweep needs at least one pump power");
  const double downstream = downstream_efficiency(chain);
  LimitSweep sweep;
  double best = std::numeric_limits<double>::infinity();
  for (double power : powers_mw) {
    LimitPoint pt{};
    pt.power_mw = power;
    pt.eta_internal = efficiency_at_power(pump, power);
    pt.eta_external = pt.eta_internal * downstream;
    pt.noise_cps = noise_cps(noise, pt.eta_internal);
    pt.limit_per_pulse = pt.eta_external > 0.0
                             ? detection_limit(pt.noise_cps, integration_s, pt.eta_external,
                                               rep_rate_hz)
                             : std::numeric_limits<double>::infinity();
    if (pt.limit_per_pulse < best) {
      best = pt.limit_per_pulse;
      sweep.argmin = sweep.points.size();
    }
    sweep.points.push_back(pt);
  }
  return sweep;
}

}  // namespace ucspd
