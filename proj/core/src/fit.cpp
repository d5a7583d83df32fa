#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ucspd/analysis.hpp"
#include "ucspd/error.hpp"
#include "ucspd/response.hpp"

namespace ucspd {

using detail::require;

std::vector<double> as_doubles(std::span<const std::uint64_t> counts) {
  std::vector<double> out(counts.size());
  std::transform(counts.begin(), counts.end(), out.begin(),
                 [](std::uint64_t c) { return static_cast<double>(c); });
  return out;
}

// ---------------------------------------------------------------------------------------------
// Sine fit

SineFit fit_sine(std::span<const double> phases, std::span<const double> counts, double dwell_s) {
  require(phases.size() == counts.size(), "phases and counts differ in length");
  require(phases.size() >= 5, "sine fit needs at least 5 points");
  require(dwell_s > 0.0, "dwell_s must be > 0");
  for (double c : counts) require(c >= 0.0 && std::isfinite(c), "counts must be >= 0");
  const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
  if (*hi - *lo < std::numbers::pi) {
    throw InvalidArgument("sine fit: degenerate phase span (less than half a period)");
  }

  const auto n = static_cast<Eigen::Index>(phases.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = phases[static_cast<std::size_t>(i)];
    const double c = counts[static_cast<std::size_t>(i)];
    design(i, 0) = 1.0;
    design(i, 1) = std::cos(phi);
    design(i, 2) = std::sin(phi);
    y(i) = c / dwell_s;
    w(i) = dwell_s * dwell_s / std::max(c, 1.0);  // 1 / var(rate)
  }

  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::Vector3d rhs = design.transpose() * w.asDiagonal() * y;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError("sine fit: singular normal equations");
  }
  const Eigen::Vector3d p = ldlt.solve(rhs);
  const Eigen::VectorXd resid = y - design * p;
  const double chi2 = resid.dot(w.asDiagonal() * resid);

  SineFit fit;
  fit.dof = static_cast<int>(n) - 3;
  fit.chi2_reduced = fit.dof > 0 ? chi2 / fit.dof : 0.0;
  const Eigen::Matrix3d cov =
      ldlt.solve(Eigen::MatrixXd::Identity(3, 3)) * (fit.dof > 0 ? fit.chi2_reduced : 1.0);

  const double o = p(0), a = p(1), b = p(2);
  if (!(o > 0.0)) throw NumericalError("sine fit: nonpositive offset");
  const double r = std::hypot(a, b);
  fit.offset = o;
  fit.amplitude = r;
  fit.phase0 = std::atan2(b, a);
  fit.visibility = r / o;
  fit.sigma_offset = std::sqrt(cov(0, 0));

  if (r > 0.0) {
    const Eigen::Vector2d g_r(a / r, b / r);
    const Eigen::Vector2d g_phi(-b / (r * r), a / (r * r));
    const Eigen::Matrix2d cab = cov.bottomRightCorner<2, 2>();
    fit.sigma_amplitude = std::sqrt(g_r.dot(cab * g_r));
    fit.sigma_phase0 = std::sqrt(g_phi.dot(cab * g_phi));
    const Eigen::Vector3d g_v(-r / (o * o), a / (r * o), b / (r * o));
    fit.sigma_visibility = std::sqrt(g_v.dot(cov * g_v));
  } else {
    fit.sigma_amplitude = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2)));
    fit.sigma_phase0 = std::numeric_limits<double>::infinity();
    fit.sigma_visibility = fit.sigma_amplitude / o;
  }
  return fit;
}

SineFit fit_sine(const ScanResult& sweep) {
  const auto counts = as_doubles(sweep.counts);
  return fit_sine(sweep.coordinates, counts, sweep.config.dwell_s);
}

// ---------------------------------------------------------------------------------------------
// Gate fit

namespace {

constexpr double kLn2 = 0.69314718055994530942;

double gate_k(double pump_fwhm_fs, double signal_fwhm_fs) {
  require(pump_fwhm_fs > 0.0 && signal_fwhm_fs > 0.0, "pulse widths must be > 0");
  return std::sqrt(kLn2 / (pump_fwhm_fs * pump_fwhm_fs + signal_fwhm_fs * signal_fwhm_fs));
}

using Vec4 = Eigen::Vector4d;

GateModelParams unpack(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }

struct Problem {
  std::span<const double> x;
  std::span<const double> y;
  std::vector<double> weight;
  double pump;
  double signal;

  double chi2(const Vec4& v) const {
    const auto p = unpack(v);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - gate_model(x[i], p, pump, signal);
      s += weight[i] * r * r;
    }
    return s;
  }

  void normal_equations(const Vec4& v, Eigen::Matrix4d& jtj, Vec4& jtr) const {
    const auto p = unpack(v);
    jtj.setZero();
    jtr.setZero();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto g = gate_model_gradient(x[i], p, pump, signal);
      const Vec4 j(g[0], g[1], g[2], g[3]);
      const double r = y[i] - gate_model(x[i], p, pump, signal);
      jtj.noalias() += weight[i] * j * j.transpose();
      jtr.noalias() += weight[i] * r * j;
    }
  }
};

[[noreturn]] void fail(const std::string& why, double chi2, std::size_t n) {
  std::ostringstream msg;
  msg << "gate fit did not converge: " << why << " (chi2 = " << chi2 << " over " << n
      << " points)";
  throw NumericalError(msg.str());
}

}  // namespace

double gate_model(double tau_fs, const GateModelParams& p, double pump_fwhm_fs,
                  double signal_fwhm_fs) {
  return p.amplitude * analytic_gate_response(tau_fs - p.center_fs, pump_fwhm_fs,
                                             signal_fwhm_fs, p.gate_width_fs) +
         p.background;
}

std::array<double, 4> gate_model_gradient(double tau_fs, const GateModelParams& p,
                                          double pump_fwhm_fs, double signal_fwhm_fs) {
  const double k = gate_k(pump_fwhm_fs, signal_fwhm_fs);
  const double u = tau_fs - p.center_fs;
  const double a = k * (p.gate_width_fs - 2.0 * u);
  const double b = k * (-p.gate_width_fs - 2.0 * u);
  const double ga = std::exp(-a * a);
  const double gb = std::exp(-b * b);
  const double c = 2.0 / std::sqrt(std::numbers::pi);
  return {
      analytic_gate_response(u, pump_fwhm_fs, signal_fwhm_fs, p.gate_width_fs),
      p.amplitude * c * k * (ga + gb),
      p.amplitude * c * 2.0 * k * (ga - gb),
      1.0,
  };
}

GateFit fit_erf_gate(std::span<const double> delays, std::span<const double> counts,
                     double pump_fwhm_fs, double signal_fwhm_fs) {
  require(delays.size() == counts.size(), "delays and counts differ in length");
  require(delays.size() >= 8, "gate fit needs at least 8 scan points");
  const double k = gate_k(pump_fwhm_fs, signal_fwhm_fs);
  const std::size_t n = delays.size();

  // Initial guess from the half-maximum crossings of the background-subtracted scan.
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const double background0 = sorted[sorted.size() / 10];
  const auto peak_it = std::max_element(counts.begin(), counts.end());
  const auto peak = static_cast<std::size_t>(std::distance(counts.begin(), peak_it));
  const double height = *peak_it - background0;
  if (!(height > 0.0)) fail("scan has no peak above background", 0.0, n);
  const double half = background0 + 0.5 * height;

  std::size_t left = peak, right = peak;
  while (left > 0 && counts[left] >= half) --left;
  while (right + 1 < n && counts[right] >= half) ++right;
  if (counts[left] >= half || counts[right] >= half) {
    fail("scan does not cover the full gate", 0.0, n);
  }
  const auto cross = [&](std::size_t below, std::size_t above) {
    const double f = (half - counts[below]) / (counts[above] - counts[below]);
    return delays[below] + f * (delays[above] - delays[below]);
  };
  const double t_left = cross(left, left + 1);
  const double t_right = cross(right, right - 1);
  const double width_data = std::abs(t_right - t_left);
  const double combined = std::sqrt(kLn2) / k;  // sqrt(dp^2 + ds^2)
  const double w0 = std::sqrt(std::max(width_data * width_data - combined * combined,
                                       0.09 * width_data * width_data));

  Vec4 v(0.0, w0, 0.5 * (t_left + t_right), background0);
  v(0) = height / analytic_gate_response(0.0, pump_fwhm_fs, signal_fwhm_fs, w0);

  Problem prob{delays, counts, std::vector<double>(n), pump_fwhm_fs, signal_fwhm_fs};
  for (std::size_t i = 0; i < n; ++i) prob.weight[i] = 1.0 / std::max(counts[i], 1.0);

  double chi2 = prob.chi2(v);
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  Eigen::Matrix4d jtj;
  Vec4 jtr;
  constexpr int kMaxIterations = 200;
  for (; it < kMaxIterations && !converged; ++it) {
    prob.normal_equations(v, jtj, jtr);
    bool improved = false;
    while (lambda < 1e12) {
      Eigen::Matrix4d damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
      const Vec4 step = damped.ldlt().solve(jtr);
      const Vec4 trial = v + step;
      const double chi2_trial = trial.allFinite() ? prob.chi2(trial) : INFINITY;
      if (chi2_trial <= chi2) {
        const double drop = chi2 - chi2_trial;
        v = trial;
        improved = true;
        lambda = std::max(lambda * 0.3, 1e-12);
        converged = drop <= 1e-12 * std::max(chi2, 1e-300) ||
                    (step.cwiseAbs().array() <= 1e-10 * (v.cwiseAbs().array() + 1e-10)).all();
        chi2 = chi2_trial;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      converged = true;  // no downhill step left at any damping
    }
  }
  if (!converged) fail("iteration cap reached", chi2, n);

  GateFit fit;
  fit.params = unpack(v);
  fit.iterations = it;
  const int dof = static_cast<int>(n) - 4;
  fit.chi2_reduced = chi2 / dof;

  prob.normal_equations(v, jtj, jtr);
  const Eigen::Matrix4d cov = jtj.inverse() * std::max(fit.chi2_reduced, 1.0);
  if (!cov.allFinite() || cov(0, 0) <= 0.0 || cov(1, 1) <= 0.0) {
    fail("singular covariance", chi2, n);
  }
  const double sigma_amp = std::sqrt(cov(0, 0));
  fit.gate_width_fs = std::abs(fit.params.gate_width_fs);
  fit.params.gate_width_fs = fit.gate_width_fs;
  fit.uncertainty_fs = std::sqrt(cov(1, 1));

  const double span = std::abs(delays.back() - delays.front());
  if (!(fit.params.amplitude > 5.0 * sigma_amp)) {
    fail("gate amplitude not significant", chi2, n);
  }
  if (!(fit.gate_width_fs < span) || !(fit.uncertainty_fs < fit.gate_width_fs)) {
    fail("gate width unconstrained by the scan", chi2, n);
  }
  return fit;
}

GateFit fit_erf_gate(const ScanResult& scan, double pump_fwhm_fs, double signal_fwhm_fs) {
  const auto counts = as_doubles(scan.counts);
  return fit_erf_gate(scan.coordinates, counts, pump_fwhm_fs, signal_fwhm_fs);
}

}  // namespace ucspd
