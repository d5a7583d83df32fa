// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ucspd/analysis.hpp"
#include "ucspd/constants.hpp"
#include "ucspd/detector.hpp"
#include "ucspd/response.hpp"
#include "ucspd/simulate.hpp"
#include "ucspd/timebin.hpp"

using namespace ucspd;
namespace ref = ucspd::reference;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int failures = 0;

void criterion(const char* id, const char* title, double budget_s,
               const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.require(elapsed < budget_s, "runtime budget " + fmt("%.0f s", budget_s));
  if (!out.pass) ++failures;
  std::printf("[%s] %s %s (%.3f s): %s\n", out.pass ? "PASS" : "FAIL", id, title, elapsed,
              out.detail.c_str());
  std::fflush(stdout);
}

SampledWaveform resolution(double length_mm, double dt) {
  const PulseSpec pump{ref::kPumpFwhmFs, 0.0, 1.0};
  const CrystalSpec c{length_mm, ref::kTauGFsPerMm, "", {}, {}};
  return resolution_function(pump, c, Grid::centered(resolution_half_span(pump, c), dt));
}

// Closed-form FWHM of the Gaussian-pump * gate response for L = 1/2/3 mm (30-digit reference).
constexpr double kOracleFwhm[] = {252.162204734724, 412.038732250537, 612.965647989666};
constexpr double kCriterionFwhm[] = {252.0, 412.0, 613.0};
constexpr double kTableFwhm[] = {255.0, 415.0, 591.0};

// 0.101 * 0.41 * 0.85 * 0.94
constexpr double kOracleExternal = 0.03308659;

}  // namespace

int main() {
  criterion("1", "temporal resolution table", 1.0, [](Outcome& o) {
    for (int i = 0; i < 3; ++i) {
      const double L = i + 1.0;
      const double w = fwhm(resolution(L, 0.5));
      o.note("L=" + fmt("%.0f", L) + " FWHM " + fmt("%.2f", w) + " fs");
      o.require(std::abs(w - kCriterionFwhm[i]) <= 2.0, "within 2 fs of model value");
      o.require(std::abs(w - kOracleFwhm[i]) <= 2.0, "within 2 fs of closed-form oracle");
      o.require(std::abs(w / kTableFwhm[i] - 1.0) <= 0.05, "within 5 % of tabulated value");
    }
  });

  criterion("2", "numeric convolution vs closed-form erf response", 1.0, [](Outcome& o) {
    for (int i = 0; i < 3; ++i) {
      const CrystalSpec c{i + 1.0, ref::kTauGFsPerMm, "", {}, {}};
      const auto s = gaussian_waveform({ref::kSignalFwhmFs, 0.0, 1.0}, Grid::centered(1000.0, 1.0));
      const auto numeric = predict_measured(s, resolution(c.length_mm, 1.0));
      const double peak = analytic_response(0.0, ref::kPumpFwhmFs, ref::kSignalFwhmFs, c);
      const double span = 0.5 * c.gate_width_fs() + 3.0 * std::hypot(200.0, 240.0);
      double worst = 0.0;
      for (int k = 0; k < 2000; ++k) {
        const double t = -span + 2.0 * span * k / 1999.0;
        const double a = analytic_response(t, ref::kPumpFwhmFs, ref::kSignalFwhmFs, c) / peak;
        worst = std::max(worst, std::abs(numeric.at(t) - a));
      }
      o.note("L=" + fmt("%.0f", c.length_mm) + " max dev " + fmt("%.2e", worst) + " of peak");
      o.require(worst <= 0.005, "within 0.5 % of peak");
    }
  });

  criterion("3", "detection limits", 0.5, [](Outcome& o) {
    const double tabulated[] = {8.6e-5, 3.3e-5, 3.1e-5};
    for (int i = 0; i < 3; ++i) {
      const auto& row = ref::kCrystals[i];
      const auto noise = NoiseModel::calibrate(ref::kDarkCountCeilingCps, row.internal_efficiency,
                                               row.noise_cps);
      const EfficiencyChain chain{row.internal_efficiency, ref::kApdEfficiency,
                                  ref::kFiberCoupling, ref::kFilterTransmittance};
      const double limit = detection_limit(noise_cps(noise, row.internal_efficiency), 1.0,
                                           external_efficiency(chain), ref::kRepRateHz);
      o.note("L=" + fmt("%.0f", row.length_mm) + " " + fmt("%.3e", limit));
      o.require(std::abs(limit / tabulated[i] - 1.0) <= 0.03, "within 3 % of tabulated limit");
    }
  });

  criterion("4", "external efficiency", 0.5, [](Outcome& o) {
    const EfficiencyChain chain{0.101, ref::kApdEfficiency, ref::kFiberCoupling,
                                ref::kFilterTransmittance};
    const double eta = external_efficiency(chain);
    o.note(fmt("%.4f %%", 100.0 * eta));
    o.require(std::abs(eta - kOracleExternal) <= 1e-12, "product oracle");
    o.require(std::abs(100.0 * eta - 3.3) < 0.05, "3.3 % after rounding");
  });

  criterion("5", "cascade slot ratio 1 : 4cos^2 : 1", 0.5, [](Outcome& o) {
    std::mt19937_64 rng(20210415);
    std::uniform_real_distribution<double> u(-2.0 * pi, 2.0 * pi);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double phi = u(rng), phi_p = u(rng);
      const auto p = slot_probabilities(cascade(phi, phi_p, ref::kTimeBinSpacingFs));
      const double c2 = 4.0 * std::pow(std::cos(0.5 * (phi - phi_p)), 2);
      const double expect[] = {1.0 / (2.0 + c2), c2 / (2.0 + c2), 1.0 / (2.0 + c2)};
      for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(p[k] - expect[k]));
    }
    o.note("100 phase pairs, max dev " + fmt("%.1e", worst));
    o.require(worst <= 1e-12, "within 1e-12");
  });

  criterion("6", "visibility recovery", 5.0, [](Outcome& o) {
    PhaseSweepConfig cfg;
    for (int i = 0; i < 24; ++i) cfg.phases.push_back(2.0 * pi * i / 24.0);
    cfg.contrast = ref::kVisibility;
    cfg.counts_scale = 3.0 * 1e6 / (1.0 + cfg.contrast);  // 1e6 expected at the fringe peak
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      cfg.seed = seed;
      const auto fit = fit_sine(run_phase_sweep(cfg));
      worst = std::max(worst, std::abs(fit.visibility - ref::kVisibility));
    }
    o.note("20 seeds, max |V - 0.982| " + fmt("%.2e", worst));
    o.require(worst <= 0.002, "V = 0.982 +- 0.002");

    PhaseSweepConfig ideal = cfg;
    ideal.contrast = 1.0;
    const auto sweep = run_phase_sweep(ideal);
    const double v = fit_sine(sweep.coordinates, sweep.expected, ideal.dwell_s).visibility;
    o.note("noiseless contrast 1: |V - 1| " + fmt("%.1e", std::abs(v - 1.0)));
    o.require(std::abs(v - 1.0) <= 1e-9, "noiseless V = 1 within 1e-9");
  });

  criterion("7", "deconvolution round trip", 10.0, [](Outcome& o) {
    const double dt = 10.0;
    const auto t = resolution(2.0, dt);
    const Grid grid{-1500.0, dt, 461};
    const auto s = synthesize_waveform(cascade(0.0, 0.0, ref::kTimeBinSpacingFs),
                                       ref::kSignalFwhmFs, grid);
    const auto blurred = convolve_same(s, t.area_normalized());
    const auto expected = blurred.scaled(1e5 / blurred.max());
    ScanConfig cfg;
    for (std::size_t k = 0; k < grid.n; ++k) cfg.coordinates.push_back(grid.time(k));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      cfg.seed = seed;
      const auto counts = run_scan(cfg, [&](double x) { return expected.at(x); });
      const auto r = deconvolve(SampledWaveform(grid, as_doubles(counts.counts)), t);
      const auto peaks = find_peaks(r.estimate, 0.1, 0.5 * ref::kTimeBinSpacingFs);
      if (peaks.size() != 3) {
        o.require(false, "three peaks (seed " + std::to_string(seed) + " found " +
                             std::to_string(peaks.size()) + ")");
        continue;
      }
      const auto& e = r.estimate;
      const double ratio = e[peaks[1]] / (0.5 * (e[peaks[0]] + e[peaks[2]]));
      const double d1 = e.time(peaks[1]) - e.time(peaks[0]);
      const double d2 = e.time(peaks[2]) - e.time(peaks[1]);
      o.note("seed " + std::to_string(seed) + " ratio " + fmt("%.3f", ratio) + " spacing " +
             fmt("%.0f", d1) + "/" + fmt("%.0f", d2));
      o.require(std::abs(ratio / 4.0 - 1.0) <= 0.10, "ratio within 10 % of 4");
      o.require(std::abs(d1 - 800.0) <= 40.0 && std::abs(d2 - 800.0) <= 40.0,
                "spacing 800 +- 40 fs");
    }
  });

  criterion("8", "Poisson statistics and reproducibility", 5.0, [](Outcome& o) {
    ScanConfig cfg;
    cfg.kind = ScanKind::phase;
    cfg.coordinates.assign(10000, 0.0);
    cfg.seed = 8;
    const auto rate = [](double) { return 1000.0; };
    const auto base = run_scan(cfg, rate);
    double mean = 0.0;
    for (auto c : base.counts) mean += static_cast<double>(c);
    mean /= static_cast<double>(base.counts.size());
    double var = 0.0;
    for (auto c : base.counts) var += std::pow(static_cast<double>(c) - mean, 2);
    var /= static_cast<double>(base.counts.size() - 1);
    o.note("mean " + fmt("%.2f", mean) + " var/mean " + fmt("%.4f", var / mean));
    o.require(std::abs(mean / 1000.0 - 1.0) <= 0.01, "mean within 1 %");
    o.require(var / mean >= 0.95 && var / mean <= 1.05, "var/mean in [0.95, 1.05]");

    const auto serialize = [](const ScanResult& r) {
      std::ostringstream out;
      out << "coord,counts,expected\n";
      for (std::size_t i = 0; i < r.counts.size(); ++i) {
        out << r.coordinates[i] << ',' << r.counts[i] << ',' << r.expected[i] << '\n';
      }
      return out.str();
    };
    const std::string reference = serialize(base);
    bool identical = serialize(run_scan(cfg, rate)) == reference;
    for (unsigned threads : {2u, 3u, 8u, 0u}) {
      identical = identical && serialize(run_scan(cfg, rate, {threads})) == reference;
    }
    o.note(identical ? "byte-identical across reruns and 1/2/3/8/auto threads" : "outputs differ");
    o.require(identical, "byte-identical output");
  });

  criterion("S", "simulated delay scans recover model FWHMs", 10.0, [](Outcome& o) {
    const auto signal = gaussian_waveform({ref::kSignalFwhmFs, 0.0, 1.0},
                                          Grid::centered(1000.0, 1.0));
    for (int i = 0; i < 3; ++i) {
      const double L = i + 1.0;
      const auto t = resolution(L, 1.0);
      const OverlapKernel overlap(signal, t);
      ScanConfig cfg;
      cfg.coordinates = linear_coordinates(-1500.0, 1500.0, 10.0);
      cfg.seed = 300 + static_cast<std::uint64_t>(i);
      const auto scan = run_scan(cfg, [&](double d) { return 1e5 * overlap(d) + 800.0; });
      const auto fit = fit_erf_gate(scan, ref::kPumpFwhmFs, ref::kSignalFwhmFs);
      const CrystalSpec fitted{fit.gate_width_fs / ref::kTauGFsPerMm, ref::kTauGFsPerMm, "",
                               {}, {}};
      const double w = fwhm(resolution(fitted.length_mm, 1.0));
      o.note("L=" + fmt("%.0f", L) + " fitted FWHM " + fmt("%.1f", w) + " fs");
      o.require(std::abs(w / kOracleFwhm[i] - 1.0) <= 0.03, "within 3 % of model FWHM");
    }
  });

  std::printf("%s: %d criterion group(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
