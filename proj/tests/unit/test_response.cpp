#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "ucspd/constants.hpp"
#include "ucspd/error.hpp"
#include "ucspd/response.hpp"

using namespace ucspd;
using doctest::Approx;
namespace ref = ucspd::reference;

namespace {

const PulseSpec kPump{ref::kPumpFwhmFs, 0.0, 1.0};

CrystalSpec crystal(double length_mm) { return {length_mm, ref::kTauGFsPerMm, "", {}, {}}; }

SampledWaveform resolution(double length_mm, double dt = 1.0) {
  const auto c = crystal(length_mm);
  return resolution_function(kPump, c, Grid::centered(resolution_half_span(kPump, c), dt));
}

}  // namespace

TEST_CASE("crystal validation") {
  CHECK_THROWS_AS(validate(crystal(0.0)), InvalidArgument);
  CHECK_THROWS_AS(validate(crystal(-2.0)), InvalidArgument);
  CHECK_THROWS_AS(validate(CrystalSpec{1.0, 0.0, "", {}, {}}), InvalidArgument);
  CHECK(crystal(2.0).gate_width_fs() == Approx(408.6));
}

TEST_CASE("resolution_function FWHM against the closed-form oracle") {
  // Frozen from a 30-digit bisection of Phi((t+w/2)/s) - Phi((t-w/2)/s), s = 200/2.3548.
  const double frozen[] = {252.162204734724, 412.038732250537, 612.965647989666};
  const double rounded[] = {252.0, 412.0, 613.0};
  for (int i = 0; i < 3; ++i) {
    const double length = i + 1.0;
    const double live = oracle::gauss_rect_fwhm(200.0, 204.3 * length);
    CHECK(live == Approx(frozen[i]).epsilon(1e-10));
    const double f = fwhm(resolution(length));
    CHECK(std::abs(f - rounded[i]) <= 2.0);
    CHECK(std::abs(f - frozen[i]) <= 0.5);
    // Within 5 % of the reported temporal resolutions.
    CHECK(std::abs(f - ref::kCrystals[i].resolution_fs) <= 0.05 * ref::kCrystals[i].resolution_fs);
  }
}

TEST_CASE("resolution_function is the sampled closed form") {
  const auto t = resolution(2.0, 0.5);
  const double peak = oracle::gauss_rect(0.0, 200.0, 408.6);
  for (std::size_t k = 0; k < t.size(); k += 7) {
    CHECK(t[k] == Approx(oracle::gauss_rect(t.time(k), 200.0, 408.6) / peak).epsilon(2e-3).scale(1.0));
  }
}

TEST_CASE("resolution_function rejects a truncated grid") {
  const auto c = crystal(2.0);
  const double need = resolution_half_span(kPump, c);
  CHECK(need == Approx(204.3 + 600.0));
  CHECK_THROWS_AS(resolution_function(kPump, c, Grid::centered(need - 10.0, 1.0)), InvalidArgument);
  CHECK_NOTHROW(resolution_function(kPump, c, Grid::centered(need, 1.0)));
}

TEST_CASE("resolution FWHM strictly increasing in L; peak saturates") {
  double previous = 0.0;
  for (double length : {0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0}) {
    const double f = fwhm(resolution(length));
    CHECK(f > previous);
    previous = f;
  }
  const auto peak = [](double length) {
    const auto c = crystal(length);
    return resolution_function(kPump, c, Grid::centered(resolution_half_span(kPump, c), 1.0),
                               Normalization::none)
        .max();
  };
  const double p1 = peak(1.0), p2 = peak(2.0), p3 = peak(3.0);
  CHECK(p2 > p1);
  CHECK(p3 > p2);
  CHECK(p3 / p2 < p2 / p1);
}

TEST_CASE("analytic_response") {
  const auto c2 = crystal(2.0);
  const double k = std::sqrt(std::log(2.0) / (200.0 * 200.0 + 240.0 * 240.0));
  CHECK(k * 408.6 == Approx(1.08889545224284).epsilon(1e-12));
  // 2 erf(1.08889545...) from a 30-digit evaluation.
  CHECK(analytic_response(0.0, 200.0, 240.0, c2) == Approx(1.75284551497471).epsilon(1e-12));
  for (double t : {13.0, 150.0, 204.3, 640.0, 1999.0}) {
    CHECK(analytic_response(t, 200.0, 240.0, c2) == analytic_response(-t, 200.0, 240.0, c2));
  }
  CHECK(analytic_response(5000.0, 200.0, 240.0, c2) < 1e-8);
  CHECK(analytic_response(-5000.0, 200.0, 240.0, c2) < 1e-8);
  CHECK_THROWS_AS(analytic_response(0.0, 0.0, 240.0, c2), InvalidArgument);
}

TEST_CASE("predict_measured") {
  SUBCASE("delta input reproduces T") {
    const auto t = resolution(2.0);
    const auto delta = impulse_waveform(Grid::centered(20.0, 1.0));
    const auto out = predict_measured(delta, t);
    for (std::size_t k = 0; k < t.size(); k += 5) {
      CHECK(out.at(t.time(k)) == Approx(t[k]).epsilon(1e-9).scale(1.0));
    }
  }

  SUBCASE("Gaussian signal matches the erf closed form") {
    const auto t = resolution(2.0);
    const auto s = gaussian_waveform({240.0, 0.0, 1.0}, Grid::centered(800.0, 1.0));
    const auto out = predict_measured(s, t);
    // Analytic curve sampled on the same grid.
    std::vector<double> analytic(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      analytic[k] = analytic_response(out.time(k), 200.0, 240.0, crystal(2.0));
    }
    const auto a = SampledWaveform(out.grid(), analytic);
    CHECK(fwhm(out) == Approx(fwhm(a)).epsilon(0.01));
  }

  SUBCASE("three-pulse signal stays resolved") {
    const auto t = resolution(2.0);
    const auto grid = Grid::centered(2000.0, 1.0);
    std::vector<double> s(grid.n, 0.0);
    const double weights[] = {1.0, 4.0, 1.0};
    for (int i = 0; i < 3; ++i) {
      const PulseSpec p{240.0, 800.0 * (i - 1), weights[i]};
      for (std::size_t k = 0; k < grid.n; ++k) s[k] += gaussian_value(p, grid.time(k));
    }
    const auto out = predict_measured(SampledWaveform(grid, s), t);
    const auto peaks = find_peaks(out);
    REQUIRE(peaks.size() == 3);
    CHECK(out.time(peaks[1]) - out.time(peaks[0]) >= 700.0);
    CHECK(out.time(peaks[2]) - out.time(peaks[1]) >= 700.0);
  }
}
