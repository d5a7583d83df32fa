#include <algorithm>
#include <cmath>
#include <vector>

#include "ucspd/analysis.hpp"
#include "ucspd/error.hpp"

namespace ucspd {

using detail::require;

namespace {

// Mirror of `kernel` about t = 0; its origin sample stays at t = 0.
SampledWaveform reflected(const SampledWaveform& kernel) {
  std::vector<double> s(kernel.samples().rbegin(), kernel.samples().rend());
  return {-kernel.t_end(), kernel.dt(), std::move(s), kernel.kind()};
}

}  // namespace

void validate(const DeconvolutionSettings& settings) {
  require(settings.algorithm == "richardson-lucy",
          "unsupported deconvolution algorithm '" + settings.algorithm + "'");
  require(settings.iterations >= 1, "deconvolution iterations must be >= 1");
  require(settings.threshold > 0.0, "deconvolution threshold must be > 0");
}

DeconvolutionResult deconvolve(const SampledWaveform& measured, const SampledWaveform& resolution,
                               const DeconvolutionSettings& settings) {
  validate(settings);
  require(measured.is_intensity() && resolution.is_intensity(),
          "deconvolution requires nonnegative waveforms");
  require(resolution.area() > 0.0, "deconvolution kernel is all zero");
  require(measured.area() > 0.0, "measured waveform is all zero");

  const auto kernel = resolution.area_normalized();
  const auto adjoint = reflected(kernel);
  const auto m = measured.samples();
  const std::size_t n = m.size();

  std::vector<double> estimate(m.begin(), m.end());
  std::vector<double> ratio(n);
  DeconvolutionResult result{measured, 0, false, 0.0, 0.0};

  for (int it = 1; it <= settings.iterations; ++it) {
    const auto blurred = convolve_same(SampledWaveform(measured.grid(), estimate), kernel);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = blurred[i];
      ratio[i] = c > 0.0 ? m[i] / c : 0.0;
    }
    const auto correction = convolve_same(SampledWaveform(measured.grid(), ratio), adjoint);

    double change = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = estimate[i] * correction[i];
      change += std::abs(next - estimate[i]);
      total += std::abs(estimate[i]);
      estimate[i] = next;
    }
    result.iterations = it;
    result.relative_change = total > 0.0 ? change / total : 0.0;
    if (result.relative_change < settings.threshold) {
      result.converged = true;
      break;
    }
  }

  result.estimate = SampledWaveform(measured.grid(), estimate);
  const auto reblurred = convolve_same(result.estimate, kernel);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = reblurred[i] - m[i];
    num += d * d;
    den += m[i] * m[i];
  }
  result.residual = std::sqrt(num / den);
  return result;
}

}  // namespace ucspd
