#include "ucspd/waveform.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <sstream>

#include "ucspd/error.hpp"

namespace ucspd {

using detail::require;

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Negative round-off below this fraction of the peak is clipped in intensity outputs.
constexpr double kIntensityRoundoff = 1e-12;

void require_same_dt(const SampledWaveform& a, const SampledWaveform& b) {
  const double scale = std::max(a.dt(), b.dt());
  if (std::abs(a.dt() - b.dt()) > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "sample spacing mismatch: " << a.dt() << " fs vs " << b.dt()
        << " fs (resample explicitly)";
    throw InvalidArgument(msg.str());
  }
}

WaveformKind combined_kind(const SampledWaveform& a, const SampledWaveform& b) {
  return a.is_intensity() && b.is_intensity() ? WaveformKind::intensity
                                              : WaveformKind::signed_values;
}

std::vector<double> clip_roundoff(std::vector<double> v) {
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, std::abs(x));
  const double floor = -kIntensityRoundoff * peak;
  for (double& x : v) {
    if (x < 0.0 && x >= floor) x = 0.0;
  }
  return v;
}

// fftw_plan_* and fftw_destroy_plan touch global planner state.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

Grid Grid::centered(double half_span_fs, double dt_fs) {
  require(dt_fs > 0.0, "grid dt must be positive");
  require(half_span_fs > 0.0, "grid half span must be positive");
  const auto half = static_cast<std::size_t>(std::ceil(half_span_fs / dt_fs - 1e-9));
  return {-static_cast<double>(half) * dt_fs, dt_fs, 2 * half + 1};
}

void validate(const Grid& grid) {
  require(grid.n >= 2, "grid needs at least 2 samples");
  require(grid.dt > 0.0 && std::isfinite(grid.dt), "grid dt must be positive and finite");
  require(std::isfinite(grid.t0), "grid t0 must be finite");
}

SampledWaveform::SampledWaveform(double t0, double dt, std::vector<double> samples,
                                 WaveformKind kind)
    : t0_(t0), dt_(dt), samples_(std::move(samples)), kind_(kind) {
  require(dt_ > 0.0 && std::isfinite(dt_), "waveform dt must be positive and finite");
  require(std::isfinite(t0_), "waveform t0 must be finite");
  require(samples_.size() >= 2, "waveform needs at least 2 samples");
  for (double x : samples_) {
    require(std::isfinite(x), "waveform samples must be finite");
    if (kind_ == WaveformKind::intensity) {
      require(x >= 0.0, "intensity waveform samples must be nonnegative");
    }
  }
}

SampledWaveform::SampledWaveform(const Grid& grid, std::vector<double> samples, WaveformKind kind)
    : SampledWaveform(grid.t0, grid.dt, std::move(samples), kind) {
  require(samples_.size() == grid.n, "sample count does not match grid");
}

double SampledWaveform::at(double t) const {
  const double x = (t - t0_) / dt_;
  if (x < 0.0 || x > static_cast<double>(samples_.size() - 1)) return 0.0;
  const auto k = static_cast<std::size_t>(std::floor(x));
  if (k + 1 >= samples_.size()) return samples_.back();
  const double frac = x - static_cast<double>(k);
  return samples_[k] + frac * (samples_[k + 1] - samples_[k]);
}

double SampledWaveform::area() const {
  return std::accumulate(samples_.begin(), samples_.end(), 0.0) * dt_;
}

double SampledWaveform::max() const { return samples_[argmax()]; }

std::size_t SampledWaveform::argmax() const {
  return static_cast<std::size_t>(
      std::distance(samples_.begin(), std::max_element(samples_.begin(), samples_.end())));
}

SampledWaveform SampledWaveform::scaled(double factor) const {
  std::vector<double> out(samples_);
  for (double& x : out) x *= factor;
  const auto kind = (kind_ == WaveformKind::intensity && factor >= 0.0)
                        ? WaveformKind::intensity
                        : WaveformKind::signed_values;
  return {t0_, dt_, std::move(out), kind};
}

SampledWaveform SampledWaveform::peak_normalized() const {
  const double peak = max();
  require(peak > 0.0, "cannot peak-normalize a waveform whose maximum is not positive");
  return scaled(1.0 / peak);
}

SampledWaveform SampledWaveform::area_normalized() const {
  const double a = area();
  require(a > 0.0, "cannot area-normalize a waveform with nonpositive area");
  return scaled(1.0 / a);
}

void validate(const PulseSpec& spec) {
  require(spec.fwhm_fs > 0.0 && std::isfinite(spec.fwhm_fs), "pulse fwhm_fs must be > 0");
  require(spec.amplitude > 0.0 && std::isfinite(spec.amplitude), "pulse amplitude must be > 0");
  require(std::isfinite(spec.center_fs), "pulse center_fs must be finite");
}

double gaussian_value(const PulseSpec& spec, double t) {
  const double u = (t - spec.center_fs) / spec.fwhm_fs;
  return spec.amplitude * std::exp(-4.0 * kLn2 * u * u);
}

SampledWaveform gaussian_waveform(const PulseSpec& spec, const Grid& grid) {
  validate(spec);
  validate(grid);
  std::vector<double> s(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) s[k] = gaussian_value(spec, grid.time(k));
  return {grid, std::move(s)};
}

SampledWaveform gaussian_waveform(const PulseSpec& spec, double t0, double dt, std::size_t n) {
  return gaussian_waveform(spec, Grid{t0, dt, n});
}

SampledWaveform rect_waveform(double width_fs, const Grid& grid) {
  require(width_fs > 0.0 && std::isfinite(width_fs), "rect width must be > 0");
  validate(grid);
  const double half = 0.5 * width_fs;
  // Grid times carry round-off; treat |t| within 1e-9 dt of the edge as inside.
  const double slack = 1e-9 * grid.dt;
  std::vector<double> s(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) {
    s[k] = std::abs(grid.time(k)) <= half + slack ? 1.0 : 0.0;
  }
  return {grid, std::move(s)};
}

SampledWaveform rect_waveform(double width_fs, double t0, double dt, std::size_t n) {
  return rect_waveform(width_fs, Grid{t0, dt, n});
}

SampledWaveform impulse_waveform(const Grid& grid, double t) {
  validate(grid);
  const double x = std::round((t - grid.t0) / grid.dt);
  require(x >= 0.0 && x < static_cast<double>(grid.n), "impulse position outside grid");
  std::vector<double> s(grid.n, 0.0);
  s[static_cast<std::size_t>(x)] = 1.0 / grid.dt;
  return {grid, std::move(s)};
}

SampledWaveform convolve_direct(const SampledWaveform& a, const SampledWaveform& b) {
  require_same_dt(a, b);
  const auto sa = a.samples();
  const auto sb = b.samples();
  std::vector<double> out(sa.size() + sb.size() - 1, 0.0);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double ai = sa[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < sb.size(); ++j) out[i + j] += ai * sb[j];
  }
  const double dt = a.dt();
  for (double& x : out) x *= dt;
  const auto kind = combined_kind(a, b);
  if (kind == WaveformKind::intensity) out = clip_roundoff(std::move(out));
  return {a.t0() + b.t0(), dt, std::move(out), kind};
}

SampledWaveform convolve_transform(const SampledWaveform& a, const SampledWaveform& b) {
  require_same_dt(a, b);
  const std::size_t n_out = a.size() + b.size() - 1;
  const std::size_t n_fft = next_pow2(n_out);
  const std::size_t n_freq = n_fft / 2 + 1;

  std::vector<double> xa(n_fft, 0.0), xb(n_fft, 0.0), y(n_fft, 0.0);
  std::copy(a.samples().begin(), a.samples().end(), xa.begin());
  std::copy(b.samples().begin(), b.samples().end(), xb.begin());
  std::vector<std::complex<double>> fa(n_freq), fb(n_freq);

  auto* pa = reinterpret_cast<fftw_complex*>(fa.data());
  auto* pb = reinterpret_cast<fftw_complex*>(fb.data());
  const int n = static_cast<int>(n_fft);

  fftw_plan fwd_a, fwd_b, inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd_a = fftw_plan_dft_r2c_1d(n, xa.data(), pa, FFTW_ESTIMATE);
    fwd_b = fftw_plan_dft_r2c_1d(n, xb.data(), pb, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, pa, y.data(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd_a);
  fftw_execute(fwd_b);
  for (std::size_t k = 0; k < n_freq; ++k) fa[k] *= fb[k];
  fftw_execute(inv);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_a);
    fftw_destroy_plan(fwd_b);
    fftw_destroy_plan(inv);
  }

  const double scale = a.dt() / static_cast<double>(n_fft);
  std::vector<double> out(n_out);
  for (std::size_t k = 0; k < n_out; ++k) out[k] = y[k] * scale;
  const auto kind = combined_kind(a, b);
  if (kind == WaveformKind::intensity) out = clip_roundoff(std::move(out));
  return {a.t0() + b.t0(), a.dt(), std::move(out), kind};
}

SampledWaveform convolve(const SampledWaveform& a, const SampledWaveform& b) {
  if (a.size() + b.size() - 1 < kDirectConvolutionLimit) return convolve_direct(a, b);
  return convolve_transform(a, b);
}

SampledWaveform convolve_same(const SampledWaveform& signal, const SampledWaveform& kernel) {
  require_same_dt(signal, kernel);
  const double origin = -kernel.t0() / kernel.dt();
  const double origin_index = std::round(origin);
  require(std::abs(origin - origin_index) < 1e-6 && origin_index >= 0.0 &&
              origin_index < static_cast<double>(kernel.size()),
          "kernel grid must contain a sample at t = 0");
  const auto m = static_cast<std::size_t>(origin_index);
  const auto full = convolve(signal, kernel);
  std::vector<double> out(full.samples().begin() + static_cast<std::ptrdiff_t>(m),
                          full.samples().begin() + static_cast<std::ptrdiff_t>(m + signal.size()));
  return {signal.t0(), signal.dt(), std::move(out), full.kind()};
}

SampledWaveform linear_combination(double alpha, const SampledWaveform& x, double beta,
                                   const SampledWaveform& y) {
  require_same_dt(x, y);
  require(x.size() == y.size() && std::abs(x.t0() - y.t0()) <= 1e-9 * x.dt(),
          "linear_combination requires identical grids");
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = alpha * x[k] + beta * y[k];
  const bool nonneg = x.is_intensity() && y.is_intensity() && alpha >= 0.0 && beta >= 0.0;
  return {x.t0(), x.dt(), std::move(out),
          nonneg ? WaveformKind::intensity : WaveformKind::signed_values};
}

double fwhm(const SampledWaveform& w) {
  const auto s = w.samples();
  const double peak = w.max();
  require(peak > 0.0, "fwhm requires a positive maximum");
  const double half = 0.5 * peak;

  std::size_t first = 0;
  while (s[first] < half) ++first;
  std::size_t last = s.size() - 1;
  while (s[last] < half) --last;

  if (first == 0 || last == s.size() - 1) {
    throw NumericalError("unbounded half-width: waveform does not fall below half maximum");
  }
  const auto crossing = [&](std::size_t below, std::size_t above) {
    const double frac = (half - s[below]) / (s[above] - s[below]);
    return w.time(below) + frac * (w.time(above) - w.time(below));
  };
  const double left = crossing(first - 1, first);
  const double right = crossing(last + 1, last);
  return right - left;
}

SampledWaveform resample(const SampledWaveform& w, const Grid& grid) {
  validate(grid);
  std::vector<double> s(grid.n);
  for (std::size_t k = 0; k < grid.n; ++k) s[k] = w.at(grid.time(k));
  return {grid, std::move(s), w.kind()};
}

std::vector<std::size_t> find_peaks(const SampledWaveform& w, double min_fraction,
                                    double min_separation_fs) {
  const auto s = w.samples();
  const double threshold = min_fraction * w.max();
  std::vector<std::size_t> peaks;
  std::size_t k = 1;
  while (k + 1 < s.size()) {
    if (s[k] > s[k - 1] && s[k] >= threshold) {
      // Walk across a flat top, then require a strict descent.
      std::size_t end = k;
      while (end + 1 < s.size() && s[end + 1] == s[k]) ++end;
      if (end + 1 < s.size() && s[end + 1] < s[k]) peaks.push_back((k + end) / 2);
      k = end + 1;
    } else {
      ++k;
    }
  }
  if (min_separation_fs <= 0.0 || peaks.size() < 2) return peaks;

  std::vector<std::size_t> by_height = peaks;
  std::stable_sort(by_height.begin(), by_height.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t p : by_height) {
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](std::size_t q) {
      return std::abs(w.time(p) - w.time(q)) < min_separation_fs;
    });
    if (clear) kept.push_back(p);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace ucspd
