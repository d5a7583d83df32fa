#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ucspd {

/// Uniform time grid: t_k = t0 + k*dt, k = 0..n-1 (femtoseconds).
struct Grid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t n = 0;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double t_end() const { return time(n - 1); }

  /// Symmetric grid with a sample exactly at t = 0, covering [-half_span, +half_span].
  static Grid centered(double half_span_fs, double dt_fs);
};

void validate(const Grid& grid);

enum class WaveformKind {
  intensity,  // every sample >= 0
  signed_values,
};

/// Uniformly sampled real waveform. Immutable after construction.
class SampledWaveform {
 public:
  SampledWaveform(double t0, double dt, std::vector<double> samples,
                  WaveformKind kind = WaveformKind::intensity);
  SampledWaveform(const Grid& grid, std::vector<double> samples,
                  WaveformKind kind = WaveformKind::intensity);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return samples_.size(); }
  Grid grid() const { return {t0_, dt_, samples_.size()}; }
  WaveformKind kind() const { return kind_; }
  bool is_intensity() const { return kind_ == WaveformKind::intensity; }

  std::span<const double> samples() const { return samples_; }
  double operator[](std::size_t k) const { return samples_[k]; }

  double time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
  double t_end() const { return time(samples_.size() - 1); }

  /// Linear interpolation; zero outside [t0, t_end].
  double at(double t) const;

  double area() const;  // sum * dt
  double max() const;
  std::size_t argmax() const;

  SampledWaveform scaled(double factor) const;
  /// Scaled so the maximum sample is 1. Throws if the maximum is not positive.
  SampledWaveform peak_normalized() const;
  /// Scaled so area() == 1. Throws if the area is not positive.
  SampledWaveform area_normalized() const;

 private:
  double t0_;
  double dt_;
  std::vector<double> samples_;
  WaveformKind kind_;
};

/// Gaussian intensity pulse description (FWHM in fs).
struct PulseSpec {
  double fwhm_fs = 0.0;
  double center_fs = 0.0;
  double amplitude = 1.0;
};

void validate(const PulseSpec& spec);

/// amplitude * exp(-(2 sqrt(ln 2)/fwhm)^2 (t - center)^2)
double gaussian_value(const PulseSpec& spec, double t);

SampledWaveform gaussian_waveform(const PulseSpec& spec, const Grid& grid);
SampledWaveform gaussian_waveform(const PulseSpec& spec, double t0, double dt, std::size_t n);

/// Unit rectangle centered at t = 0; samples with |t| <= width/2 are 1.
SampledWaveform rect_waveform(double width_fs, const Grid& grid);
SampledWaveform rect_waveform(double width_fs, double t0, double dt, std::size_t n);

/// Discrete delta at the sample nearest t: one sample of height 1/dt (unit area).
SampledWaveform impulse_waveform(const Grid& grid, double t = 0.0);

/// Linear convolution scaled by dt. Output t0 = a.t0 + b.t0, length = len(a) + len(b) - 1.
/// Requires equal dt (1e-9 relative). Direct sum below 1024 output samples, FFT above.
SampledWaveform convolve(const SampledWaveform& a, const SampledWaveform& b);
SampledWaveform convolve_direct(const SampledWaveform& a, const SampledWaveform& b);
SampledWaveform convolve_transform(const SampledWaveform& a, const SampledWaveform& b);

inline constexpr std::size_t kDirectConvolutionLimit = 1024;

/// Convolution cropped back onto `signal`'s grid. `kernel` must have a sample at t = 0.
SampledWaveform convolve_same(const SampledWaveform& signal, const SampledWaveform& kernel);

/// Pointwise a*x + b*y on identical grids.
SampledWaveform linear_combination(double alpha, const SampledWaveform& x, double beta,
                                   const SampledWaveform& y);

/// Full width at half maximum with linear interpolation at the outermost half-max crossings.
double fwhm(const SampledWaveform& w);

/// Linear-interpolation resampling onto a new grid (zero outside the source support).
SampledWaveform resample(const SampledWaveform& w, const Grid& grid);

/// Local maxima above `min_fraction` of the global maximum, as ascending sample indices.
/// With min_separation_fs > 0, lower maxima closer than that to a higher one are dropped.
std::vector<std::size_t> find_peaks(const SampledWaveform& w, double min_fraction = 0.05,
                                    double min_separation_fs = 0.0);

// CSV: header `t_fs,value`, one row per sample. Lines starting with '#' are comments.
void write_waveform_csv(std::ostream& out, const SampledWaveform& w,
                        const std::string& comment = {});
SampledWaveform read_waveform_csv(std::istream& in,
                                  WaveformKind kind = WaveformKind::intensity);

}  // namespace ucspd
