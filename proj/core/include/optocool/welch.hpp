#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace optocool {

/// Welch power-spectral-density estimator (Hann window) for a real series
/// sampled at interval dt. Values are two-sided densities on the non-negative
/// bins omega_k = 2 pi k / (segment dt), k = 0..segment/2, normalized so that
/// (1/2pi) * sum over all two-sided bins * d omega equals the window-weighted
/// mean square. Owns an FFTW plan; not copyable.
class WelchEstimator {
 public:
  WelchEstimator(std::size_t segment, double overlap, double dt);
  ~WelchEstimator();
  WelchEstimator(const WelchEstimator&) = delete;
  WelchEstimator& operator=(const WelchEstimator&) = delete;
  WelchEstimator(WelchEstimator&&) noexcept;
  WelchEstimator& operator=(WelchEstimator&&) noexcept;

  std::size_t segment() const noexcept { return segment_; }
  std::size_t bins() const noexcept { return segment_ / 2 + 1; }
  double bin_width() const noexcept;  // rad/s
  std::vector<double> frequencies() const;

  /// Number of segments that fit in n samples.
  std::size_t segment_count(std::size_t n) const;

  /// Averaged periodogram of x. Throws ValidationError when x is shorter than one segment.
  std::vector<double> estimate(std::span<const double> x);

 private:
  struct Plan;
  std::size_t segment_;
  std::size_t hop_;
  double dt_;
  std::vector<double> window_;
  double window_power_ = 0.0;
  std::unique_ptr<Plan> plan_;
};

/// (1/2pi) * integral of a two-sided density given on the non-negative bins of a
/// uniform grid starting at 0 (the last bin is taken to be the Nyquist bin).
double two_sided_integral(std::span<const double> one_side, double bin_width);

}  // namespace optocool
