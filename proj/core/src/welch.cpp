#include "optocool/welch.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "optocool/errors.hpp"

namespace optocool {
namespace {

// FFTW planning and plan destruction are not thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct WelchEstimator::Plan {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit Plan(std::size_t n) {
    std::lock_guard lock(fftw_planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
};

WelchEstimator::WelchEstimator(std::size_t segment, double overlap, double dt)
    : segment_(segment), dt_(dt) {
  if (segment < 8 || segment % 2 != 0)
    throw ValidationError("welch_segment", "segment length must be even and at least 8");
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw ValidationError("welch_overlap", "overlap must lie in [0, 1)");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt", "must be positive");

  hop_ = static_cast<std::size_t>(std::llround(static_cast<double>(segment) * (1.0 - overlap)));
  if (hop_ == 0) hop_ = 1;

  // Periodic Hann window.
  window_.resize(segment);
  for (std::size_t i = 0; i < segment; ++i) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(segment));
    window_[i] = s * s;
    window_power_ += window_[i] * window_[i];
  }
  plan_ = std::make_unique<Plan>(segment);
}

WelchEstimator::~WelchEstimator() = default;
WelchEstimator::WelchEstimator(WelchEstimator&&) noexcept = default;
WelchEstimator& WelchEstimator::operator=(WelchEstimator&&) noexcept = default;

double WelchEstimator::bin_width() const noexcept {
  return 2.0 * std::numbers::pi / (static_cast<double>(segment_) * dt_);
}

std::vector<double> WelchEstimator::frequencies() const {
  std::vector<double> w(bins());
  const double dw = bin_width();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = dw * static_cast<double>(k);
  return w;
}

std::size_t WelchEstimator::segment_count(std::size_t n) const {
  if (n < segment_) return 0;
  return (n - segment_) / hop_ + 1;
}

std::vector<double> WelchEstimator::estimate(std::span<const double> x) {
  const std::size_t count = segment_count(x.size());
  if (count == 0) throw ValidationError("t_sample", "series shorter than one Welch segment");

  std::vector<double> psd(bins(), 0.0);
  for (std::size_t s = 0; s < count; ++s) {
    const double* seg = x.data() + s * hop_;
    for (std::size_t i = 0; i < segment_; ++i) plan_->in[i] = window_[i] * seg[i];
    fftw_execute(plan_->plan);
    for (std::size_t k = 0; k < psd.size(); ++k) {
      const double re = plan_->out[k][0];
      const double im = plan_->out[k][1];
      psd[k] += re * re + im * im;
    }
  }
  const double norm = dt_ / (window_power_ * static_cast<double>(count));
  for (double& v : psd) v *= norm;
  return psd;
}

double two_sided_integral(std::span<const double> one_side, double bin_width) {
  if (one_side.empty()) return 0.0;
  double sum = one_side.front();
  for (std::size_t k = 1; k + 1 < one_side.size(); ++k) sum += 2.0 * one_side[k];
  if (one_side.size() > 1) sum += one_side.back();
  return sum * bin_width / (2.0 * std::numbers::pi);
}

}  // namespace optocool
