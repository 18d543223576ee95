#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "motionkit/error.hpp"
#include "motionkit/ingest/types.hpp"

namespace motionkit::ingest {

struct ResampleOptions {
  /// Low-pass cutoff as a fraction of the lower of the two rates.
  double cutoff_fraction = 0.45;
  /// Kernel half-width in samples of the lower-rate grid.
  int half_width_taps = 64;
};

/// Output length for a rate change: floor(len * to / from).
inline std::size_t resampled_length(std::size_t len, double from_hz, double to_hz) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(len) * to_hz / from_hz + 1e-9));
}

/// Band-limited resampling with a Hann-windowed sinc kernel. Each output is
/// the kernel-weighted mean of nearby inputs, so constants are preserved all
/// the way to the edges. Equal rates return the input unchanged.
inline std::vector<double> resample(std::span<const double> signal, double from_hz, double to_hz,
                                    const ResampleOptions& opt = {}) {
  if (!(from_hz > 0.0) || !(to_hz > 0.0)) fail(ErrorCode::EmptySignal, "rates must be positive");
  if (signal.empty()) fail(ErrorCode::EmptySignal, "cannot resample an empty signal");
  if (from_hz == to_hz) return {signal.begin(), signal.end()};

  const std::size_t n = signal.size();
  const std::size_t out_len = resampled_length(n, from_hz, to_hz);
  const double step = from_hz / to_hz;  // output spacing in input samples
  const double cutoff = opt.cutoff_fraction * std::min(from_hz, to_hz) / from_hz;  // cycles per input sample
  const double half_width = opt.half_width_taps * std::max(1.0, step);

  std::vector<double> out(out_len);
  for (std::size_t k = 0; k < out_len; ++k) {
    const double x = static_cast<double>(k) * step;
    const auto lo = static_cast<std::ptrdiff_t>(std::max(0.0, std::ceil(x - half_width)));
    const auto hi = static_cast<std::ptrdiff_t>(std::min(static_cast<double>(n - 1), std::floor(x + half_width)));
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double d = x - static_cast<double>(j);
      const double arg = 2.0 * cutoff * d;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double hann = 0.5 * (1.0 + std::cos(std::numbers::pi * d / half_width));
      const double w = sinc * hann;
      acc += w * signal[static_cast<std::size_t>(j)];
      norm += w;
    }
    out[k] = acc / norm;
  }
  return out;
}

/// Resamples every axis of a recording; t0 and metadata carry over.
inline Recording resample(const Recording& rec, double to_hz, const ResampleOptions& opt = {}) {
  if (rec.samples.empty()) fail(ErrorCode::EmptySignal, "cannot resample an empty recording");
  Recording out = rec;
  out.rate_hz = to_hz;
  if (rec.rate_hz == to_hz) return out;
  std::vector<double> axis(rec.samples.size());
  std::array<std::vector<double>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < rec.samples.size(); ++i) axis[i] = rec.samples[i][static_cast<std::size_t>(a)];
    axes[static_cast<std::size_t>(a)] = resample(axis, rec.rate_hz, to_hz, opt);
  }
  out.samples.resize(axes[0].size());
  for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] = {axes[0][i], axes[1][i], axes[2][i]};
  return out;
}

}  // namespace motionkit::ingest
