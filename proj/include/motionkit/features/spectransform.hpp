#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "motionkit/error.hpp"
#include "motionkit/features/spectro_config.hpp"
#include "motionkit/features/spectrogram.hpp"

namespace motionkit::features {

/// Bilinear resize with half-pixel centers and edge clamping.
inline std::vector<float> bilinear_resize(const std::vector<float>& src, int src_rows, int src_cols, int dst_rows,
                                          int dst_cols) {
  std::vector<float> dst(static_cast<std::size_t>(dst_rows) * dst_cols);
  const double sy = static_cast<double>(src_rows) / dst_rows;
  const double sx = static_cast<double>(src_cols) / dst_cols;
  for (int r = 0; r < dst_rows; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(src_rows - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, src_rows - 1);
    const double wy = y - y0;
    for (int c = 0; c < dst_cols; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(src_cols - 1));
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, src_cols - 1);
      const double wx = x - x0;
      auto px = [&](int yy, int xx) { return static_cast<double>(src[static_cast<std::size_t>(yy) * src_cols + xx]); };
      const double top = px(y0, x0) * (1.0 - wx) + px(y0, x1) * wx;
      const double bot = px(y1, x0) * (1.0 - wx) + px(y1, x1) * wx;
      dst[static_cast<std::size_t>(r) * dst_cols + c] = static_cast<float>(top * (1.0 - wy) + bot * wy);
    }
  }
  return dst;
}

/// Number of frequency bins kept when moving from f_high to f_low:
/// floor((NFFT_high / 2) * f_low / f_high).
inline int spectransform_cutoff(double f_high, double f_low) {
  const auto high = rate_config(f_high);
  return static_cast<int>(std::floor(high.fft_len / 2.0 * f_low / f_high + 1e-9));
}

/// Emulates a lower sampling rate on an existing spectrogram: crop the
/// frequency axis below the new Nyquist, resize to the low-rate shape, clip.
inline SpectrogramImage spectransform(const SpectrogramImage& spec, double f_low) {
  const double f_high = spec.rate_hz;
  if (!(f_low < f_high)) {
    fail(ErrorCode::BadDirection, "spectransform only lowers the rate (" + std::to_string(f_high) + " -> " +
                                      std::to_string(f_low) + ")");
  }
  const auto high = rate_config(f_high);
  const auto low = rate_config(f_low);
  if (spec.time_bins != high.time_bins || spec.freq_bins != high.freq_bins) {
    fail(ErrorCode::ShapeMismatch, "input spectrogram does not match the " + std::to_string(f_high) + " Hz shape");
  }
  const int keep = spectransform_cutoff(f_high, f_low);
  std::vector<float> cropped(static_cast<std::size_t>(spec.time_bins) * keep);
  for (int t = 0; t < spec.time_bins; ++t) {
    for (int f = 0; f < keep; ++f) cropped[static_cast<std::size_t>(t) * keep + f] = spec.at(t, f);
  }
  SpectrogramImage out = spec;
  out.rate_hz = f_low;
  out.time_bins = low.time_bins;
  out.freq_bins = low.freq_bins;
  out.data = bilinear_resize(cropped, spec.time_bins, keep, low.time_bins, low.freq_bins);
  for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

inline ImageSet spectransform(const ImageSet& images, double f_low) {
  ImageSet out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(std::make_shared<SpectrogramImage>(spectransform(*img, f_low)));
  return out;
}

}  // namespace motionkit::features
