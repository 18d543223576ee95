#pragma once

#include <array>
#include <cmath>
#include <string>

#include "motionkit/error.hpp"

namespace motionkit::features {

/// Framing and STFT parameters for one sampling rate. Output images are
/// time_bins x freq_bins (rows are STFT frames, columns are frequency bins).
struct SpectroConfig {
  double rate_hz = 100.0;
  double frame_s = 5.12;
  double hop_s = 0.64;
  int fft_len = 256;
  int stft_win = 128;
  int stft_overlap = 125;
  int time_bins = 128;
  int freq_bins = 128;

  int frame_len() const { return static_cast<int>(std::floor(frame_s * rate_hz + 1e-9)); }
  int hop_len() const { return static_cast<int>(std::floor(hop_s * rate_hz + 1e-9)); }
  int stft_hop() const { return stft_win - stft_overlap; }
  /// STFT frames before trimming to time_bins.
  int stft_frames() const { return (frame_len() - stft_win) / stft_hop() + 1; }
};

struct RateShape {
  int rate_hz;
  int fft_len;
  int time_bins;
  int freq_bins;
};

/// FFT size and image shape per canonical rate.
inline constexpr std::array<RateShape, 5> kRateTable{{
    {10, 26, 38, 13},
    {25, 64, 96, 32},
    {50, 128, 96, 64},
    {75, 192, 96, 96},
    {100, 256, 128, 128},
}};

inline bool is_canonical_rate(double rate_hz) {
  for (const auto& r : kRateTable) {
    if (static_cast<double>(r.rate_hz) == rate_hz) return true;
  }
  return false;
}

/// Scales the 100 Hz framing by rate/100. The STFT window is round(128 r);
/// the hop is the integer stride that makes the frame yield time_bins + 1
/// STFT frames, of which the trailing one is trimmed.
inline SpectroConfig rate_config(double rate_hz) {
  for (const auto& r : kRateTable) {
    if (static_cast<double>(r.rate_hz) != rate_hz) continue;
    SpectroConfig cfg;
    cfg.rate_hz = rate_hz;
    cfg.fft_len = r.fft_len;
    cfg.time_bins = r.time_bins;
    cfg.freq_bins = r.freq_bins;
    cfg.stft_win = static_cast<int>(std::lround(128.0 * rate_hz / 100.0));
    const int hop = std::max(1, (cfg.frame_len() - cfg.stft_win) / cfg.time_bins);
    cfg.stft_overlap = cfg.stft_win - hop;
    return cfg;
  }
  fail(ErrorCode::UnsupportedRate, "rate " + std::to_string(rate_hz) + " Hz is not one of 10/25/50/75/100");
}

}  // namespace motionkit::features
