#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "motionkit/error.hpp"
#include "motionkit/features/spectro_config.hpp"
#include "motionkit/ingest/align.hpp"
#include "motionkit/ingest/types.hpp"

namespace motionkit::features {

/// Normalized spectrogram, values in [0,1], row-major time_bins x freq_bins.
struct SpectrogramImage {
  int time_bins = 0;
  int freq_bins = 0;
  std::vector<float> data;
  Location location;
  std::string user_id;
  Activity activity = Activity::Other;
  double rate_hz = 100.0;
  double frame_start_unix_s = 0.0;

  float at(int t, int f) const { return data[static_cast<std::size_t>(t) * freq_bins + f]; }
};

using ImagePtr = std::shared_ptr<const SpectrogramImage>;
using ImageSet = std::vector<ImagePtr>;

/// Raw STFT magnitudes in double, row-major time_bins x freq_bins.
struct RawSpectrogram {
  int time_bins = 0;
  int freq_bins = 0;
  std::vector<double> data;

  double at(int t, int f) const { return data[static_cast<std::size_t>(t) * freq_bins + f]; }
};

struct NormalizedRecording {
  Recording recording;
  std::array<bool, 3> zero_variance{false, false, false};
};

/// Per-axis standardization with the recording's own mean and population
/// standard deviation. A constant axis becomes all zeros and is flagged.
inline NormalizedRecording normalize_channels(const Recording& rec) {
  if (rec.samples.size() < 2) fail(ErrorCode::TooShort, "normalization needs at least 2 samples");
  NormalizedRecording out{rec, {}};
  const double n = static_cast<double>(rec.samples.size());
  for (std::size_t a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (const auto& s : rec.samples) mean += s[a];
    mean /= n;
    double var = 0.0;
    for (const auto& s : rec.samples) var += (s[a] - mean) * (s[a] - mean);
    var /= n;
    const double sd = std::sqrt(var);
    const bool degenerate = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    out.zero_variance[a] = degenerate;
    for (auto& s : out.recording.samples) s[a] = degenerate ? 0.0 : (s[a] - mean) / sd;
  }
  return out;
}

inline std::vector<double> magnitude(const Recording& rec) {
  std::vector<double> m(rec.samples.size());
  std::transform(rec.samples.begin(), rec.samples.end(), m.begin(),
                 [](const Sample3& s) { return std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]); });
  return m;
}

/// Start offsets of the sliding analysis frames; the trailing remainder is
/// dropped.
inline std::vector<std::size_t> frame_offsets(std::size_t series_len, const SpectroConfig& cfg) {
  const auto frame_len = static_cast<std::size_t>(cfg.frame_len());
  const auto hop = static_cast<std::size_t>(cfg.hop_len());
  if (series_len < frame_len) {
    fail(ErrorCode::TooShort, "series of " + std::to_string(series_len) + " samples is shorter than one frame (" +
                                  std::to_string(frame_len) + ")");
  }
  const std::size_t count = (series_len - frame_len) / hop + 1;
  std::vector<std::size_t> offsets(count);
  for (std::size_t i = 0; i < count; ++i) offsets[i] = i * hop;
  return offsets;
}

inline std::vector<std::vector<double>> frame_windows(std::span<const double> series, const SpectroConfig& cfg) {
  const auto frame_len = static_cast<std::size_t>(cfg.frame_len());
  std::vector<std::vector<double>> frames;
  for (std::size_t off : frame_offsets(series.size(), cfg)) {
    frames.emplace_back(series.begin() + static_cast<std::ptrdiff_t>(off),
                        series.begin() + static_cast<std::ptrdiff_t>(off + frame_len));
  }
  return frames;
}

/// Periodic Hann window.
inline std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int i = 0; i < length; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
  return w;
}

/// Hann-windowed STFT magnitude of one analysis frame, zero-padded to
/// fft_len, Nyquist bin and frames beyond time_bins trimmed.
inline RawSpectrogram stft_spectrogram(std::span<const double> frame, const SpectroConfig& cfg) {
  if (static_cast<int>(frame.size()) != cfg.frame_len()) {
    fail(ErrorCode::BadFrameLength, "frame has " + std::to_string(frame.size()) + " samples, expected " +
                                        std::to_string(cfg.frame_len()));
  }
  RawSpectrogram out;
  out.time_bins = std::min(cfg.time_bins, cfg.stft_frames());
  out.freq_bins = cfg.freq_bins;
  out.data.assign(static_cast<std::size_t>(out.time_bins) * out.freq_bins, 0.0);

  const auto window = hann_window(cfg.stft_win);
  Eigen::FFT<double> fft;
  std::vector<double> segment(static_cast<std::size_t>(cfg.fft_len));
  std::vector<std::complex<double>> spectrum;
  for (int t = 0; t < out.time_bins; ++t) {
    std::fill(segment.begin(), segment.end(), 0.0);
    const std::size_t start = static_cast<std::size_t>(t) * cfg.stft_hop();
    for (int i = 0; i < cfg.stft_win; ++i) segment[static_cast<std::size_t>(i)] = frame[start + i] * window[static_cast<std::size_t>(i)];
    fft.fwd(spectrum, segment);
    for (int f = 0; f < out.freq_bins; ++f) {
      out.data[static_cast<std::size_t>(t) * out.freq_bins + f] = std::abs(spectrum[static_cast<std::size_t>(f)]);
    }
  }
  return out;
}

/// Linear-interpolated order statistic (q in [0,1]) of the values.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Divides by the image's own 99th percentile and clips to [0,1]. A zero
/// percentile yields an all-zero image. Metadata fields are left default.
inline SpectrogramImage percentile_normalize(const RawSpectrogram& spec) {
  SpectrogramImage img;
  img.time_bins = spec.time_bins;
  img.freq_bins = spec.freq_bins;
  img.data.assign(spec.data.size(), 0.0f);
  const double p99 = percentile(spec.data, 0.99);
  if (!(p99 > 0.0)) return img;
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    img.data[i] = static_cast<float>(std::clamp(spec.data[i] / p99, 0.0, 1.0));
  }
  return img;
}

/// Full pipeline for one device: normalize, magnitude, frame within each
/// labeled segment, STFT, percentile scaling. Segments shorter than a frame
/// produce no images.
inline ImageSet featurize_recording(const Recording& rec, const std::vector<LabelSegment>& labels,
                                    const SpectroConfig& cfg) {
  if (rec.rate_hz != cfg.rate_hz) {
    fail(ErrorCode::UnsupportedRate, "recording at " + std::to_string(rec.rate_hz) + " Hz, config at " +
                                         std::to_string(cfg.rate_hz) + " Hz");
  }
  const auto normalized = normalize_channels(rec);
  const auto mag = magnitude(normalized.recording);
  ImageSet out;
  for (const auto& range : ingest::align_labels(rec, labels)) {
    if (range.size() < static_cast<std::size_t>(cfg.frame_len())) continue;
    const std::span<const double> seg(mag.data() + range.begin, range.size());
    for (std::size_t off : frame_offsets(seg.size(), cfg)) {
      auto img = std::make_shared<SpectrogramImage>(
          percentile_normalize(stft_spectrogram(seg.subspan(off, static_cast<std::size_t>(cfg.frame_len())), cfg)));
      img->location = rec.location;
      img->user_id = rec.user_id;
      img->activity = range.activity;
      img->rate_hz = cfg.rate_hz;
      img->frame_start_unix_s = rec.timestamp(range.begin + off);
      out.push_back(std::move(img));
    }
  }
  return out;
}

}  // namespace motionkit::features
