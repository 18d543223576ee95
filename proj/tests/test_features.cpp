#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "motionkit/features/dataset.hpp"
#include "motionkit/features/pipeline.hpp"
#include "motionkit/features/spectransform.hpp"
#include "support/tmpdir.hpp"

using namespace motionkit;
namespace mt = motionkit::testing;
using namespace motionkit::features;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

// O(N^2) one-sided DFT magnitude of the Hann-windowed, zero-padded segment.
double naive_bin(std::span<const double> frame, std::size_t start, const SpectroConfig& cfg, int k) {
  std::complex<double> acc = 0.0;
  for (int n = 0; n < cfg.stft_win; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / cfg.stft_win);
    const double ang = -2.0 * std::numbers::pi * k * n / cfg.fft_len;
    acc += frame[start + static_cast<std::size_t>(n)] * w * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return std::abs(acc);
}

Recording noise_recording(std::size_t n, double rate, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Recording r;
  r.rate_hz = rate;
  r.samples.resize(n);
  for (auto& s : r.samples) s = {g(rng), g(rng), 1.0 + g(rng)};
  return r;
}

}  // namespace

TEST(Normalize, ThreeValuesBecomeUnitStd) {
  Recording r;
  r.samples = {{1, 7, 0}, {2, 7, 1}, {3, 7, 2}};
  const auto n = normalize_channels(r);
  const double s = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(n.recording.samples[0][0], -1.0 / s, 1e-12);
  EXPECT_NEAR(n.recording.samples[1][0], 0.0, 1e-12);
  EXPECT_NEAR(n.recording.samples[2][0], 1.0 / s, 1e-12);
  EXPECT_FALSE(n.zero_variance[0]);
}

TEST(Normalize, ConstantAxisFlaggedZero) {
  Recording r;
  r.samples = {{5, 1, 0}, {5, 2, 1}, {5, 3, 2}};
  const auto n = normalize_channels(r);
  EXPECT_TRUE(n.zero_variance[0]);
  EXPECT_FALSE(n.zero_variance[1]);
  for (const auto& s : n.recording.samples) EXPECT_EQ(s[0], 0.0);
}

TEST(Normalize, RandomStatistics) {
  const auto n = normalize_channels(noise_recording(10000, 100.0, 11));
  for (int a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (const auto& s : n.recording.samples) mean += s[a];
    mean /= 10000.0;
    double var = 0.0;
    for (const auto& s : n.recording.samples) var += (s[a] - mean) * (s[a] - mean);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(var / 10000.0) - 1.0), 1e-9);
  }
}

TEST(Magnitude, Examples) {
  Recording r;
  r.samples = {{0, 0, 0}, {3, 4, 0}};
  const auto m = magnitude(r);
  EXPECT_EQ(m[0], 0.0);
  EXPECT_EQ(m[1], 5.0);
  const auto rnd = noise_recording(200, 100.0, 4);
  const auto mr = magnitude(rnd);
  for (std::size_t i = 0; i < mr.size(); ++i) {
    const auto& s = rnd.samples[i];
    EXPECT_NEAR(mr[i], std::hypot(s[0], s[1], s[2]), 1e-12);
  }
}

TEST(Frames, CountsAndTooShort) {
  const auto cfg = rate_config(100);
  const std::vector<double> a(6000, 0.0), b(512, 0.0), c(511, 0.0);
  const auto fa = frame_windows(a, cfg);
  EXPECT_EQ(fa.size(), 86u);
  EXPECT_EQ(fa.back().size(), 512u);
  EXPECT_EQ(frame_windows(b, cfg).size(), 1u);
  EXPECT_EQ(code_of([&] { frame_windows(c, cfg); }), ErrorCode::TooShort);
}

TEST(Stft, ShapeAndBadLength) {
  const auto cfg = rate_config(100);
  const std::vector<double> f(512, 0.0);
  const auto s = stft_spectrogram(f, cfg);
  EXPECT_EQ(s.time_bins, 128);
  EXPECT_EQ(s.freq_bins, 128);
  for (double v : s.data) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(code_of([&] { stft_spectrogram(std::vector<double>(500, 0.0), cfg); }), ErrorCode::BadFrameLength);
}

TEST(Stft, TenHertzSinePeaksNearBin26) {
  const auto cfg = rate_config(100);
  std::vector<double> f(512);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(i) / 100.0);
  const auto s = stft_spectrogram(f, cfg);
  for (int t = 0; t < s.time_bins; ++t) {
    int best = 0;
    for (int k = 1; k < s.freq_bins; ++k) {
      if (s.at(t, k) > s.at(t, best)) best = k;
    }
    EXPECT_NEAR(best, 26, 1) << "column " << t;
  }
}

TEST(Stft, MatchesNaiveDft) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (double rate : {100.0, 25.0, 10.0}) {
    const auto cfg = rate_config(rate);
    std::vector<double> f(static_cast<std::size_t>(cfg.frame_len()));
    for (auto& v : f) v = g(rng);
    const auto s = stft_spectrogram(f, cfg);
    double worst = 0.0;
    for (int t = 0; t < s.time_bins; ++t) {
      for (int k = 0; k < s.freq_bins; ++k) {
        worst = std::max(worst, std::abs(s.at(t, k) - naive_bin(f, static_cast<std::size_t>(t) * cfg.stft_hop(), cfg, k)));
      }
    }
    EXPECT_LT(worst, 1e-6) << rate << " Hz";
  }
}

TEST(Stft, EnergyMonotoneInScale) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const auto cfg = rate_config(100);
  std::vector<double> f(512);
  for (auto& v : f) v = g(rng);
  double prev = -1.0;
  for (double scale : {0.0, 0.1, 0.5, 1.0, 2.0, 10.0}) {
    std::vector<double> x(f);
    for (auto& v : x) v *= scale;
    const auto s = stft_spectrogram(x, cfg);
    double e = 0.0;
    for (double v : s.data) e += v * v;
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(Percentile, ConstantZeroAndRandom) {
  RawSpectrogram s{4, 5, std::vector<double>(20, 3.5)};
  for (float v : percentile_normalize(s).data) EXPECT_EQ(v, 1.0f);
  s.data.assign(20, 0.0);
  for (float v : percentile_normalize(s).data) EXPECT_EQ(v, 0.0f);

  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  RawSpectrogram r{128, 128, std::vector<double>(128 * 128)};
  for (auto& v : r.data) v = e(rng);
  std::vector<double> sorted(r.data);
  std::sort(sorted.begin(), sorted.end());
  const double pos = 0.99 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double p99 = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
  const auto img = percentile_normalize(r);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    ones += img.data[i] == 1.0f;
    EXPECT_NEAR(img.data[i], std::min(1.0, r.data[i] / p99), 1e-6);
  }
  EXPECT_LE(ones, img.data.size() / 100 + 1);
}

TEST(RateConfig, TableShapes) {
  struct Row {
    double rate;
    int nfft, t, f;
  };
  for (const Row& r : {Row{100, 256, 128, 128}, Row{75, 192, 96, 96}, Row{50, 128, 96, 64}, Row{25, 64, 96, 32},
                       Row{10, 26, 38, 13}}) {
    const auto cfg = rate_config(r.rate);
    EXPECT_EQ(cfg.fft_len, r.nfft);
    EXPECT_EQ(cfg.stft_win, static_cast<int>(std::lround(128.0 * r.rate / 100.0)));
    std::vector<double> frame(static_cast<std::size_t>(cfg.frame_len()), 0.25);
    const auto s = stft_spectrogram(frame, cfg);
    EXPECT_EQ(s.time_bins, r.t) << r.rate;
    EXPECT_EQ(s.freq_bins, r.f) << r.rate;
  }
  EXPECT_EQ(rate_config(100).stft_overlap, 125);
  EXPECT_EQ(rate_config(25).stft_overlap, 31);
  EXPECT_EQ(code_of([] { rate_config(60); }), ErrorCode::UnsupportedRate);
}

TEST(Pipeline, OutputInUnitRangeAndLabelled) {
  auto rec = noise_recording(3000, 100.0, 13);
  rec.user_id = "u7";
  rec.location = BodySite::Thigh;
  rec.t0_unix_s = 100.0;
  for (std::size_t i = 0; i < rec.samples.size(); ++i) rec.samples[i][2] += 1e6 * (i % 97 == 0);
  const auto imgs = featurize_recording(rec, {{Activity::Running, 100.0, 120.0}, {Activity::Walking, 120.0, 125.0}},
                                        rate_config(100));
  ASSERT_EQ(imgs.size(), static_cast<std::size_t>((2000 - 512) / 64 + 1));
  for (const auto& im : imgs) {
    EXPECT_EQ(im->activity, Activity::Running);
    EXPECT_EQ(im->location, Location(BodySite::Thigh));
    for (float v : im->data) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  EXPECT_DOUBLE_EQ(imgs[1]->frame_start_unix_s, 100.64);
}

TEST(Pipeline, ResamplesForeignRate) {
  ingest::Session s;
  auto rec = noise_recording(4000, 100.0, 1);
  rec.location = BodySite::Wrist;
  s.recordings.push_back(rec);
  s.labels = {{Activity::Cycling, 0.0, 40.0}};
  const auto imgs = featurize_session(s, rate_config(25));
  ASSERT_FALSE(imgs.empty());
  EXPECT_EQ(imgs[0]->time_bins, 96);
  EXPECT_EQ(imgs[0]->freq_bins, 32);
  EXPECT_EQ(imgs[0]->rate_hz, 25.0);
}

TEST(Dataset, SaveLoadRoundtrip) {
  mt::TempDir dir("dataset");
  auto rec = noise_recording(1500, 100.0, 2);
  rec.user_id = "u3";
  rec.location = BodySite::Head;
  auto imgs = featurize_recording(rec, {{Activity::Walking, 0.0, 15.0}}, rate_config(100));
  save_dataset(dir.path(), imgs);
  const auto back = load_dataset(dir.path());
  ASSERT_EQ(back.size(), imgs.size());
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    EXPECT_EQ(back[i]->data, imgs[i]->data);
    EXPECT_EQ(back[i]->user_id, "u3");
    EXPECT_EQ(back[i]->location, Location(BodySite::Head));
    EXPECT_EQ(back[i]->activity, Activity::Walking);
    EXPECT_NEAR(back[i]->frame_start_unix_s, imgs[i]->frame_start_unix_s, 1e-3);
  }
}

TEST(SpecTransform, CutoffsAndShapes) {
  EXPECT_EQ(spectransform_cutoff(100, 25), 32);
  EXPECT_EQ(spectransform_cutoff(100, 50), 64);
  SpectrogramImage z;
  z.time_bins = 128;
  z.freq_bins = 128;
  z.rate_hz = 100;
  z.data.assign(128 * 128, 0.0f);
  const auto a = spectransform(z, 25);
  EXPECT_EQ(a.time_bins, 96);
  EXPECT_EQ(a.freq_bins, 32);
  for (float v : a.data) EXPECT_EQ(v, 0.0f);
  const auto b = spectransform(z, 50);
  EXPECT_EQ(b.time_bins, 96);
  EXPECT_EQ(b.freq_bins, 64);
}

TEST(SpecTransform, KeepsOnlyLowBins) {
  // Energy above the kept cutoff must not leak into the result.
  SpectrogramImage s;
  s.time_bins = 128;
  s.freq_bins = 128;
  s.rate_hz = 100;
  s.data.assign(128 * 128, 0.0f);
  for (int t = 0; t < 128; ++t) {
    for (int f = 32; f < 128; ++f) s.data[static_cast<std::size_t>(t) * 128 + f] = 1.0f;
  }
  for (float v : spectransform(s, 25).data) EXPECT_EQ(v, 0.0f);
  for (int t = 0; t < 128; ++t) {
    for (int f = 0; f < 32; ++f) s.data[static_cast<std::size_t>(t) * 128 + f] = 0.75f;
  }
  for (float v : spectransform(s, 25).data) EXPECT_NEAR(v, 0.75f, 1e-6);
}

TEST(SpecTransform, Errors) {
  SpectrogramImage s;
  s.time_bins = 96;
  s.freq_bins = 32;
  s.rate_hz = 25;
  s.data.assign(96 * 32, 0.0f);
  EXPECT_EQ(code_of([&] { spectransform(s, 100); }), ErrorCode::BadDirection);
  s.rate_hz = 100;
  EXPECT_EQ(code_of([&] { spectransform(s, 25); }), ErrorCode::ShapeMismatch);
}
