#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "motionkit/ingest/io.hpp"
#include "motionkit/ingest/manifest.hpp"
#include "motionkit/ingest/types.hpp"
#include "motionkit/nn/tensor.hpp"

namespace motionkit::harness {

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

/// Seeded multi-location stand-in dataset. Every number here is a plausible
/// default, not a measured one.
struct BenchSpec {
  std::uint64_t seed = 7;
  int n_users = 12;
  std::vector<Location> locations = six_locations();
  double rate_hz = 100.0;
  double segment_s = 35.0;  // per activity per user
  double gap_s = 2.0;       // unlabeled transition between segments
  double noise_scale = 1.0;
  Band walk{1.4, 2.2};
  Band run{2.4, 3.2};
  Band cycle{0.8, 1.4};
  double t0_unix_s = 1700000000.0;
  // Pseudo-activity mode renders two new periodic movements (in place of
  // walking and running, labelled 0 and 1) for fine-tuning experiments.
  bool pseudo = false;
  Band pseudo_a{0.45, 0.75};
  Band pseudo_b{3.4, 4.0};

  int n_activities() const { return pseudo ? 2 : kNumActivities; }
};

namespace bench_detail {

using Vec3 = std::array<double, 3>;

constexpr int kHarmonics = 4;

/// How one placement sees each periodic activity.
struct ActivityProfile {
  double gain;                              // g
  // Relative amplitude of k*f0. Phase-aligned harmonics give the peaky,
  // asymmetric heel-strike shape that keeps f0 in the magnitude signal.
  std::array<double, kHarmonics> harmonics;
};

struct LocationProfile {
  ActivityProfile walk, run, cycle;
  Vec3 motion_axis;
  Vec3 posture;  // gravity direction at rest
  double noise;  // g, white
  double burst_gain;
};

inline LocationProfile profile(BodySite site) {
  switch (site) {
    case BodySite::Wrist:
      return {{0.35, {1.0, 0.55, 0.15, 0.05}},
              {0.9, {1.0, 0.45, 0.20, 0.10}},
              {0.14, {1.0, 0.10, 0.35, 0.00}},
              {0.6, 0.2, 0.7}, {0.2, -0.9, 0.3}, 0.020, 1.2};
    case BodySite::Ankle:
      return {{0.6, {1.0, 0.80, 0.45, 0.30}},
              {2.2, {1.0, 0.85, 0.60, 0.45}},
              {0.6, {1.0, 0.20, 0.45, 0.05}},
              {0.7, -0.1, 0.7}, {0.1, 0.95, 0.1}, 0.040, 0.6};
    case BodySite::Thigh:
      return {{0.6, {1.0, 0.60, 0.25, 0.10}},
              {1.5, {1.0, 0.60, 0.30, 0.15}},
              {0.5, {1.0, 0.15, 0.40, 0.00}},
              {0.8, 0.5, -0.1}, {0.0, 0.2, 0.95}, 0.025, 0.7};
    case BodySite::Head:
      return {{0.25, {1.0, 0.50, 0.10, 0.00}},
              {0.7, {1.0, 0.30, 0.12, 0.05}},
              {0.08, {1.0, 0.20, 0.30, 0.05}},
              {0.3, 0.9, 0.3}, {0.0, 0.0, 1.0}, 0.015, 1.0};
    case BodySite::Chest:
      return {{0.3, {1.0, 0.55, 0.20, 0.05}},
              {0.8, {1.0, 0.50, 0.25, 0.10}},
              {0.10, {1.0, 0.15, 0.30, 0.00}},
              {0.9, 0.1, 0.4}, {0.0, 0.95, 0.2}, 0.015, 0.8};
    case BodySite::Shoulder:
    default:
      return {{0.3, {1.0, 0.50, 0.25, 0.10}},
              {0.85, {1.0, 0.35, 0.30, 0.12}},
              {0.10, {1.0, 0.25, 0.35, 0.05}},
              {0.5, -0.1, 0.85}, {0.3, 0.9, 0.0}, 0.018, 0.9};
  }
}

inline Vec3 normalized(Vec3 v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline Vec3 jitter(Vec3 v, double amount, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, amount);
  for (auto& c : v) c += d(rng);
  return normalized(v);
}

/// Any unit vector orthogonal to `a`.
inline Vec3 orthogonal(const Vec3& a) {
  Vec3 b = std::abs(a[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const double d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  for (int i = 0; i < 3; ++i) b[i] -= d * a[i];
  return normalized(b);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Per-user gait parameters, shared by every placement on that user.
struct UserDraw {
  std::array<double, 3> f0;          // walk, run, cycle
  std::array<double, 3> mod_period;  // cadence wander period, s
  std::array<double, 3> mod_phase;
  std::array<std::array<double, kHarmonics>, 3> harmonic_phase;
  double amp_scale;
  std::uint64_t burst_seed;
};

/// Pseudo mode swaps the walking and running waveforms for a slow, smooth
/// movement and a fast one with a strong third harmonic.
inline LocationProfile pseudo_profile(LocationProfile p) {
  p.walk = {1.3 * p.walk.gain, {1.0, 0.10, 0.30, 0.0}};
  p.run = {0.7 * p.run.gain, {1.0, 0.20, 0.05, 0.0}};
  return p;
}

inline UserDraw draw_user(const BenchSpec& spec, int user) {
  std::mt19937_64 rng(nn::derive_seed(spec.seed, spec.pseudo ? 0xB0B : 0xA11CE, static_cast<std::uint64_t>(user)));
  UserDraw u{};
  const std::array<Band, 3> bands{spec.pseudo ? spec.pseudo_a : spec.walk, spec.pseudo ? spec.pseudo_b : spec.run,
                                  spec.cycle};
  for (int a = 0; a < 3; ++a) {
    // Stay clear of the band edges so cadence wander keeps f0 inside.
    const double margin = 0.06 * (bands[a].hi - bands[a].lo);
    u.f0[a] = uniform(rng, bands[a].lo + margin, bands[a].hi - margin);
    u.mod_period[a] = uniform(rng, 8.0, 20.0);
    u.mod_phase[a] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    for (auto& p : u.harmonic_phase[a]) p = uniform(rng, -0.3, 0.3);
  }
  u.amp_scale = uniform(rng, 0.8, 1.2);
  u.burst_seed = rng();
  return u;
}

}  // namespace bench_detail

inline std::string bench_user_id(int user) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%02d", user + 1);
  return buf;
}

inline std::string bench_user_id(const BenchSpec& spec, int user) {
  return spec.pseudo ? "p" + bench_user_id(user).substr(1) : bench_user_id(user);
}

/// Label segments of one user's session: walking, running, cycling, other,
/// each `segment_s` long, separated by `gap_s`. Pseudo mode has two.
inline std::vector<LabelSegment> bench_labels(const BenchSpec& spec, int user) {
  const double t0 = spec.t0_unix_s + 1000.0 * user;
  std::vector<LabelSegment> out;
  for (int a = 0; a < spec.n_activities(); ++a) {
    const double start = t0 + spec.gap_s + a * (spec.segment_s + spec.gap_s);
    out.push_back({static_cast<Activity>(a), start, start + spec.segment_s});
  }
  return out;
}

/// Renders one placement's 3-axis signal for a whole session.
inline Recording render_recording(const BenchSpec& spec, int user, const Location& loc) {
  using namespace bench_detail;
  const auto u = draw_user(spec, user);
  const auto prof = spec.pseudo ? pseudo_profile(profile(loc.site)) : profile(loc.site);
  std::mt19937_64 rng(nn::derive_seed(spec.seed, static_cast<std::uint64_t>(user) + (spec.pseudo ? 5001 : 1),
                                      static_cast<std::uint64_t>(loc.site) + 101));
  const Vec3 axis = jitter(prof.motion_axis, 0.1, rng);
  const Vec3 side = orthogonal(axis);
  const std::array<const ActivityProfile*, 3> acts{&prof.walk, &prof.run, &prof.cycle};
  const Vec3 rest = jitter(prof.posture, 0.2, rng);
  // Each activity tilts the device along its motion axis, so after per-axis
  // standardization the walking magnitude rides on an offset instead of
  // being rectified to 2 f0.
  constexpr std::array<double, kNumActivities> kTilt{0.9, -0.5, -0.9, 0.3};
  std::array<Vec3, kNumActivities> posture{};
  for (int a = 0; a < kNumActivities; ++a) {
    posture[a] = normalized({rest[0] + kTilt[a] * axis[0], rest[1] + kTilt[a] * axis[1], rest[2] + kTilt[a] * axis[2]});
  }
  const double drift_w = uniform(rng, 0.01, 0.03);
  const double drift_p = uniform(rng, 0.0, 6.28);

  Recording rec;
  rec.user_id = bench_user_id(spec, user);
  rec.location = loc;
  rec.device = "bench-" + loc.name();
  rec.rate_hz = spec.rate_hz;
  rec.t0_unix_s = spec.t0_unix_s + 1000.0 * user;
  const int n_acts = spec.n_activities();
  const double total_s = spec.gap_s + n_acts * (spec.segment_s + spec.gap_s);
  const auto n = static_cast<std::size_t>(std::llround(total_s * spec.rate_hz));
  rec.samples.resize(n);

  const auto labels = bench_labels(spec, user);
  std::normal_distribution<double> white(0.0, 1.0);
  // Burst timing comes from the user stream so all placements see the same
  // movements; their strength is per placement.
  std::mt19937_64 burst_rng(u.burst_seed);
  std::vector<std::array<double, 3>> bursts;  // start, duration, amplitude
  if (n_acts > 3) {
    const auto& seg = labels[3];
    double t = seg.start_unix_s - rec.t0_unix_s;
    const double end = seg.stop_unix_s - rec.t0_unix_s;
    while (t < end) {
      const double dur = uniform(burst_rng, 0.3, 1.2);
      bursts.push_back({t, dur, uniform(burst_rng, 0.2, 0.6)});
      t += dur + uniform(burst_rng, 0.3, 1.5);
    }
  }
  Vec3 burst_state{0, 0, 0};
  std::array<double, 3> theta{0, 0, 0};
  const double dt = 1.0 / spec.rate_hz;
  std::size_t next_burst = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double abs_t = rec.t0_unix_s + t;
    int act = -1;
    for (int a = 0; a < n_acts; ++a) {
      if (abs_t >= labels[a].start_unix_s && abs_t < labels[a].stop_unix_s) act = a;
    }
    Vec3 g = act >= 0 ? posture[act] : rest;
    // Slow orientation drift.
    const double wob = 0.04 * std::sin(2.0 * std::numbers::pi * drift_w * t + drift_p);
    g = normalized({g[0] + wob, g[1] - 0.5 * wob, g[2] + 0.3 * wob});
    Vec3 a{g[0], g[1], g[2]};
    if (act >= 0 && act < 3) {
      const auto& ap = *acts[act];
      const double f = u.f0[act] * (1.0 + 0.03 * std::sin(2.0 * std::numbers::pi * t / u.mod_period[act] + u.mod_phase[act]));
      theta[act] += 2.0 * std::numbers::pi * f * dt;
      double along = 0.0, across = 0.0;
      for (int k = 0; k < kHarmonics; ++k) {
        const double ph = (k + 1) * theta[act] + u.harmonic_phase[act][k];
        along += ap.harmonics[k] * std::cos(ph);
        across += ap.harmonics[k] * std::sin(ph + 0.4);
      }
      const double amp = ap.gain * u.amp_scale;
      for (int c = 0; c < 3; ++c) a[c] += amp * (along * axis[c] + 0.25 * across * side[c]);
    } else if (act == 3) {
      while (next_burst < bursts.size() && bursts[next_burst][0] + bursts[next_burst][1] < t) ++next_burst;
      double amp = 0.0;
      if (next_burst < bursts.size() && t >= bursts[next_burst][0]) amp = bursts[next_burst][2] * prof.burst_gain;
      for (int c = 0; c < 3; ++c) {
        burst_state[c] = 0.85 * burst_state[c] + 0.15 * white(rng);
        a[c] += amp * 2.5 * burst_state[c];
      }
    }
    for (int c = 0; c < 3; ++c) a[c] += spec.noise_scale * prof.noise * white(rng);
    rec.samples[i] = a;
  }
  return rec;
}

inline ingest::Session bench_session(const BenchSpec& spec, int user) {
  ingest::Session s;
  s.manifest.session_id = (spec.pseudo ? "q" : "s") + bench_user_id(user).substr(1);
  s.manifest.user_id = bench_user_id(spec, user);
  s.labels = bench_labels(spec, user);
  for (const auto& loc : spec.locations) s.recordings.push_back(render_recording(spec, user, loc));
  return s;
}

inline std::vector<ingest::Session> generate_benchmark(const BenchSpec& spec) {
  std::vector<ingest::Session> out;
  for (int u = 0; u < spec.n_users; ++u) out.push_back(bench_session(spec, u));
  return out;
}

/// Writes the benchmark in the ingest formats:
///   <dir>/manifest.jsonl, <dir>/labels.csv, <dir>/<user>/<location>.csv
/// and returns the manifest path.
inline std::filesystem::path write_benchmark(const BenchSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string manifest;
  std::string labels = std::string(ingest::kLabelHeader) + "\n";
  for (int u = 0; u < spec.n_users; ++u) {
    auto s = bench_session(spec, u);
    s.manifest.label_file = dir / "labels.csv";
    const auto udir = dir / s.manifest.user_id;
    std::filesystem::create_directories(udir);
    for (const auto& rec : s.recordings) {
      const auto path = udir / (rec.location.name() + ".csv");
      csv::write_text(path, ingest::recording_csv(rec));
      s.manifest.recordings.push_back({path, rec.location, rec.rate_hz});
    }
    const auto body = ingest::labels_csv(s.manifest.session_id, s.labels);
    labels += body.substr(body.find('\n') + 1);
    manifest += ingest::manifest_line(s.manifest, dir) + "\n";
  }
  csv::write_text(dir / "labels.csv", labels);
  csv::write_text(dir / "manifest.jsonl", manifest);
  return dir / "manifest.jsonl";
}

}  // namespace motionkit::harness
