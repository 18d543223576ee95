#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "motionkit/harness/metrics.hpp"
#include "motionkit/harness/train.hpp"

namespace motionkit::harness {

struct AggregationConfig {
  double window_s = 30.0;
  double hop_s = 0.64;
  bool include_other_in_macro = false;
};

/// One frame-level decision, in time order.
struct FramePrediction {
  double t = 0.0;  // frame start, unix seconds
  int truth = 0;
  int pred = 0;
};

struct WindowPrediction {
  double t_start = 0.0;
  int truth = 0;
  int pred = 0;
  int frames = 0;
};

inline int frames_per_window(const AggregationConfig& cfg) {
  const int n = static_cast<int>(std::floor(cfg.window_s / cfg.hop_s + 1e-9));
  if (n < 2) {
    fail(ErrorCode::WindowTooSmall, "window of " + std::to_string(cfg.window_s) + " s spans " + std::to_string(n) +
                                        " frame(s) at hop " + std::to_string(cfg.hop_s) + " s");
  }
  return n;
}

/// Most frequent value; ties go to the lowest class index.
inline int majority(std::span<const int> values) {
  std::array<int, kNumActivities> counts{};
  for (int v : values) ++counts.at(static_cast<std::size_t>(v));
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

/// Splits time-ordered frames into runs with one ground-truth label and no
/// gap larger than 1.5 hops.
inline std::vector<std::span<const FramePrediction>> contiguous_segments(std::span<const FramePrediction> frames,
                                                                         double hop_s) {
  std::vector<std::span<const FramePrediction>> out;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= frames.size(); ++i) {
    const bool cut = i == frames.size() || frames[i].truth != frames[i - 1].truth ||
                     frames[i].t - frames[i - 1].t > 1.5 * hop_s;
    if (cut) {
      if (i > begin) out.push_back(frames.subspan(begin, i - begin));
      begin = i;
    }
  }
  return out;
}

/// Tumbling-window majority vote. Each contiguous segment of F frames yields
/// floor(F * hop / window) windows of floor(window / hop) consecutive frames;
/// leftover frames at the segment tail are dropped.
inline std::vector<WindowPrediction> aggregate_activity(std::span<const FramePrediction> frames,
                                                        const AggregationConfig& cfg) {
  const int n = frames_per_window(cfg);
  std::vector<WindowPrediction> out;
  std::vector<int> truth, pred;
  for (const auto seg : contiguous_segments(frames, cfg.hop_s)) {
    const auto windows =
        static_cast<std::size_t>(std::floor(static_cast<double>(seg.size()) * cfg.hop_s / cfg.window_s + 1e-9));
    for (std::size_t w = 0; w < windows; ++w) {
      const auto chunk = seg.subspan(w * static_cast<std::size_t>(n), static_cast<std::size_t>(n));
      truth.clear();
      pred.clear();
      for (const auto& f : chunk) {
        truth.push_back(f.truth);
        pred.push_back(f.pred);
      }
      out.push_back({chunk.front().t, majority(truth), majority(pred), n});
    }
  }
  return out;
}

inline EvalResult score_windows(const std::vector<WindowPrediction>& windows, bool include_other = false) {
  std::vector<int> truth, pred;
  for (const auto& w : windows) {
    truth.push_back(w.truth);
    pred.push_back(w.pred);
  }
  return score(truth, pred, include_other);
}

/// Frame-level predictions of `net` on `images`, grouped into one
/// time-ordered stream per (user, location).
inline std::vector<std::vector<FramePrediction>> frame_streams(nn::MotionNet<float>& net, const ImageSet& images) {
  const ImageSet ordered = sorted(images);
  const auto pred = predict(net, ordered);
  std::vector<std::vector<FramePrediction>> out;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& img = *ordered[i];
    if (i == 0 || img.user_id != ordered[i - 1]->user_id || img.location != ordered[i - 1]->location) out.emplace_back();
    out.back().push_back({img.frame_start_unix_s, static_cast<int>(img.activity), pred[i]});
  }
  return out;
}

struct AggregationResult {
  EvalResult frame;
  EvalResult activity;
  std::vector<WindowPrediction> windows;
};

inline AggregationResult aggregate_streams(const std::vector<std::vector<FramePrediction>>& streams,
                                           const AggregationConfig& cfg) {
  AggregationResult r;
  std::vector<int> truth, pred;
  for (const auto& s : streams) {
    for (const auto& f : s) {
      truth.push_back(f.truth);
      pred.push_back(f.pred);
    }
    const auto w = aggregate_activity(s, cfg);
    r.windows.insert(r.windows.end(), w.begin(), w.end());
  }
  r.frame = score(truth, pred, cfg.include_other_in_macro);
  r.activity = score_windows(r.windows, cfg.include_other_in_macro);
  return r;
}

inline AggregationResult aggregate_model(nn::MotionNet<float>& net, const ImageSet& images, const AggregationConfig& cfg) {
  return aggregate_streams(frame_streams(net, images), cfg);
}

struct CurvePoint {
  double window_s = 0.0;
  std::vector<double> activity_f1;  // per location
  double average = 0.0;
};

/// Activity-level F1 per location as a function of window length.
inline std::vector<CurvePoint> aggregation_curve(nn::MotionNet<float>& net, const ImageSet& images,
                                                 const std::vector<Location>& locations,
                                                 const std::vector<double>& windows_s, bool include_other = false) {
  std::vector<std::vector<std::vector<FramePrediction>>> per_loc;
  for (const auto& loc : locations) {
    per_loc.push_back(frame_streams(net, select(images, [&](const features::SpectrogramImage& i) { return i.location == loc; })));
  }
  std::vector<CurvePoint> out;
  for (double w : windows_s) {
    AggregationConfig cfg{w, 0.64, include_other};
    CurvePoint p{w, {}, 0.0};
    for (const auto& streams : per_loc) {
      p.activity_f1.push_back(aggregate_streams(streams, cfg).activity.macro_f1);
      p.average += p.activity_f1.back();
    }
    if (!locations.empty()) p.average /= static_cast<double>(locations.size());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace motionkit::harness
