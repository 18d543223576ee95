#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "motionkit/ingest/types.hpp"

namespace motionkit::ingest {

namespace detail {

/// First sample index whose timestamp is >= t. The arithmetic estimate is
/// corrected against `Recording::timestamp` so boundaries agree exactly with
/// the per-sample membership predicate.
inline std::size_t first_at_or_after(const Recording& rec, double t) {
  const std::size_t n = rec.samples.size();
  const double est = std::ceil((t - rec.t0_unix_s) * rec.rate_hz);
  std::size_t i = est <= 0.0 ? 0 : std::min<std::size_t>(n, static_cast<std::size_t>(est));
  while (i > 0 && rec.timestamp(i - 1) >= t) --i;
  while (i < n && rec.timestamp(i) < t) ++i;
  return i;
}

}  // namespace detail

/// Maps label segments onto sample index ranges. A sample belongs to a
/// segment when start <= t < stop; samples outside every segment are dropped.
inline std::vector<LabeledRange> align_labels(const Recording& rec, std::vector<LabelSegment> labels) {
  std::sort(labels.begin(), labels.end(),
            [](const LabelSegment& a, const LabelSegment& b) { return a.start_unix_s < b.start_unix_s; });
  std::vector<LabeledRange> out;
  for (const auto& seg : labels) {
    const std::size_t begin = detail::first_at_or_after(rec, seg.start_unix_s);
    const std::size_t end = detail::first_at_or_after(rec, seg.stop_unix_s);
    if (end > begin) out.push_back({begin, end, seg.activity});
  }
  return out;
}

}  // namespace motionkit::ingest
