#pragma once

#include <vector>

#include "motionkit/features/spectrogram.hpp"
#include "motionkit/ingest/io.hpp"
#include "motionkit/ingest/resample.hpp"

namespace motionkit::features {

/// Featurizes every recording of a session at `cfg.rate_hz`. Recordings at
/// another rate are resampled first.
inline ImageSet featurize_session(const ingest::Session& session, const SpectroConfig& cfg) {
  ImageSet out;
  for (const auto& rec : session.recordings) {
    const auto images = rec.rate_hz == cfg.rate_hz ? featurize_recording(rec, session.labels, cfg)
                                                   : featurize_recording(ingest::resample(rec, cfg.rate_hz), session.labels, cfg);
    out.insert(out.end(), images.begin(), images.end());
  }
  return out;
}

inline ImageSet featurize_sessions(const std::vector<ingest::Session>& sessions, const SpectroConfig& cfg) {
  ImageSet out;
  for (const auto& s : sessions) {
    const auto images = featurize_session(s, cfg);
    out.insert(out.end(), images.begin(), images.end());
  }
  return out;
}

}  // namespace motionkit::features
