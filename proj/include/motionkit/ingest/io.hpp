#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "motionkit/error.hpp"
#include "motionkit/ingest/csv.hpp"
#include "motionkit/ingest/manifest.hpp"
#include "motionkit/ingest/types.hpp"

namespace motionkit::ingest {

inline constexpr const char* kRecordingHeader = "t_unix_s,x_g,y_g,z_g";
inline constexpr const char* kLabelHeader = "session_id,activity,start_unix_s,stop_unix_s";

/// Reads a recording CSV. Spacing is assumed uniform at `rate_hz`; only the
/// first timestamp is used (as t0).
inline Recording read_recording_csv(const std::filesystem::path& path, double rate_hz) {
  const auto lines = csv::read_lines(path);
  if (lines.empty() || csv::trim(lines[0]) != kRecordingHeader) {
    fail(ErrorCode::MalformedManifest, "recording " + path.string() + " lacks header " + kRecordingHeader);
  }
  Recording rec;
  rec.rate_hz = rate_hz;
  rec.device = path.stem().string();
  rec.samples.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto cols = csv::split(lines[i]);
    if (cols.size() != 4) fail(ErrorCode::MalformedManifest, path.string() + ": expected 4 columns");
    if (rec.samples.empty()) rec.t0_unix_s = csv::parse_double(cols[0]);
    rec.samples.push_back({csv::parse_double(cols[1]), csv::parse_double(cols[2]), csv::parse_double(cols[3])});
  }
  rec.validate();
  return rec;
}

inline std::string recording_csv(const Recording& rec) {
  std::string out = std::string(kRecordingHeader) + "\n";
  out.reserve(rec.samples.size() * 48);
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    const auto& s = rec.samples[i];
    out += csv::fmt(rec.timestamp(i), 3) + "," + csv::fmt(s[0]) + "," + csv::fmt(s[1]) + "," + csv::fmt(s[2]) + "\n";
  }
  return out;
}

/// Labels for every session in a CSV, keyed by session_id.
inline std::map<std::string, std::vector<LabelSegment>> read_labels_csv(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty() || csv::trim(lines[0]) != kLabelHeader) {
    fail(ErrorCode::MalformedManifest, "labels " + path.string() + " lacks header " + kLabelHeader);
  }
  std::map<std::string, std::vector<LabelSegment>> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto cols = csv::split(lines[i]);
    if (cols.size() != 4) fail(ErrorCode::MalformedManifest, path.string() + ": expected 4 columns");
    LabelSegment seg;
    seg.activity = parse_activity(csv::trim(cols[1]));
    seg.start_unix_s = csv::parse_double(cols[2]);
    seg.stop_unix_s = csv::parse_double(cols[3]);
    if (!(seg.stop_unix_s > seg.start_unix_s)) {
      fail(ErrorCode::MalformedManifest, path.string() + ": segment stop must follow start");
    }
    out[std::string(csv::trim(cols[0]))].push_back(seg);
  }
  return out;
}

inline std::string labels_csv(const std::string& session_id, const std::vector<LabelSegment>& segs) {
  std::string out = std::string(kLabelHeader) + "\n";
  for (const auto& s : segs) {
    out += session_id + "," + activity_name(s.activity) + "," + csv::fmt(s.start_unix_s, 3) + "," +
           csv::fmt(s.stop_unix_s, 3) + "\n";
  }
  return out;
}

/// A fully loaded session: each present device plus the session's labels.
/// Devices missing from the manifest are simply absent.
struct Session {
  SessionManifest manifest;
  std::vector<Recording> recordings;
  std::vector<LabelSegment> labels;
};

inline Session load_session(const SessionManifest& m) {
  Session s;
  s.manifest = m;
  if (!std::filesystem::exists(m.label_file)) {
    fail(ErrorCode::MalformedManifest, "label file missing: " + m.label_file.string());
  }
  auto all = read_labels_csv(m.label_file);
  s.labels = all[m.session_id];
  for (const auto& ref : m.recordings) {
    if (!std::filesystem::exists(ref.path)) fail(ErrorCode::MalformedManifest, "recording missing: " + ref.path.string());
    Recording rec = read_recording_csv(ref.path, ref.rate_hz);
    rec.user_id = m.user_id;
    rec.location = ref.location;
    s.recordings.push_back(std::move(rec));
  }
  return s;
}

}  // namespace motionkit::ingest
