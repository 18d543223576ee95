#pragma once

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionkit/error.hpp"
#include "motionkit/ingest/csv.hpp"
#include "motionkit/ingest/types.hpp"

namespace motionkit::ingest {

struct RecordingRef {
  std::filesystem::path path;
  Location location;
  double rate_hz = 100.0;
};

struct SessionManifest {
  std::string session_id;
  std::string user_id;
  std::vector<RecordingRef> recordings;
  std::filesystem::path label_file;
};

/// Parses one manifest line. Relative paths are resolved against `base_dir`.
inline SessionManifest parse_manifest_line(const std::string& line, const std::filesystem::path& base_dir,
                                           std::size_t line_no = 1) {
  const std::string where = " (line " + std::to_string(line_no) + ")";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedManifest, std::string("bad JSON") + where + ": " + e.what());
  }
  auto require = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
    if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::MalformedManifest, std::string("missing field '") + key + "'" + where);
    return obj.at(key);
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  SessionManifest m;
  try {
    m.session_id = require(j, "session_id").get<std::string>();
    m.user_id = require(j, "user_id").get<std::string>();
    m.label_file = resolve(require(j, "labels").get<std::string>());
    const auto& recs = require(j, "recordings");
    if (!recs.is_array()) fail(ErrorCode::MalformedManifest, "'recordings' must be an array" + where);
    std::set<std::string> seen;
    for (const auto& r : recs) {
      RecordingRef ref;
      ref.path = resolve(require(r, "path").get<std::string>());
      ref.location = Location::parse(require(r, "location").get<std::string>());
      ref.rate_hz = require(r, "rate_hz").get<double>();
      if (!(ref.rate_hz > 0.0)) fail(ErrorCode::MalformedManifest, "rate_hz must be positive" + where);
      if (!seen.insert(ref.location.name()).second) {
        fail(ErrorCode::DuplicateLocation, "location " + ref.location.name() + " listed twice in session " +
                                               m.session_id);
      }
      m.recordings.push_back(std::move(ref));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedManifest, std::string("wrong field type") + where + ": " + e.what());
  }
  return m;
}

inline std::vector<SessionManifest> parse_manifest(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  std::vector<SessionManifest> sessions;
  const auto base = path.parent_path();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    sessions.push_back(parse_manifest_line(lines[i], base, i + 1));
  }
  if (sessions.empty()) fail(ErrorCode::MalformedManifest, "manifest " + path.string() + " has no sessions");
  return sessions;
}

inline std::string manifest_line(const SessionManifest& m, const std::filesystem::path& base_dir) {
  auto rel = [&](const std::filesystem::path& p) { return p.lexically_relative(base_dir).generic_string(); };
  nlohmann::ordered_json j;
  j["session_id"] = m.session_id;
  j["user_id"] = m.user_id;
  j["labels"] = rel(m.label_file);
  j["recordings"] = nlohmann::ordered_json::array();
  for (const auto& r : m.recordings) {
    nlohmann::ordered_json e;
    e["path"] = rel(r.path);
    e["location"] = r.location.name();
    e["rate_hz"] = r.rate_hz;
    j["recordings"].push_back(e);
  }
  return j.dump();
}

}  // namespace motionkit::ingest
