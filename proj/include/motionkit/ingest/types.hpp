#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "motionkit/error.hpp"

namespace motionkit {

enum class BodySite { Wrist, Ankle, Thigh, Head, Chest, Shoulder, Hat, Belt, Shoe, Other };

/// On-body placement. Sites outside the fixed list (e.g. a new platform) keep
/// their free-form name in `custom`.
struct Location {
  BodySite site = BodySite::Wrist;
  std::string custom;

  Location() = default;
  Location(BodySite s) : site(s) {}  // NOLINT(google-explicit-constructor)
  static Location other(std::string name) {
    Location l(BodySite::Other);
    l.custom = std::move(name);
    return l;
  }

  std::string name() const {
    switch (site) {
      case BodySite::Wrist: return "Wrist";
      case BodySite::Ankle: return "Ankle";
      case BodySite::Thigh: return "Thigh";
      case BodySite::Head: return "Head";
      case BodySite::Chest: return "Chest";
      case BodySite::Shoulder: return "Shoulder";
      case BodySite::Hat: return "Hat";
      case BodySite::Belt: return "Belt";
      case BodySite::Shoe: return "Shoe";
      case BodySite::Other: return custom.empty() ? std::string("Other") : custom;
    }
    return "Other";
  }

  /// Case-insensitive; unknown names become OtherLocation(name).
  static Location parse(std::string_view text) {
    std::string lower;
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static constexpr std::array<std::pair<std::string_view, BodySite>, 9> kSites{{
        {"wrist", BodySite::Wrist},
        {"ankle", BodySite::Ankle},
        {"thigh", BodySite::Thigh},
        {"head", BodySite::Head},
        {"chest", BodySite::Chest},
        {"shoulder", BodySite::Shoulder},
        {"hat", BodySite::Hat},
        {"belt", BodySite::Belt},
        {"shoe", BodySite::Shoe},
    }};
    for (const auto& [key, site] : kSites) {
      if (lower == key) return Location(site);
    }
    return other(std::string(text));
  }

  friend bool operator==(const Location& a, const Location& b) { return a.name() == b.name(); }
  friend std::strong_ordering operator<=>(const Location& a, const Location& b) {
    if (a.site != b.site) return a.site <=> b.site;
    return a.custom <=> b.custom;
  }
};

/// The six placements of the multi-location benchmark, in canonical order.
inline const std::vector<Location>& six_locations() {
  static const std::vector<Location> kSix{BodySite::Wrist, BodySite::Ankle, BodySite::Thigh,
                                          BodySite::Head,  BodySite::Chest, BodySite::Shoulder};
  return kSix;
}

enum class Activity : int { Walking = 0, Running = 1, Cycling = 2, Other = 3 };

inline constexpr int kNumActivities = 4;

inline std::string activity_name(Activity a) {
  switch (a) {
    case Activity::Walking: return "walking";
    case Activity::Running: return "running";
    case Activity::Cycling: return "cycling";
    case Activity::Other: return "other";
  }
  return "other";
}

inline Activity parse_activity(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "walking") return Activity::Walking;
  if (lower == "running") return Activity::Running;
  if (lower == "cycling") return Activity::Cycling;
  if (lower == "other") return Activity::Other;
  fail(ErrorCode::MalformedManifest, "unknown activity '" + std::string(text) + "'");
}

using Sample3 = std::array<double, 3>;

struct Recording {
  std::string user_id;
  Location location;
  std::string device;
  double rate_hz = 100.0;
  double t0_unix_s = 0.0;
  std::vector<Sample3> samples;

  double timestamp(std::size_t i) const { return t0_unix_s + static_cast<double>(i) / rate_hz; }

  /// Checks the value invariants: positive rate, non-empty, finite samples.
  void validate() const {
    if (!(rate_hz > 0.0)) fail(ErrorCode::EmptySignal, "rate_hz must be positive");
    if (samples.empty()) fail(ErrorCode::EmptySignal, "recording has no samples");
    for (const auto& s : samples) {
      for (double v : s) {
        if (!std::isfinite(v)) fail(ErrorCode::EmptySignal, "non-finite sample value");
      }
    }
  }
};

struct LabelSegment {
  Activity activity = Activity::Other;
  double start_unix_s = 0.0;
  double stop_unix_s = 0.0;
};

/// Half-open sample index range [begin, end) carrying one activity.
struct LabeledRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  Activity activity = Activity::Other;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const LabeledRange&, const LabeledRange&) = default;
};

}  // namespace motionkit
