#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "motionkit/features/spectrogram.hpp"
#include "motionkit/ingest/csv.hpp"
#include "motionkit/ingest/tensor_file.hpp"

namespace motionkit::features {

inline constexpr const char* kIndexHeader = "tensor_path,frame_idx,user_id,location,activity,rate_hz,frame_start_unix_s";

/// Persists images as one TensorFile per (user, location), shaped
/// frames x time_bins x freq_bins, plus `index.csv` describing every frame.
inline void save_dataset(const std::filesystem::path& dir, const ImageSet& images) {
  std::vector<std::pair<std::string, std::vector<ImagePtr>>> groups;
  std::map<std::string, std::size_t> group_of;
  for (const auto& img : images) {
    const std::string key = img->user_id + "_" + img->location.name();
    auto [it, inserted] = group_of.try_emplace(key, groups.size());
    if (inserted) groups.push_back({key, {}});
    groups[it->second].second.push_back(img);
  }
  std::string index = std::string(kIndexHeader) + "\n";
  for (const auto& [key, frames] : groups) {
    const auto& first = *frames.front();
    const std::string rel = "tensors/" + key + ".mptn";
    std::vector<float> values;
    values.reserve(frames.size() * first.data.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto& f = *frames[i];
      if (f.time_bins != first.time_bins || f.freq_bins != first.freq_bins) {
        fail(ErrorCode::ShapeMismatch, "mixed image shapes within " + key);
      }
      values.insert(values.end(), f.data.begin(), f.data.end());
      index += rel + "," + std::to_string(i) + "," + f.user_id + "," + f.location.name() + "," +
               activity_name(f.activity) + "," + csv::fmt(f.rate_hz, 0) + "," +
               csv::fmt(f.frame_start_unix_s, 3) + "\n";
    }
    const std::vector<std::uint32_t> shape{static_cast<std::uint32_t>(frames.size()),
                                           static_cast<std::uint32_t>(first.time_bins),
                                           static_cast<std::uint32_t>(first.freq_bins)};
    write_tensor(values, shape, dir / rel);
  }
  csv::write_text(dir / "index.csv", index);
}

inline ImageSet load_dataset(const std::filesystem::path& dir) {
  const auto lines = csv::read_lines(dir / "index.csv");
  if (lines.empty() || csv::trim(lines[0]) != kIndexHeader) {
    fail(ErrorCode::MalformedManifest, "dataset index " + (dir / "index.csv").string() + " has a bad header");
  }
  std::map<std::string, TensorFile> tensors;
  ImageSet out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (csv::trim(lines[i]).empty()) continue;
    const auto cols = csv::split(lines[i]);
    if (cols.size() != 7) fail(ErrorCode::MalformedManifest, "dataset index row " + std::to_string(i) + " has wrong arity");
    const std::string rel(cols[0]);
    auto it = tensors.find(rel);
    if (it == tensors.end()) it = tensors.emplace(rel, read_tensor(dir / rel)).first;
    const auto& t = it->second;
    if (t.shape.size() != 3) fail(ErrorCode::ShapeMismatch, rel + " is not frames x time x freq");
    const auto frame = static_cast<std::size_t>(csv::parse_double(cols[1]));
    if (frame >= t.shape[0]) fail(ErrorCode::ShapeMismatch, rel + ": frame index out of range");
    auto img = std::make_shared<SpectrogramImage>();
    img->time_bins = static_cast<int>(t.shape[1]);
    img->freq_bins = static_cast<int>(t.shape[2]);
    const std::size_t stride = static_cast<std::size_t>(img->time_bins) * img->freq_bins;
    img->data.assign(t.values.begin() + static_cast<std::ptrdiff_t>(frame * stride),
                     t.values.begin() + static_cast<std::ptrdiff_t>((frame + 1) * stride));
    img->user_id = std::string(cols[2]);
    img->location = Location::parse(cols[3]);
    img->activity = parse_activity(cols[4]);
    img->rate_hz = csv::parse_double(cols[5]);
    img->frame_start_unix_s = csv::parse_double(cols[6]);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace motionkit::features
