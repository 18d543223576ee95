#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionkit/harness/train.hpp"
#include "motionkit/ingest/csv.hpp"

namespace motionkit::harness {

/// Checkpoint layout: <dir>/model.json plus one tensor file per state entry
/// under <dir>/tensors. Fused weights are stored alongside the training ones.
inline void save_model(const std::filesystem::path& dir, TrainedModel& m, const std::vector<Location>& trained_on = {}) {
  std::filesystem::create_directories(dir);
  const auto& c = m.net.config();
  nlohmann::json j;
  j["rows"] = c.rows;
  j["cols"] = c.cols;
  j["stage1"] = c.stage1;
  j["stage2"] = c.stage2;
  j["hidden"] = c.hidden;
  j["n_classes"] = c.n_classes;
  j["dropout"] = c.dropout;
  j["rate_hz"] = m.rate_hz;
  j["fused"] = m.net.is_fused();
  j["best_val_f1"] = m.best_val_f1;
  j["best_epoch"] = m.best_epoch;
  std::vector<std::string> locs;
  for (const auto& l : trained_on) locs.push_back(l.name());
  j["locations"] = locs;
  csv::write_text(dir / "model.json", j.dump(2) + "\n");
  nn::save_state(dir / "tensors", m.net.state());
}

inline TrainedModel load_model(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.json")) fail(ErrorCode::Io, "no model.json in " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(dir / "model.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, "bad model.json: " + std::string(e.what()));
  }
  nn::MotionNetConfig c;
  c.rows = j.at("rows").get<int>();
  c.cols = j.at("cols").get<int>();
  c.stage1 = j.at("stage1").get<int>();
  c.stage2 = j.at("stage2").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.dropout = j.at("dropout").get<double>();
  TrainedModel m;
  m.net = nn::MotionNet<float>(c);
  // Fusing first allocates the fused tensors so load_state can fill them.
  if (j.value("fused", false)) m.net.fuse();
  nn::load_state(dir / "tensors", m.net.state());
  m.rate_hz = j.at("rate_hz").get<double>();
  m.best_val_f1 = j.value("best_val_f1", 0.0);
  m.best_epoch = j.value("best_epoch", -1);
  return m;
}

}  // namespace motionkit::harness
