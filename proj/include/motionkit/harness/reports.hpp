#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionkit/harness/aggregate.hpp"
#include "motionkit/harness/transfer.hpp"
#include "motionkit/ingest/csv.hpp"

namespace motionkit::harness {

inline std::string f1_cell(double v) { return csv::fmt(v, 2); }

/// Rows = training sets, columns = evaluation locations, then the row average.
inline std::string transfer_matrix_csv(const TransferReport& r) {
  std::string s = "train_set";
  for (const auto& l : r.eval_locations) s += "," + l.name();
  s += ",average\n";
  for (const auto& row : r.rows) {
    s += row.name;
    for (const auto& c : row.cells) s += "," + f1_cell(c.macro_f1);
    s += "," + f1_cell(row.average) + "\n";
  }
  return s;
}

/// Rows are true classes, columns predicted.
inline std::string confusion_csv(const Confusion& c) {
  std::string s = "true\\pred";
  for (int k = 0; k < kNumActivities; ++k) s += "," + activity_name(static_cast<Activity>(k));
  s += "\n";
  for (int t = 0; t < kNumActivities; ++t) {
    s += activity_name(static_cast<Activity>(t));
    for (int p = 0; p < kNumActivities; ++p) s += "," + std::to_string(c[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)]);
    s += "\n";
  }
  return s;
}

/// transfer_matrix.csv plus one confusion_<trainset>_<evalloc>.csv per cell.
inline void write_transfer_report(const std::filesystem::path& dir, const TransferReport& r) {
  csv::write_text(dir / "transfer_matrix.csv", transfer_matrix_csv(r));
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < r.eval_locations.size(); ++k) {
      csv::write_text(dir / ("confusion_" + row.name + "_" + r.eval_locations[k].name() + ".csv"),
                      confusion_csv(row.cells[k].confusion));
    }
  }
}

inline std::string eigenlocations_csv(const std::vector<RankedSet>& ranked) {
  std::string s = "rank,locations,average_f1\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    s += std::to_string(i + 1) + "," + ranked[i].name + "," + f1_cell(ranked[i].average) + "\n";
  }
  return s;
}

inline std::string aggregation_curve_csv(const std::vector<CurvePoint>& curve, const std::vector<Location>& locations) {
  std::string s = "window_s";
  for (const auto& l : locations) s += "," + l.name();
  s += ",average\n";
  for (const auto& p : curve) {
    s += csv::fmt(p.window_s, 1);
    for (double v : p.activity_f1) s += "," + f1_cell(v);
    s += "," + f1_cell(p.average) + "\n";
  }
  return s;
}

/// Published numbers measured on the original (not redistributable)
/// multi-location dataset. They are annotations for reading the reports next
/// to, not targets this benchmark is expected to hit.
inline nlohmann::json reference_annotations() {
  nlohmann::json j;
  j["note"] = "Reference values from the original multi-location study; not reproducible on the synthetic benchmark.";
  j["transfer_matrix"] = {{"Wrist_on_Ankle_f1", 23.28}, {"All_row_average_f1", 91.41}};
  j["eigenlocations"] = {{"best_triple", "Ankle+Thigh+Shoulder"},
                         {"best_triple_average_f1", 90.05},
                         {"best_double", "Thigh+Shoulder"},
                         {"best_double_average_f1", 85.24}};
  j["aggregation"] = {{"window_s", 30}, {"superset_activity_f1", 95.17}, {"superset_frame_f1", 91.41}};
  j["finetune"] = {{"new_activities_f1", 85.93}};
  j["synthesis"] = {{"viable_pairs_min_f1", 82.0}, {"example_pair", "Wrist->Ankle"}};
  return j;
}

inline void write_reference_annotations(const std::filesystem::path& dir) {
  csv::write_text(dir / "reference_values.json", reference_annotations().dump(2) + "\n");
}

}  // namespace motionkit::harness
