#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "motionkit/harness/split.hpp"
#include "motionkit/harness/train.hpp"

namespace motionkit::harness {

using LocationSet = std::vector<Location>;

inline std::string set_name(const LocationSet& set) {
  if (set.size() == six_locations().size() && std::is_permutation(set.begin(), set.end(), six_locations().begin())) {
    return "All";
  }
  std::string s;
  for (const auto& l : set) s += (s.empty() ? "" : "+") + l.name();
  return s;
}

struct TransferRow {
  LocationSet train_set;
  std::string name;
  std::vector<EvalResult> cells;  // one per eval location
  double average = 0.0;           // mean cell F1
  double best_val_f1 = 0.0;
};

struct TransferReport {
  std::vector<Location> eval_locations;
  std::vector<TransferRow> rows;

  double cell(std::size_t row, const Location& loc) const {
    const auto it = std::find(eval_locations.begin(), eval_locations.end(), loc);
    if (it == eval_locations.end()) fail(ErrorCode::MissingLocation, "no column for " + loc.name());
    return rows.at(row).cells[static_cast<std::size_t>(it - eval_locations.begin())].macro_f1;
  }
};

/// Effective worker count: explicit value, else MOTIONKIT_WORKERS, else 1.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MOTIONKIT_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

/// Runs jobs [0, n) on up to `workers` threads; each job writes only its own
/// slot, so results do not depend on scheduling.
template <typename Job>
void run_jobs(std::size_t n, int workers, Job job) {
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n);
  for (std::size_t t = 0; t < std::min(w, n); ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) {
        try {
          job(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline ImageSet at_locations(const ImageSet& images, const LocationSet& set) {
  return select(images, [&](const features::SpectrogramImage& img) {
    return std::find(set.begin(), set.end(), img.location) != set.end();
  });
}

/// One model per location set (train-split users), evaluated per location on
/// test-split users.
inline TransferReport transfer_matrix(const ImageSet& images, const std::vector<LocationSet>& sets, const SplitSpec& split,
                                      const TrainConfig& cfg, int workers = 1,
                                      std::vector<Location> eval_locations = six_locations()) {
  for (const auto& set : sets) {
    for (const auto& loc : set) {
      if (std::none_of(images.begin(), images.end(), [&](const ImagePtr& i) { return i->location == loc; })) {
        fail(ErrorCode::MissingLocation, "no data for location " + loc.name());
      }
    }
  }
  const auto train = select(images, [&](const features::SpectrogramImage& i) { return split.is_train(i.user_id); });
  const auto val = select(images, [&](const features::SpectrogramImage& i) { return split.is_val(i.user_id); });
  const auto test = select(images, [&](const features::SpectrogramImage& i) { return split.is_test(i.user_id); });

  TransferReport report;
  report.eval_locations = std::move(eval_locations);
  report.rows.resize(sets.size());
  run_jobs(sets.size(), resolve_workers(workers), [&](std::size_t r) {
    TrainConfig row_cfg = cfg;
    if (cfg.progress) {
      const std::string prefix = "[" + set_name(sets[r]) + "] ";
      row_cfg.progress = [prefix, p = cfg.progress](const std::string& msg) { p(prefix + msg); };
    }
    auto model = train_motion_model(at_locations(train, sets[r]), at_locations(val, sets[r]), row_cfg);
    TransferRow row;
    row.train_set = sets[r];
    row.name = set_name(sets[r]);
    row.best_val_f1 = model.best_val_f1;
    double sum = 0.0;
    for (const auto& loc : report.eval_locations) {
      row.cells.push_back(evaluate(model.net, at_locations(test, {loc}), cfg.include_other_in_macro));
      sum += row.cells.back().macro_f1;
    }
    row.average = report.eval_locations.empty() ? 0.0 : sum / static_cast<double>(report.eval_locations.size());
    report.rows[r] = std::move(row);
  });
  return report;
}

/// The six single locations followed by the all-location superset.
inline std::vector<LocationSet> singles_and_superset() {
  std::vector<LocationSet> out;
  for (const auto& l : six_locations()) out.push_back({l});
  out.push_back(six_locations());
  return out;
}

/// All k-subsets of `base`, in lexicographic index order.
inline std::vector<LocationSet> combinations(const std::vector<Location>& base, int k) {
  std::vector<LocationSet> out;
  const int n = static_cast<int>(base.size());
  if (k < 0 || k > n) return out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    LocationSet s;
    for (int i : idx) s.push_back(base[static_cast<std::size_t>(i)]);
    out.push_back(std::move(s));
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

struct RankedSet {
  LocationSet set;
  std::string name;
  double average = 0.0;
};

/// Trains every k-combination of the six locations and ranks them by mean F1
/// over all evaluation locations (best first; ties keep enumeration order).
inline std::vector<RankedSet> eigenlocations(int k, const ImageSet& images, const SplitSpec& split, const TrainConfig& cfg,
                                             int workers = 1, TransferReport* full = nullptr) {
  if (k < 1 || k > 3) fail(ErrorCode::BadFlag, "k must be 1, 2 or 3");
  const auto sets = combinations(six_locations(), k);
  auto report = transfer_matrix(images, sets, split, cfg, workers);
  std::vector<RankedSet> out;
  for (const auto& row : report.rows) out.push_back({row.train_set, row.name, row.average});
  std::stable_sort(out.begin(), out.end(), [](const RankedSet& a, const RankedSet& b) { return a.average > b.average; });
  if (full) *full = std::move(report);
  return out;
}

}  // namespace motionkit::harness
