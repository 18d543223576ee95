#pragma once

#include <array>
#include <span>
#include <vector>

#include "motionkit/error.hpp"
#include "motionkit/ingest/types.hpp"

namespace motionkit::harness {

/// Rows are true classes, columns predicted.
using Confusion = std::array<std::array<long, kNumActivities>, kNumActivities>;

inline Confusion confusion_matrix(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) fail(ErrorCode::ShapeMismatch, "truth/prediction length mismatch");
  Confusion c{};
  for (std::size_t i = 0; i < truth.size(); ++i) ++c.at(static_cast<std::size_t>(truth[i])).at(static_cast<std::size_t>(pred[i]));
  return c;
}

/// Per-class F1 from a square confusion matrix; 0 when precision + recall is 0.
template <std::size_t K>
double class_f1(const std::array<std::array<long, K>, K>& c, std::size_t k) {
  long tp = c[k][k], row = 0, col = 0;
  for (std::size_t j = 0; j < K; ++j) {
    row += c[k][j];
    col += c[j][k];
  }
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(col);
  const double r = static_cast<double>(tp) / static_cast<double>(row);
  return 2.0 * p * r / (p + r);
}

/// Macro F1 in [0,1] over the listed classes. A class that never occurs in
/// either truth or predictions is skipped.
template <std::size_t K>
double macro_f1(const std::array<std::array<long, K>, K>& c, std::span<const int> classes) {
  double sum = 0.0;
  int used = 0;
  for (int k : classes) {
    long row = 0, col = 0;
    for (std::size_t j = 0; j < K; ++j) {
      row += c[static_cast<std::size_t>(k)][j];
      col += c[j][static_cast<std::size_t>(k)];
    }
    if (row == 0 && col == 0) continue;
    sum += class_f1(c, static_cast<std::size_t>(k));
    ++used;
  }
  return used ? sum / used : 0.0;
}

/// Classes averaged by default: walking, running, cycling. Other is a null
/// class that only shows up in the confusion matrix.
inline std::vector<int> target_classes(bool include_other) {
  std::vector<int> out{static_cast<int>(Activity::Walking), static_cast<int>(Activity::Running),
                       static_cast<int>(Activity::Cycling)};
  if (include_other) out.push_back(static_cast<int>(Activity::Other));
  return out;
}

inline double macro_f1(const Confusion& c, bool include_other = false) {
  const auto classes = target_classes(include_other);
  return macro_f1(c, std::span<const int>(classes));
}

struct EvalResult {
  double macro_f1 = 0.0;  // percent
  Confusion confusion{};
  long frames = 0;
};

inline EvalResult score(std::span<const int> truth, std::span<const int> pred, bool include_other = false) {
  EvalResult r;
  r.confusion = confusion_matrix(truth, pred);
  r.macro_f1 = 100.0 * macro_f1(r.confusion, include_other);
  r.frames = static_cast<long>(truth.size());
  return r;
}

}  // namespace motionkit::harness
