#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motionkit/ingest/tensor_file.hpp"
#include "motionkit/nn/tensor.hpp"

namespace motionkit::nn {

/// Writes each named tensor to `<dir>/<name>.mptn`.
template <typename T>
void save_state(const std::filesystem::path& dir, const std::vector<NamedTensor<T>>& state) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, t] : state) {
    std::vector<float> values(t->data.begin(), t->data.end());
    std::vector<std::uint32_t> shape(t->shape.begin(), t->shape.end());
    write_tensor(values, shape, dir / (name + ".mptn"));
  }
}

/// Loads every named tensor from `dir`; shapes must match exactly.
template <typename T>
void load_state(const std::filesystem::path& dir, const std::vector<NamedTensor<T>>& state) {
  for (const auto& [name, t] : state) {
    const auto file = read_tensor(dir / (name + ".mptn"));
    const std::vector<int> shape(file.shape.begin(), file.shape.end());
    if (shape != t->shape) fail(ErrorCode::ShapeMismatch, "checkpoint tensor " + name + " has a different shape");
    t->data.assign(file.values.begin(), file.values.end());
  }
}

/// Deep copy of the current values, e.g. to keep a best-so-far snapshot.
template <typename T>
std::vector<Tensor<T>> snapshot(const std::vector<NamedTensor<T>>& state) {
  std::vector<Tensor<T>> out;
  out.reserve(state.size());
  for (const auto& s : state) out.push_back(*s.tensor);
  return out;
}

template <typename T>
void restore(const std::vector<NamedTensor<T>>& state, const std::vector<Tensor<T>>& snap) {
  for (std::size_t i = 0; i < state.size(); ++i) *state[i].tensor = snap[i];
}

}  // namespace motionkit::nn
