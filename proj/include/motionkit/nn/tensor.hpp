#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motionkit/error.hpp"

namespace motionkit::nn {

/// Eigen's vectorized kernels peel a scalar prologue up to the first
/// packet-aligned element, which changes summation order. Aligned storage
/// keeps results independent of where the heap happens to place a buffer.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
struct Tensor {
  std::vector<int> shape;
  AlignedVector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<int>& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1},
                           [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
  }

  std::size_t size() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }
  bool empty() const { return data.empty(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  Tensor reshaped(std::vector<int> s) const {
    if (count(s) != data.size()) fail(ErrorCode::ShapeMismatch, "reshape changes element count");
    Tensor out;
    out.shape = std::move(s);
    out.data = data;
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

template <typename T>
std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

template <typename T>
void expect_shape(const Tensor<T>& t, const std::vector<int>& shape, const char* what) {
  if (t.shape != shape) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + ": got " + shape_string<T>(t.shape) + ", expected " +
                                       shape_string<T>(shape));
  }
}

/// Trainable tensor with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> shape) : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(T(0)); }
};

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

/// Seeded generator used for every random draw in the library.
using Rng = std::mt19937_64;

/// He-uniform initialization for a layer followed by ReLU.
template <typename T>
void init_uniform(Tensor<T>& t, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : t.data) v = static_cast<T>(dist(rng));
}

/// Mixes a base seed with stream identifiers (splitmix64 finalizer) so
/// independent random streams can be derived without shared state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xD6E8FEB86659FD93ull));
}

/// Named view of every tensor that makes up a model's state (trainable
/// parameters and running buffers), in a stable order.
template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T>* tensor;
};

}  // namespace motionkit::nn
