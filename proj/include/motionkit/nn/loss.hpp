#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "motionkit/nn/tensor.hpp"

namespace motionkit::nn {

template <typename T>
struct LossGrad {
  double loss = 0.0;
  Tensor<T> grad;
};

/// Row-wise softmax (log-sum-exp stabilized).
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  const int N = logits.dim(0), K = logits.dim(1);
  Tensor<T> p(logits.shape);
  for (int n = 0; n < N; ++n) {
    const T* z = logits.ptr() + static_cast<std::size_t>(n) * K;
    const double m = *std::max_element(z, z + K);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(z[k] - m);
    for (int k = 0; k < K; ++k) p[static_cast<std::size_t>(n) * K + k] = static_cast<T>(std::exp(z[k] - m) / s);
  }
  return p;
}

/// Mean softmax cross-entropy over the batch; per-row gradient is
/// (softmax - one_hot) / N.
template <typename T>
LossGrad<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  const int N = logits.dim(0), K = logits.dim(1);
  if (static_cast<int>(labels.size()) != N) fail(ErrorCode::ShapeMismatch, "label count != batch size");
  LossGrad<T> out{0.0, Tensor<T>(logits.shape)};
  for (int n = 0; n < N; ++n) {
    const int y = labels[static_cast<std::size_t>(n)];
    if (y < 0 || y >= K) fail(ErrorCode::ShapeMismatch, "label out of range");
    const T* z = logits.ptr() + static_cast<std::size_t>(n) * K;
    const double m = *std::max_element(z, z + K);
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += std::exp(z[k] - m);
    const double lse = m + std::log(s);
    out.loss += lse - z[y];
    for (int k = 0; k < K; ++k) {
      const double pk = std::exp(z[k] - lse);
      out.grad[static_cast<std::size_t>(n) * K + k] = static_cast<T>((pk - (k == y ? 1.0 : 0.0)) / N);
    }
  }
  out.loss /= N;
  return out;
}

/// Mean squared error over all elements and its gradient wrt `pred`.
template <typename T>
LossGrad<T> mse(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.size() != target.size()) fail(ErrorCode::ShapeMismatch, "mse operands differ in size");
  LossGrad<T> out{0.0, Tensor<T>(pred.shape)};
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - target[i];
    out.loss += d * d;
    out.grad[i] = static_cast<T>(2.0 * d / n);
  }
  out.loss /= n;
  return out;
}

}  // namespace motionkit::nn
