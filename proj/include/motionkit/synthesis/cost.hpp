#pragma once

#include "motionkit/nn/tensor.hpp"

namespace motionkit::synthesis {

/// Squared Euclidean distances between the rows of a learnable n x d
/// embedding: C_ij = |e_i - e_j|^2. Symmetric with a zero diagonal.
template <typename T>
nn::Tensor<T> build_cost(const nn::Tensor<T>& rows) {
  const int n = rows.dim(0), d = rows.dim(1);
  nn::ConstMatMap<T> e(rows.ptr(), n, d);
  const Eigen::Matrix<T, Eigen::Dynamic, 1> sq = e.rowwise().squaredNorm();
  nn::Tensor<T> c({n, n});
  nn::MatMap<T> out(c.ptr(), n, n);
  out.noalias() = T(-2) * e * e.transpose();
  out.colwise() += sq;
  out.rowwise() += sq.transpose();
  for (int i = 0; i < n; ++i) {
    out(i, i) = T(0);
    for (int j = i + 1; j < n; ++j) {
      const T v = std::max(T(0), T(0.5) * (out(i, j) + out(j, i)));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return c;
}

/// dL/de given dL/dC: dL/de_i = 2 sum_j (G_ij + G_ji)(e_i - e_j).
template <typename T>
nn::Tensor<T> build_cost_backward(const nn::Tensor<T>& rows, const nn::Tensor<T>& grad_cost) {
  const int n = rows.dim(0), d = rows.dim(1);
  nn::ConstMatMap<T> e(rows.ptr(), n, d);
  nn::ConstMatMap<T> g(grad_cost.ptr(), n, n);
  nn::RowMat<T> s = g + g.transpose();
  s.diagonal().setZero();
  const Eigen::Matrix<T, Eigen::Dynamic, 1> row_sums = s.rowwise().sum();
  nn::Tensor<T> out({n, d});
  nn::MatMap<T> ge(out.ptr(), n, d);
  ge.noalias() = T(2) * (row_sums.asDiagonal() * e - s * e);
  return out;
}

}  // namespace motionkit::synthesis
