#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "motionkit/error.hpp"

namespace motionkit::synthesis {

/// Entropy-regularized transport problem
///   min_P <P, C>_F - lambda h(P)  s.t.  P 1 = a, P^T 1 = b, P >= 0.
struct SinkhornProblem {
  Eigen::MatrixXd cost;
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  double lambda = 0.1;
  int max_iters = 1000;
  double tol = 1e-6;
};

struct TransportPlan {
  Eigen::MatrixXd plan;
  bool converged = false;
  int iters_used = 0;

  /// max(|P 1 - a|_inf, |P^T 1 - b|_inf)
  double marginal_violation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    const double rows = (plan.rowwise().sum() - a).cwiseAbs().maxCoeff();
    const double cols = (plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff();
    return std::max(rows, cols);
  }

  double transport_cost(const Eigen::MatrixXd& cost) const { return plan.cwiseProduct(cost).sum(); }
};

namespace detail {

inline double log_sum_exp(const double* values, int n, int stride) {
  double m = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) m = std::max(m, values[i * stride]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(values[i * stride] - m);
  return m + std::log(s);
}

/// Zero-mass entries legitimately carry a -inf potential.
inline bool potentials_finite(const Eigen::VectorXd& pot, const Eigen::VectorXd& mass) {
  for (Eigen::Index i = 0; i < pot.size(); ++i) {
    if (mass[i] > 0.0 && !std::isfinite(pot[i])) return false;
  }
  return true;
}

}  // namespace detail

/// Log-domain Sinkhorn-Knopp. Dual potentials f, g are updated alternately;
/// P_ij = exp((f_i + g_j - C_ij) / lambda). Stops once the row-marginal
/// violation (columns are exact after each g update) drops below tol.
/// Non-finite potentials report converged = false.
inline TransportPlan sinkhorn(const SinkhornProblem& pb) {
  const int n = static_cast<int>(pb.cost.rows());
  const int m = static_cast<int>(pb.cost.cols());
  if (pb.a.size() != n || pb.b.size() != m) fail(ErrorCode::ShapeMismatch, "marginals do not match cost shape");
  if (!(pb.lambda > 0.0)) fail(ErrorCode::ShapeMismatch, "lambda must be positive");
  const double lam = pb.lambda;

  Eigen::VectorXd log_a = pb.a.array().log();
  Eigen::VectorXd log_b = pb.b.array().log();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  // Row-major scratch so both reductions walk contiguous memory.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> z(n, m);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor> zc(n, m);

  TransportPlan out;
  double violation = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < pb.max_iters; ++it) {
    // f update: f_i = lam log a_i - lam LSE_j((g_j - C_ij) / lam)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) z(i, j) = (g[j] - pb.cost(i, j)) / lam;
    for (int i = 0; i < n; ++i) f[i] = lam * (log_a[i] - detail::log_sum_exp(z.data() + static_cast<std::ptrdiff_t>(i) * m, m, 1));
    // g update: g_j = lam log b_j - lam LSE_i((f_i - C_ij) / lam)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) zc(i, j) = (f[i] - pb.cost(i, j)) / lam;
    for (int j = 0; j < m; ++j) g[j] = lam * (log_b[j] - detail::log_sum_exp(zc.data() + static_cast<std::ptrdiff_t>(j) * n, n, 1));

    if (!detail::potentials_finite(f, pb.a) || !detail::potentials_finite(g, pb.b)) break;
    // Row sums under the current potentials.
    violation = 0.0;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += std::exp((f[i] + g[j] - pb.cost(i, j)) / lam);
      violation = std::max(violation, std::abs(s - pb.a[i]));
    }
    if (violation < pb.tol) {
      ++it;
      break;
    }
  }
  out.iters_used = it;
  out.converged = violation < pb.tol && detail::potentials_finite(f, pb.a) && detail::potentials_finite(g, pb.b);
  out.plan.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double v = std::exp((f[i] + g[j] - pb.cost(i, j)) / lam);
      out.plan(i, j) = std::isfinite(v) ? v : 0.0;
    }
  return out;
}

}  // namespace motionkit::synthesis
