#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "motionkit/error.hpp"
#include "motionkit/nn/tensor.hpp"
#include "motionkit/synthesis/sinkhorn.hpp"

namespace motionkit::synthesis {

/// Shifted, normalized view of a feature vector: g = (f - min f + eps) / sum.
struct FeatureHistogram {
  Eigen::VectorXd hist;
  double min = 0.0;
  double sum = 0.0;
  bool degenerate = false;
};

inline FeatureHistogram feature_histogram(const Eigen::VectorXd& f, double eps = 1e-6) {
  FeatureHistogram h;
  h.min = f.minCoeff();
  h.degenerate = f.maxCoeff() == h.min;
  const Eigen::VectorXd shifted = f.array() - h.min + eps;
  h.sum = shifted.sum();
  h.hist = shifted / h.sum;
  return h;
}

struct TransportedFeature {
  Eigen::VectorXd values;
  bool degenerate = false;
};

/// Barycentric projection of f through the plan: out_j = sum_i P_ij f_i / sum_i P_ij.
/// An all-equal input is returned unchanged and flagged.
inline TransportedFeature transport_apply(const Eigen::MatrixXd& plan, const Eigen::VectorXd& f) {
  if (plan.rows() != f.size()) fail(ErrorCode::ShapeMismatch, "plan rows do not match feature length");
  TransportedFeature out;
  if (f.size() == 0 || f.maxCoeff() == f.minCoeff()) {
    out.values = f;
    out.degenerate = true;
    return out;
  }
  const Eigen::VectorXd mass = plan.colwise().sum().transpose();
  out.values = (plan.transpose() * f).cwiseQuotient(mass.cwiseMax(1e-300));
  return out;
}

inline TransportedFeature transport_apply(const TransportPlan& plan, const Eigen::VectorXd& f) {
  return transport_apply(plan.plan, f);
}

struct SynthesisLoss {
  double l_ot = 0.0;
  double l_recon = 0.0;
  double total = 0.0;
};

template <typename T>
double mean_squared(const nn::Tensor<T>& a, const nn::Tensor<T>& b) {
  if (a.shape != b.shape) fail(ErrorCode::ShapeMismatch, "mse operands differ in shape");
  if (a.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

template <typename T>
SynthesisLoss synthesis_loss(const nn::Tensor<T>& f_transported, const nn::Tensor<T>& f_target,
                             const nn::Tensor<T>& spec_out, const nn::Tensor<T>& spec_target) {
  SynthesisLoss l;
  l.l_ot = mean_squared(f_transported, f_target);
  l.l_recon = mean_squared(spec_out, spec_target);
  l.total = l.l_ot + l.l_recon;
  return l;
}

struct BatchTransportConfig {
  double lambda = 0.1;
  int iterations = 100;
  // Source marginal from each feature's histogram instead of uniform. The
  // marginal is treated as a constant in backward().
  bool histogram_marginals = false;
  double eps = 1e-6;
};

/// Differentiable transport of a batch of n-dim features through an n x n
/// cost: a fixed number of Sinkhorn scaling steps on K = exp(-C/lambda),
/// then the barycentric projection out_j = sum_i u_i K_ij f_i / sum_i u_i K_ij.
/// backward() runs through the unrolled iterations exactly.
template <typename T>
class BatchTransport {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

  struct Grads {
    nn::Tensor<T> cost;
    nn::Tensor<T> features;
  };

  explicit BatchTransport(BatchTransportConfig cfg = {}) : cfg_(cfg) {
    if (!(cfg_.lambda > 0.0)) fail(ErrorCode::ShapeMismatch, "lambda must be positive");
    if (cfg_.iterations < 1) fail(ErrorCode::ShapeMismatch, "transport needs at least one iteration");
  }

  const BatchTransportConfig& config() const { return cfg_; }

  /// cost: n x n, feats: B x n -> B x n.
  nn::Tensor<T> forward(const nn::Tensor<T>& cost, const nn::Tensor<T>& feats) {
    if (cost.rank() != 2 || cost.dim(0) != cost.dim(1)) fail(ErrorCode::ShapeMismatch, "cost must be square");
    if (feats.rank() != 2 || feats.dim(1) != cost.dim(0)) fail(ErrorCode::ShapeMismatch, "feature width mismatch");
    n_ = cost.dim(0);
    batch_ = feats.dim(0);
    const T lam = static_cast<T>(cfg_.lambda);
    nn::ConstMatMap<T> c(cost.ptr(), n_, n_);
    k_ = (-c.array() / lam).exp().matrix();
    ft_ = nn::ConstMatMap<T>(feats.ptr(), batch_, n_).transpose();

    const int cols = cfg_.histogram_marginals ? batch_ : 1;
    a_.resize(n_, cols);
    if (cfg_.histogram_marginals) {
      for (int b = 0; b < batch_; ++b) {
        const T lo = ft_.col(b).minCoeff();
        a_.col(b) = (ft_.col(b).array() - lo + static_cast<T>(cfg_.eps)).matrix();
        a_.col(b) /= a_.col(b).sum();
      }
    } else {
      a_.setConstant(T(1) / static_cast<T>(n_));
    }
    const T b_mass = T(1) / static_cast<T>(n_);

    us_.assign(cfg_.iterations, Mat());
    vs_.assign(cfg_.iterations + 1, Mat());
    vs_[0] = Mat::Ones(n_, cols);
    for (int t = 0; t < cfg_.iterations; ++t) {
      us_[t] = a_.cwiseQuotient(k_ * vs_[t]);
      vs_[t + 1] = (k_.transpose() * us_[t]).cwiseInverse() * b_mass;
    }

    ub_ = broadcast(us_.back());
    num_ = k_.transpose() * ub_.cwiseProduct(ft_);
    den_ = k_.transpose() * ub_;
    out_ = num_.cwiseQuotient(den_);
    nn::Tensor<T> out({batch_, n_});
    nn::MatMap<T>(out.ptr(), batch_, n_) = out_.transpose();
    return out;
  }

  /// Gradients for the cost matrix and the features given dL/d(output).
  Grads backward(const nn::Tensor<T>& grad_out) {
    nn::expect_shape(grad_out, {batch_, n_}, "transport grad");
    const Mat g = nn::ConstMatMap<T>(grad_out.ptr(), batch_, n_).transpose();
    const T lam = static_cast<T>(cfg_.lambda);

    const Mat dn = g.cwiseQuotient(den_);
    const Mat dd = -(g.cwiseProduct(out_)).cwiseQuotient(den_);
    Mat dk = ub_.cwiseProduct(ft_) * dn.transpose() + ub_ * dd.transpose();
    const Mat kdn = k_ * dn;
    const Mat dub = kdn.cwiseProduct(ft_) + k_ * dd;
    const Mat dft = kdn.cwiseProduct(ub_);

    Mat du = reduce(dub);
    Mat dv = Mat::Zero(du.rows(), du.cols());
    for (int t = cfg_.iterations - 1; t >= 0; --t) {
      // v_{t+1} = b / (K^T u_t)
      const Mat& v_next = vs_[t + 1];
      const Mat ds = -(dv.cwiseProduct(v_next).cwiseProduct(v_next)) * static_cast<T>(n_);
      du += k_ * ds;
      dk.noalias() += us_[t] * ds.transpose();
      // u_t = a / (K v_t)
      const Mat dr = -(du.cwiseProduct(us_[t])).cwiseQuotient(k_ * vs_[t]);
      dv = k_.transpose() * dr;
      dk.noalias() += dr * vs_[t].transpose();
      du.setZero();
    }

    Grads grads;
    grads.cost = nn::Tensor<T>({n_, n_});
    nn::MatMap<T>(grads.cost.ptr(), n_, n_) = -(dk.cwiseProduct(k_)) / lam;
    grads.features = nn::Tensor<T>({batch_, n_});
    nn::MatMap<T>(grads.features.ptr(), batch_, n_) = dft.transpose();
    return grads;
  }

  /// Plan of batch item b from the last forward: diag(u) K diag(v).
  Eigen::MatrixXd plan(int b = 0) const {
    const int col = cfg_.histogram_marginals ? b : 0;
    const Mat p = us_.back().col(col).asDiagonal() * k_ * vs_.back().col(col).asDiagonal();
    return p.template cast<double>();
  }

 private:
  Mat broadcast(const Mat& u) const {
    if (u.cols() == batch_) return u;
    return u.col(0).replicate(1, batch_);
  }
  Mat reduce(const Mat& g) const {
    if (cfg_.histogram_marginals) return g;
    return g.rowwise().sum();
  }

  BatchTransportConfig cfg_;
  int n_ = 0;
  int batch_ = 0;
  Mat k_, ft_, a_, ub_, num_, den_, out_;
  std::vector<Mat> us_, vs_;
};

}  // namespace motionkit::synthesis
