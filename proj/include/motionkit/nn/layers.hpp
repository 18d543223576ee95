#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "motionkit/nn/tensor.hpp"

namespace motionkit::nn {

namespace detail {

inline int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

/// Unfolds one C x H x W image into a (C*k*k) x (Ho*Wo) row-major matrix.
template <typename T>
void im2col(const T* img, int C, int H, int W, int k, int stride, int pad, T* cols) {
  const int Ho = conv_out(H, k, stride, pad);
  const int Wo = conv_out(W, k, stride, pad);
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[oy * Wo + ox] = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                    ? img[(static_cast<std::size_t>(c) * H + iy) * W + ix]
                                    : T(0);
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters-adds columns back onto a C x H x W image.
template <typename T>
void col2im(const T* cols, int C, int H, int W, int k, int stride, int pad, T* img) {
  const int Ho = conv_out(H, k, stride, pad);
  const int Wo = conv_out(W, k, stride, pad);
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = cols + static_cast<std::size_t>((c * k + ky) * k + kx) * Ho * Wo;
        for (int oy = 0; oy < Ho; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          for (int ox = 0; ox < Wo; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= W) continue;
            img[(static_cast<std::size_t>(c) * H + iy) * W + ix] += row[oy * Wo + ox];
          }
        }
      }
    }
  }
}

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace detail

/// 2-D convolution over N x C x H x W via im2col + GEMM.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad, bool bias)
      : weight(name + ".weight", {out_ch, in_ch, kernel, kernel}),
        bias(name + ".bias", {bias ? out_ch : 0}),
        in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad), has_bias_(bias) {}

  void init(Rng& rng) {
    init_uniform(weight.value, std::sqrt(6.0 / (in_ch_ * k_ * k_)), rng);
    bias.value.fill(T(0));
  }

  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }
  bool has_bias() const { return has_bias_; }

  std::vector<int> output_shape(const std::vector<int>& in) const {
    return {in[0], out_ch_, detail::conv_out(in[2], k_, stride_, pad_), detail::conv_out(in[3], k_, stride_, pad_)};
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.rank() != 4 || x.dim(1) != in_ch_) fail(ErrorCode::ShapeMismatch, weight.name + ": bad input shape");
    in_shape_ = x.shape;
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const auto out_shape = output_shape(x.shape);
    const int P = out_shape[2] * out_shape[3];
    const int K = in_ch_ * k_ * k_;
    cols_.assign(static_cast<std::size_t>(N) * K * P, T(0));
    Tensor<T> y(out_shape);
    ConstMatMap<T> w(weight.value.ptr(), out_ch_, K);
    for (int n = 0; n < N; ++n) {
      T* cols = cols_.data() + static_cast<std::size_t>(n) * K * P;
      detail::im2col(x.ptr() + static_cast<std::size_t>(n) * in_ch_ * H * W, in_ch_, H, W, k_, stride_, pad_, cols);
      MatMap<T> out(y.ptr() + static_cast<std::size_t>(n) * out_ch_ * P, out_ch_, P);
      out.noalias() = w * ConstMatMap<T>(cols, K, P);
      if (has_bias_) {
        for (int o = 0; o < out_ch_; ++o) out.row(o).array() += bias.value[static_cast<std::size_t>(o)];
      }
    }
    return y;
  }

  /// Accumulates parameter gradients; returns dL/dx unless `need_input_grad`
  /// is false (then an empty tensor).
  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad = true) {
    const int N = in_shape_[0], H = in_shape_[2], W = in_shape_[3];
    const int P = gy.dim(2) * gy.dim(3);
    const int K = in_ch_ * k_ * k_;
    MatMap<T> gw(weight.grad.ptr(), out_ch_, K);
    ConstMatMap<T> w(weight.value.ptr(), out_ch_, K);
    Tensor<T> gx;
    if (need_input_grad) gx = Tensor<T>(in_shape_);
    RowMat<T> gcols(K, P);
    for (int n = 0; n < N; ++n) {
      ConstMatMap<T> g(gy.ptr() + static_cast<std::size_t>(n) * out_ch_ * P, out_ch_, P);
      ConstMatMap<T> cols(cols_.data() + static_cast<std::size_t>(n) * K * P, K, P);
      gw.noalias() += g * cols.transpose();
      if (has_bias_) {
        for (int o = 0; o < out_ch_; ++o) bias.grad[static_cast<std::size_t>(o)] += g.row(o).sum();
      }
      if (need_input_grad) {
        gcols.noalias() = w.transpose() * g;
        detail::col2im(gcols.data(), in_ch_, H, W, k_, stride_, pad_,
                       gx.ptr() + static_cast<std::size_t>(n) * in_ch_ * H * W);
      }
    }
    return gx;
  }

  std::vector<Param<T>*> params() {
    if (has_bias_) return {&weight, &bias};
    return {&weight};
  }

  Param<T> weight;
  Param<T> bias;

 private:
  int in_ch_ = 0, out_ch_ = 0, k_ = 3, stride_ = 1, pad_ = 0;
  bool has_bias_ = false;
  std::vector<int> in_shape_;
  AlignedVector<T> cols_;
};

/// Transposed convolution (the adjoint of Conv2d). Weight is Cin x Cout x k x k.
template <typename T>
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad)
      : weight(name + ".weight", {in_ch, out_ch, kernel, kernel}),
        bias(name + ".bias", {out_ch}),
        in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad) {}

  void init(Rng& rng) {
    init_uniform(weight.value, std::sqrt(6.0 / (in_ch_ * k_ * k_ / (stride_ * stride_))), rng);
    bias.value.fill(T(0));
  }

  int out_size(int in) const { return (in - 1) * stride_ - 2 * pad_ + k_; }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.rank() != 4 || x.dim(1) != in_ch_) fail(ErrorCode::ShapeMismatch, weight.name + ": bad input shape");
    x_ = x;
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int Ho = out_size(H), Wo = out_size(W);
    const int K = out_ch_ * k_ * k_;
    const int P = H * W;
    Tensor<T> y({N, out_ch_, Ho, Wo});
    ConstMatMap<T> w(weight.value.ptr(), in_ch_, K);
    RowMat<T> cols(K, P);
    for (int n = 0; n < N; ++n) {
      cols.noalias() = w.transpose() * ConstMatMap<T>(x.ptr() + static_cast<std::size_t>(n) * in_ch_ * P, in_ch_, P);
      T* out = y.ptr() + static_cast<std::size_t>(n) * out_ch_ * Ho * Wo;
      detail::col2im(cols.data(), out_ch_, Ho, Wo, k_, stride_, pad_, out);
      for (int o = 0; o < out_ch_; ++o) {
        T* plane = out + static_cast<std::size_t>(o) * Ho * Wo;
        for (int i = 0; i < Ho * Wo; ++i) plane[i] += bias.value[static_cast<std::size_t>(o)];
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int N = x_.dim(0), H = x_.dim(2), W = x_.dim(3);
    const int Ho = gy.dim(2), Wo = gy.dim(3);
    const int K = out_ch_ * k_ * k_;
    const int P = H * W;
    Tensor<T> gx(x_.shape);
    MatMap<T> gw(weight.grad.ptr(), in_ch_, K);
    ConstMatMap<T> w(weight.value.ptr(), in_ch_, K);
    RowMat<T> gcols(K, P);
    for (int n = 0; n < N; ++n) {
      const T* g = gy.ptr() + static_cast<std::size_t>(n) * out_ch_ * Ho * Wo;
      detail::im2col(g, out_ch_, Ho, Wo, k_, stride_, pad_, gcols.data());
      ConstMatMap<T> xn(x_.ptr() + static_cast<std::size_t>(n) * in_ch_ * P, in_ch_, P);
      gw.noalias() += xn * gcols.transpose();
      MatMap<T>(gx.ptr() + static_cast<std::size_t>(n) * in_ch_ * P, in_ch_, P).noalias() = w * gcols;
      for (int o = 0; o < out_ch_; ++o) {
        const T* plane = g + static_cast<std::size_t>(o) * Ho * Wo;
        double s = 0.0;
        for (int i = 0; i < Ho * Wo; ++i) s += plane[i];
        bias.grad[static_cast<std::size_t>(o)] += static_cast<T>(s);
      }
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

  Param<T> weight;
  Param<T> bias;

 private:
  int in_ch_ = 0, out_ch_ = 0, k_ = 4, stride_ = 2, pad_ = 1;
  Tensor<T> x_;
};

/// Per-channel batch normalization over N x C x H x W. Train mode normalizes
/// with batch statistics and updates the running estimates; eval mode uses
/// the running estimates.
template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(std::string name, int channels, double eps = 1e-5, double momentum = 0.1)
      : gamma(name + ".gamma", {channels}),
        beta(name + ".beta", {channels}),
        running_mean(std::vector<int>{channels}, T(0)),
        running_var(std::vector<int>{channels}, T(1)),
        eps(eps), momentum(momentum), name_(std::move(name)) {
    gamma.value.fill(T(1));
  }

  int channels() const { return gamma.value.dim(0); }
  const std::string& name() const { return name_; }

  Tensor<T> forward(const Tensor<T>& x, bool train) {
    const int N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    if (C != channels()) fail(ErrorCode::ShapeMismatch, name_ + ": channel mismatch");
    train_ = train;
    xhat_ = Tensor<T>(x.shape);
    invstd_.assign(static_cast<std::size_t>(C), 0.0);
    Tensor<T> y(x.shape);
    const double M = static_cast<double>(N) * HW;
    for (int c = 0; c < C; ++c) {
      double mean = 0.0, var = 0.0;
      if (train) {
        for (int n = 0; n < N; ++n) {
          const T* p = x.ptr() + (static_cast<std::size_t>(n) * C + c) * HW;
          for (int i = 0; i < HW; ++i) mean += p[i];
        }
        mean /= M;
        for (int n = 0; n < N; ++n) {
          const T* p = x.ptr() + (static_cast<std::size_t>(n) * C + c) * HW;
          for (int i = 0; i < HW; ++i) var += (p[i] - mean) * (p[i] - mean);
        }
        var /= M;
        const double unbiased = M > 1 ? var * M / (M - 1) : var;
        running_mean[static_cast<std::size_t>(c)] =
            static_cast<T>((1 - momentum) * running_mean[static_cast<std::size_t>(c)] + momentum * mean);
        running_var[static_cast<std::size_t>(c)] =
            static_cast<T>((1 - momentum) * running_var[static_cast<std::size_t>(c)] + momentum * unbiased);
      } else {
        mean = running_mean[static_cast<std::size_t>(c)];
        var = running_var[static_cast<std::size_t>(c)];
      }
      const double inv = 1.0 / std::sqrt(var + eps);
      invstd_[static_cast<std::size_t>(c)] = inv;
      const double g = gamma.value[static_cast<std::size_t>(c)], b = beta.value[static_cast<std::size_t>(c)];
      for (int n = 0; n < N; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          const double xh = (x[off + i] - mean) * inv;
          xhat_[off + i] = static_cast<T>(xh);
          y[off + i] = static_cast<T>(g * xh + b);
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int N = gy.dim(0), C = gy.dim(1), HW = gy.dim(2) * gy.dim(3);
    const double M = static_cast<double>(N) * HW;
    Tensor<T> gx(gy.shape);
    for (int c = 0; c < C; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int n = 0; n < N; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          sum_g += gy[off + i];
          sum_gx += static_cast<double>(gy[off + i]) * xhat_[off + i];
        }
      }
      gamma.grad[static_cast<std::size_t>(c)] += static_cast<T>(sum_gx);
      beta.grad[static_cast<std::size_t>(c)] += static_cast<T>(sum_g);
      const double g = gamma.value[static_cast<std::size_t>(c)];
      const double inv = invstd_[static_cast<std::size_t>(c)];
      for (int n = 0; n < N; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * C + c) * HW;
        for (int i = 0; i < HW; ++i) {
          if (train_) {
            gx[off + i] = static_cast<T>(g * inv / M * (M * gy[off + i] - sum_g - xhat_[off + i] * sum_gx));
          } else {
            gx[off + i] = static_cast<T>(g * inv * gy[off + i]);
          }
        }
      }
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&gamma, &beta}; }

  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double eps = 1e-5;
  double momentum = 0.1;

 private:
  std::string name_;
  bool train_ = false;
  Tensor<T> xhat_;
  std::vector<double> invstd_;
};

/// Affine map on N x in rows: y = x W^T + b.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, int in, int out)
      : weight(name + ".weight", {out, in}), bias(name + ".bias", {out}), in_(in), out_(out) {}

  void init(Rng& rng, double gain = 6.0) {
    init_uniform(weight.value, std::sqrt(gain / in_), rng);
    bias.value.fill(T(0));
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.rank() != 2 || x.dim(1) != in_) {
      fail(ErrorCode::ShapeMismatch, weight.name + ": expected N x " + std::to_string(in_) + " input, got " +
                                         shape_string<T>(x.shape));
    }
    x_ = x;
    const int N = x.dim(0);
    Tensor<T> y({N, out_});
    MatMap<T> out(y.ptr(), N, out_);
    out.noalias() = ConstMatMap<T>(x.ptr(), N, in_) * ConstMatMap<T>(weight.value.ptr(), out_, in_).transpose();
    out.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.value.ptr(), out_);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad = true) {
    const int N = gy.dim(0);
    ConstMatMap<T> g(gy.ptr(), N, out_);
    MatMap<T>(weight.grad.ptr(), out_, in_).noalias() += g.transpose() * ConstMatMap<T>(x_.ptr(), N, in_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.grad.ptr(), out_) += g.colwise().sum();
    Tensor<T> gx;
    if (need_input_grad) {
      gx = Tensor<T>({N, in_});
      MatMap<T>(gx.ptr(), N, in_).noalias() = g * ConstMatMap<T>(weight.value.ptr(), out_, in_);
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&weight, &bias}; }

  Param<T> weight;
  Param<T> bias;

 private:
  int in_ = 0, out_ = 0;
  Tensor<T> x_;
};

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) const {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (!(y_[i] > T(0))) gx[i] = T(0);
    }
    return gx;
  }

 private:
  Tensor<T> y_;
};

template <typename T>
class Sigmoid {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y.data) v = detail::sigmoid(v);
    y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) const {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y_[i] * (T(1) - y_[i]);
    return gx;
  }

 private:
  Tensor<T> y_;
};

/// Inverted dropout: kept units are scaled by 1/(1-p) at train time so the
/// eval pass is the identity.
template <typename T>
class Dropout {
 public:
  explicit Dropout(double p = 0.5) : p_(p) {}

  double p() const { return p_; }

  Tensor<T> forward(const Tensor<T>& x, bool train, std::uint64_t seed) {
    train_ = train && p_ > 0.0;
    if (!train_) return x;
    Rng rng(seed);
    std::bernoulli_distribution keep(1.0 - p_);
    const T scale = static_cast<T>(1.0 / (1.0 - p_));
    mask_.assign(x.size(), T(0));
    Tensor<T> y = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = keep(rng) ? scale : T(0);
      y[i] *= mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) const {
    if (!train_) return gy;
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask_[i];
    return gx;
  }

 private:
  double p_;
  bool train_ = false;
  std::vector<T> mask_;
};

/// Single-layer LSTM over N x T x I sequences (gate order i, f, g, o),
/// zero initial state, full backpropagation through time.
template <typename T>
class LSTM {
 public:
  LSTM() = default;
  LSTM(std::string name, int input, int hidden)
      : w_ih(name + ".w_ih", {4 * hidden, input}),
        w_hh(name + ".w_hh", {4 * hidden, hidden}),
        bias(name + ".bias", {4 * hidden}),
        in_(input), hid_(hidden) {}

  void init(Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hid_));
    init_uniform(w_ih.value, bound, rng);
    init_uniform(w_hh.value, bound, rng);
    bias.value.fill(T(0));
  }

  int input_size() const { return in_; }
  int hidden_size() const { return hid_; }

  /// Returns the hidden state at every step, N x T x H.
  Tensor<T> forward(const Tensor<T>& x) {
    if (x.rank() != 3 || x.dim(2) != in_) fail(ErrorCode::ShapeMismatch, w_ih.name + ": bad input shape");
    x_ = x;
    const int N = x.dim(0), S = x.dim(1), H = hid_;
    gates_.assign(static_cast<std::size_t>(S), RowMat<T>(N, 4 * H));
    cells_.assign(static_cast<std::size_t>(S), RowMat<T>(N, H));
    hiddens_.assign(static_cast<std::size_t>(S), RowMat<T>(N, H));
    Tensor<T> out({N, S, H});
    ConstMatMap<T> wih(w_ih.value.ptr(), 4 * H, in_);
    ConstMatMap<T> whh(w_hh.value.ptr(), 4 * H, H);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias.value.ptr(), 4 * H);
    RowMat<T> h = RowMat<T>::Zero(N, H), c = RowMat<T>::Zero(N, H);
    for (int t = 0; t < S; ++t) {
      auto& G = gates_[static_cast<std::size_t>(t)];
      G.noalias() = step_input(x, t) * wih.transpose();
      G.noalias() += h * whh.transpose();
      G.rowwise() += b;
      for (int n = 0; n < N; ++n) {
        for (int j = 0; j < H; ++j) {
          G(n, j) = detail::sigmoid(G(n, j));
          G(n, H + j) = detail::sigmoid(G(n, H + j));
          G(n, 2 * H + j) = std::tanh(G(n, 2 * H + j));
          G(n, 3 * H + j) = detail::sigmoid(G(n, 3 * H + j));
          c(n, j) = G(n, H + j) * c(n, j) + G(n, j) * G(n, 2 * H + j);
          h(n, j) = G(n, 3 * H + j) * std::tanh(c(n, j));
        }
      }
      cells_[static_cast<std::size_t>(t)] = c;
      hiddens_[static_cast<std::size_t>(t)] = h;
      for (int n = 0; n < N; ++n) {
        std::copy(h.row(n).data(), h.row(n).data() + H, out.ptr() + (static_cast<std::size_t>(n) * S + t) * H);
      }
    }
    return out;
  }

  /// `gout` is dL/dh for every step (N x T x H); returns dL/dx.
  Tensor<T> backward(const Tensor<T>& gout) {
    const int N = x_.dim(0), S = x_.dim(1), H = hid_;
    Tensor<T> gx(x_.shape);
    ConstMatMap<T> wih(w_ih.value.ptr(), 4 * H, in_);
    ConstMatMap<T> whh(w_hh.value.ptr(), 4 * H, H);
    MatMap<T> gwih(w_ih.grad.ptr(), 4 * H, in_);
    MatMap<T> gwhh(w_hh.grad.ptr(), 4 * H, H);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(bias.grad.ptr(), 4 * H);
    RowMat<T> dh_next = RowMat<T>::Zero(N, H), dc_next = RowMat<T>::Zero(N, H);
    RowMat<T> dG(N, 4 * H);
    for (int t = S - 1; t >= 0; --t) {
      const auto& G = gates_[static_cast<std::size_t>(t)];
      const auto& c = cells_[static_cast<std::size_t>(t)];
      for (int n = 0; n < N; ++n) {
        const T* go = gout.ptr() + (static_cast<std::size_t>(n) * S + t) * H;
        for (int j = 0; j < H; ++j) {
          const T i = G(n, j), f = G(n, H + j), g = G(n, 2 * H + j), o = G(n, 3 * H + j);
          const T tc = std::tanh(c(n, j));
          const T c_prev = t > 0 ? cells_[static_cast<std::size_t>(t - 1)](n, j) : T(0);
          const T dh = go[j] + dh_next(n, j);
          const T dc = dh * o * (T(1) - tc * tc) + dc_next(n, j);
          dG(n, j) = dc * g * i * (T(1) - i);
          dG(n, H + j) = dc * c_prev * f * (T(1) - f);
          dG(n, 2 * H + j) = dc * i * (T(1) - g * g);
          dG(n, 3 * H + j) = dh * tc * o * (T(1) - o);
          dc_next(n, j) = dc * f;
        }
      }
      gwih.noalias() += dG.transpose() * step_input(x_, t);
      if (t > 0) gwhh.noalias() += dG.transpose() * hiddens_[static_cast<std::size_t>(t - 1)];
      gb += dG.colwise().sum();
      step_input_mut(gx, t).noalias() = dG * wih;
      dh_next.noalias() = dG * whh;
    }
    return gx;
  }

  std::vector<Param<T>*> params() { return {&w_ih, &w_hh, &bias}; }

  Param<T> w_ih;
  Param<T> w_hh;
  Param<T> bias;

 private:
  using StridedMap = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;
  using StridedMutMap = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;

  StridedMap step_input(const Tensor<T>& x, int t) const {
    return StridedMap(x.ptr() + static_cast<std::size_t>(t) * in_, x.dim(0), in_,
                      Eigen::OuterStride<>(static_cast<Eigen::Index>(x.dim(1)) * in_));
  }
  StridedMutMap step_input_mut(Tensor<T>& x, int t) const {
    return StridedMutMap(x.ptr() + static_cast<std::size_t>(t) * in_, x.dim(0), in_,
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(x.dim(1)) * in_));
  }

  int in_ = 0, hid_ = 0;
  Tensor<T> x_;
  std::vector<RowMat<T>> gates_, cells_, hiddens_;
};

}  // namespace motionkit::nn
