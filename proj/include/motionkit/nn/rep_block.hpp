#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "motionkit/nn/layers.hpp"

namespace motionkit::nn {

enum class BlockMode { Train, Eval, Fused };

/// Reparameterizable conv block: a 3x3 conv+BN branch, a 1x1 conv+BN branch
/// and (when shapes allow) a BN-only identity branch, summed and ReLU'd.
/// After `fuse()` the three branches collapse into one biased 3x3 conv.
template <typename T>
class RepBlock {
 public:
  RepBlock() = default;
  RepBlock(std::string name, int in_ch, int out_ch, int stride)
      : conv3(name + ".conv3", in_ch, out_ch, 3, stride, 1, false),
        bn3(name + ".bn3", out_ch),
        conv1(name + ".conv1", in_ch, out_ch, 1, stride, 0, false),
        bn1(name + ".bn1", out_ch),
        name_(std::move(name)),
        in_ch_(in_ch),
        out_ch_(out_ch),
        stride_(stride) {
    if (has_skip()) bn_skip.emplace(name_ + ".bn_skip", out_ch);
  }

  void init(Rng& rng) {
    conv3.init(rng);
    conv1.init(rng);
  }

  bool has_skip() const { return in_ch_ == out_ch_ && stride_ == 1; }
  bool is_fused() const { return fused.has_value(); }
  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int stride() const { return stride_; }
  const std::string& name() const { return name_; }

  std::vector<int> output_shape(const std::vector<int>& in) const { return conv3.output_shape(in); }

  Tensor<T> forward(const Tensor<T>& x, BlockMode mode) {
    if (x.rank() != 4 || x.dim(1) != in_ch_) {
      fail(ErrorCode::ShapeMismatch, name_ + ": expected N x " + std::to_string(in_ch_) + " x H x W input");
    }
    mode_ = mode;
    if (mode == BlockMode::Fused) {
      if (!fused) fail(ErrorCode::FusedMissing, name_ + ": fused mode requested before fuse()");
      return relu_.forward(fused->forward(x));
    }
    const bool train = mode == BlockMode::Train;
    Tensor<T> sum = bn3.forward(conv3.forward(x), train);
    const Tensor<T> b1 = bn1.forward(conv1.forward(x), train);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += b1[i];
    if (bn_skip) {
      const Tensor<T> bs = bn_skip->forward(x, train);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += bs[i];
    }
    return relu_.forward(sum);
  }

  Tensor<T> backward(const Tensor<T>& gy, bool need_input_grad = true) {
    const Tensor<T> g = relu_.backward(gy);
    if (mode_ == BlockMode::Fused) return fused->backward(g, need_input_grad);
    Tensor<T> gx = conv3.backward(bn3.backward(g), need_input_grad);
    const Tensor<T> g1 = conv1.backward(bn1.backward(g), need_input_grad);
    if (need_input_grad) {
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g1[i];
    }
    if (bn_skip) {
      const Tensor<T> gs = bn_skip->backward(g);
      if (need_input_grad) {
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gs[i];
      }
    }
    return gx;
  }

  /// Folds every branch's BN into its kernel (w' = w g / sqrt(var + eps),
  /// b' = beta - mean g / sqrt(var + eps)), pads the 1x1 and identity
  /// branches to 3x3 and sums them into `fused`.
  void fuse() {
    Conv2d<T> f(name_ + ".fused", in_ch_, out_ch_, 3, stride_, 1, true);
    f.weight.value.fill(T(0));
    f.bias.value.fill(T(0));
    auto fold = [&](const BatchNorm2d<T>& bn, auto&& kernel_at) {
      for (int o = 0; o < out_ch_; ++o) {
        const double var = bn.running_var[static_cast<std::size_t>(o)];
        if (!(var > 0.0) || !std::isfinite(var)) fail(ErrorCode::DegenerateBN, bn.name() + ": running variance must be positive");
        const double scale = bn.gamma.value[static_cast<std::size_t>(o)] / std::sqrt(var + bn.eps);
        f.bias.value[static_cast<std::size_t>(o)] += static_cast<T>(
            bn.beta.value[static_cast<std::size_t>(o)] - bn.running_mean[static_cast<std::size_t>(o)] * scale);
        for (int c = 0; c < in_ch_; ++c) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              f.weight.value[((static_cast<std::size_t>(o) * in_ch_ + c) * 3 + ky) * 3 + kx] +=
                  static_cast<T>(kernel_at(o, c, ky, kx) * scale);
            }
          }
        }
      }
    };
    fold(bn3, [&](int o, int c, int ky, int kx) {
      return static_cast<double>(conv3.weight.value[((static_cast<std::size_t>(o) * in_ch_ + c) * 3 + ky) * 3 + kx]);
    });
    fold(bn1, [&](int o, int c, int ky, int kx) {
      return (ky == 1 && kx == 1) ? static_cast<double>(conv1.weight.value[static_cast<std::size_t>(o) * in_ch_ + c]) : 0.0;
    });
    if (bn_skip) {
      fold(*bn_skip, [&](int o, int c, int ky, int kx) { return (o == c && ky == 1 && kx == 1) ? 1.0 : 0.0; });
    }
    fused = std::move(f);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* p : conv3.params()) out.push_back(p);
    for (auto* p : bn3.params()) out.push_back(p);
    for (auto* p : conv1.params()) out.push_back(p);
    for (auto* p : bn1.params()) out.push_back(p);
    if (bn_skip) {
      for (auto* p : bn_skip->params()) out.push_back(p);
    }
    return out;
  }

  std::vector<NamedTensor<T>> state() {
    std::vector<NamedTensor<T>> out;
    for (auto* p : params()) out.push_back({p->name, &p->value});
    auto buffers = [&](BatchNorm2d<T>& bn) {
      out.push_back({bn.name() + ".running_mean", &bn.running_mean});
      out.push_back({bn.name() + ".running_var", &bn.running_var});
    };
    buffers(bn3);
    buffers(bn1);
    if (bn_skip) buffers(*bn_skip);
    if (fused) {
      out.push_back({fused->weight.name, &fused->weight.value});
      out.push_back({fused->bias.name, &fused->bias.value});
    }
    return out;
  }

  Conv2d<T> conv3;
  BatchNorm2d<T> bn3;
  Conv2d<T> conv1;
  BatchNorm2d<T> bn1;
  std::optional<BatchNorm2d<T>> bn_skip;
  std::optional<Conv2d<T>> fused;

 private:
  std::string name_;
  int in_ch_ = 1, out_ch_ = 1, stride_ = 2;
  BlockMode mode_ = BlockMode::Train;
  ReLU<T> relu_;
};

}  // namespace motionkit::nn
