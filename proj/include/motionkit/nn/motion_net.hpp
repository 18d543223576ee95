#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "motionkit/nn/layers.hpp"
#include "motionkit/nn/rep_block.hpp"

namespace motionkit::nn {

/// Three affine layers (hidden, hidden, n_classes) with ReLU between them
/// and dropout before the last one.
template <typename T>
class ClassifierHead {
 public:
  ClassifierHead() = default;
  ClassifierHead(int in_features, int hidden, int n_classes, double dropout)
      : fc1("head.fc1", in_features, hidden),
        fc2("head.fc2", hidden, hidden),
        fc3("head.fc3", hidden, n_classes),
        drop_(dropout) {}

  void init(Rng& rng) {
    fc1.init(rng);
    fc2.init(rng);
    fc3.init(rng, 1.0);
  }

  int in_features() const { return fc1.in_features(); }
  int n_classes() const { return fc3.out_features(); }
  double dropout() const { return drop_.p(); }

  /// Dropout is active only when `train`; the mask is drawn from `seed`.
  Tensor<T> forward(const Tensor<T>& features, bool train, std::uint64_t seed) {
    Tensor<T> h = relu1_.forward(fc1.forward(features));
    h = relu2_.forward(fc2.forward(h));
    h = drop_.forward(h, train, seed);
    return fc3.forward(h);
  }

  Tensor<T> backward(const Tensor<T>& glogits, bool need_input_grad = true) {
    Tensor<T> g = drop_.backward(fc3.backward(glogits));
    g = fc2.backward(relu2_.backward(g));
    return fc1.backward(relu1_.backward(g), need_input_grad);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* layer : {&fc1, &fc2, &fc3}) {
      for (auto* p : layer->params()) out.push_back(p);
    }
    return out;
  }

  Linear<T> fc1, fc2, fc3;

 private:
  ReLU<T> relu1_, relu2_;
  Dropout<T> drop_{0.5};
};

struct MotionNetConfig {
  int rows = 128;  // time bins
  int cols = 128;  // frequency bins
  int stage1 = 32;
  int stage2 = 64;
  int hidden = 512;
  int n_classes = 4;
  double dropout = 0.5;

  int feature_rows() const { return ((rows + 1) / 2 + 1) / 2; }
  int feature_cols() const { return ((cols + 1) / 2 + 1) / 2; }
  int feature_width() const { return stage2 * feature_rows() * feature_cols(); }
};

/// Spectrogram classifier: two stride-2 reparameterizable conv stages,
/// flattened into the three-layer head.
template <typename T>
class MotionNet {
 public:
  MotionNet() = default;
  explicit MotionNet(const MotionNetConfig& cfg)
      : cfg_(cfg),
        stage1("stage1", 1, cfg.stage1, 2),
        stage2("stage2", cfg.stage1, cfg.stage2, 2),
        head(cfg.feature_width(), cfg.hidden, cfg.n_classes, cfg.dropout) {}

  void init(Rng& rng) {
    stage1.init(rng);
    stage2.init(rng);
    head.init(rng);
  }

  const MotionNetConfig& config() const { return cfg_; }

  /// Swaps in a new classifier (e.g. after fine-tuning to other classes).
  void replace_head(ClassifierHead<T> h) {
    if (h.in_features() != cfg_.feature_width()) fail(ErrorCode::ShapeMismatch, "head input width mismatch");
    head = std::move(h);
    cfg_.n_classes = head.n_classes();
  }

  bool is_fused() const { return stage1.is_fused() && stage2.is_fused(); }

  void fuse() {
    stage1.fuse();
    stage2.fuse();
  }

  /// Flattened conv features, N x feature_width.
  Tensor<T> extract(const Tensor<T>& x, BlockMode mode) {
    expect_shape(x, {x.dim(0), 1, cfg_.rows, cfg_.cols}, "MotionNet input");
    Tensor<T> h = stage2.forward(stage1.forward(x, mode), mode);
    feat_shape_ = h.shape;
    return h.reshaped({h.dim(0), cfg_.feature_width()});
  }

  Tensor<T> forward(const Tensor<T>& x, BlockMode mode, bool train_head, std::uint64_t seed) {
    return head.forward(extract(x, mode), train_head, seed);
  }

  /// Backpropagates through head and conv stages. The input gradient is not
  /// needed for training so it is skipped unless requested.
  Tensor<T> backward(const Tensor<T>& glogits, bool need_input_grad = false) {
    Tensor<T> g = head.backward(glogits).reshaped(feat_shape_);
    g = stage2.backward(g);
    return stage1.backward(g, need_input_grad);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out = stage1.params();
    for (auto* p : stage2.params()) out.push_back(p);
    for (auto* p : head.params()) out.push_back(p);
    return out;
  }

  std::vector<NamedTensor<T>> state() {
    std::vector<NamedTensor<T>> out = stage1.state();
    for (auto& s : stage2.state()) out.push_back(s);
    for (auto* p : head.params()) out.push_back({p->name, &p->value});
    return out;
  }

  /// State of the conv feature extractor only (what fine-tuning freezes).
  std::vector<NamedTensor<T>> extractor_state() {
    std::vector<NamedTensor<T>> out = stage1.state();
    for (auto& s : stage2.state()) out.push_back(s);
    return out;
  }

 private:
  MotionNetConfig cfg_;

 public:
  RepBlock<T> stage1;
  RepBlock<T> stage2;
  ClassifierHead<T> head;

 private:
  std::vector<int> feat_shape_;
};

}  // namespace motionkit::nn
