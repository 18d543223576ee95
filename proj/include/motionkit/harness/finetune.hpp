#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "motionkit/harness/train.hpp"

namespace motionkit::harness {

struct FinetuneConfig {
  double lr = 1e-4;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 7;
  Progress progress;
};

/// Labelled images for fine-tuning; labels are class indices in [0, n_classes).
struct LabelledSet {
  ImageSet images;
  std::vector<int> labels;
};

struct FinetuneResult {
  nn::ClassifierHead<float> head;
  double best_val_f1 = 0.0;  // percent, macro over all n classes
  int best_epoch = -1;
};

/// Macro F1 (percent) over classes [0, n); classes absent from both truth and
/// predictions are skipped.
inline double macro_f1_n(std::span<const int> truth, std::span<const int> pred, int n) {
  std::vector<long> tp(static_cast<std::size_t>(n)), row(tp.size()), col(tp.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++row.at(static_cast<std::size_t>(truth[i]));
    ++col.at(static_cast<std::size_t>(pred[i]));
    if (truth[i] == pred[i]) ++tp[static_cast<std::size_t>(truth[i])];
  }
  double sum = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    if (row[k] == 0 && col[k] == 0) continue;
    ++used;
    if (tp[k] > 0) sum += 2.0 * static_cast<double>(tp[k]) / static_cast<double>(row[k] + col[k]);
  }
  return used ? 100.0 * sum / used : 0.0;
}

/// Frozen conv features for every image, one row each.
inline nn::Tensor<float> extract_features(nn::MotionNet<float>& net, const ImageSet& images, int batch = 64) {
  const int width = net.config().feature_width();
  nn::Tensor<float> out({static_cast<int>(images.size()), width});
  const auto mode = net.is_fused() ? nn::BlockMode::Fused : nn::BlockMode::Eval;
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t b = 0; b < images.size(); b += static_cast<std::size_t>(batch)) {
    const std::size_t e = std::min(images.size(), b + static_cast<std::size_t>(batch));
    const auto f = net.extract(make_batch(images, std::span<const std::size_t>(order.data() + b, e - b), nullptr), mode);
    std::copy(f.data.begin(), f.data.end(), out.ptr() + b * static_cast<std::size_t>(width));
  }
  return out;
}

inline nn::Tensor<float> gather_rows(const nn::Tensor<float>& x, std::span<const std::size_t> rows) {
  const int w = x.dim(1);
  nn::Tensor<float> out({static_cast<int>(rows.size()), w});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.ptr() + rows[i] * static_cast<std::size_t>(w), w, out.ptr() + i * static_cast<std::size_t>(w));
  }
  return out;
}

inline std::vector<int> head_predict(nn::ClassifierHead<float>& head, const nn::Tensor<float>& feats) {
  const auto logits = head.forward(feats, false, 0);
  const int k = logits.dim(1);
  std::vector<int> out(static_cast<std::size_t>(logits.dim(0)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float* r = logits.ptr() + i * static_cast<std::size_t>(k);
    out[i] = static_cast<int>(std::max_element(r, r + k) - r);
  }
  return out;
}

/// Trains a fresh n_classes head on top of the frozen feature extractor of
/// `net` and returns the head with the best validation macro F1. `net` itself
/// is not modified; install the result with MotionNet::replace_head.
inline FinetuneResult finetune_embeddings(nn::MotionNet<float>& net, const LabelledSet& train, const LabelledSet& val,
                                          int n_classes, const FinetuneConfig& cfg) {
  if (train.images.empty()) fail(ErrorCode::EmptyDataset, "empty fine-tuning set");
  if (val.images.empty()) fail(ErrorCode::EmptyDataset, "empty fine-tuning validation set");
  if (n_classes < 2) fail(ErrorCode::BadFlag, "need at least 2 classes");
  for (const auto* s : {&train, &val}) {
    if (s->labels.size() != s->images.size()) fail(ErrorCode::ShapeMismatch, "one label per image required");
    for (int l : s->labels)
      if (l < 0 || l >= n_classes) fail(ErrorCode::BadFlag, "label " + std::to_string(l) + " outside class range");
  }
  const auto& nc = net.config();
  // The extractor runs once; only the head sees gradients.
  const auto f_train = extract_features(net, train.images);
  const auto f_val = extract_features(net, val.images);

  FinetuneResult out;
  out.head = nn::ClassifierHead<float>(nc.feature_width(), nc.hidden, n_classes, nc.dropout);
  nn::Rng init_rng(nn::derive_seed(cfg.seed, 0xF1E7));
  out.head.init(init_rng);
  nn::Adam<float> opt(out.head.params(), nn::AdamConfig{cfg.lr});
  nn::ClassifierHead<float> best = out.head;

  std::vector<std::size_t> order(train.images.size());
  std::vector<int> labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::Rng shuffle_rng(nn::derive_seed(cfg.seed, 0xF5EED, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng() % (i + 1)]);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + b, e - b);
      labels.clear();
      for (auto i : idx) labels.push_back(train.labels[i]);
      opt.zero_grad();
      const auto logits = out.head.forward(gather_rows(f_train, idx), true,
                                           nn::derive_seed(nn::derive_seed(cfg.seed, 0xD0, static_cast<std::uint64_t>(epoch)), b));
      const auto lg = nn::cross_entropy(logits, std::span<const int>(labels));
      out.head.backward(lg.grad, false);
      opt.step();
    }
    const double f1 = macro_f1_n(val.labels, head_predict(out.head, f_val), n_classes);
    if (out.best_epoch < 0 || f1 > out.best_val_f1) {
      out.best_val_f1 = f1;
      out.best_epoch = epoch;
      best = out.head;
    }
    if (cfg.progress) cfg.progress("finetune epoch " + std::to_string(epoch + 1) + " val_f1 " + std::to_string(f1));
  }
  out.head = std::move(best);
  return out;
}

/// Macro F1 (percent) of `net` with `head` on a labelled set.
inline double evaluate_head(nn::MotionNet<float>& net, nn::ClassifierHead<float>& head, const LabelledSet& set,
                            int n_classes) {
  if (set.images.empty()) return 0.0;
  return macro_f1_n(set.labels, head_predict(head, extract_features(net, set.images)), n_classes);
}

}  // namespace motionkit::harness
