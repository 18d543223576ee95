#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "motionkit/features/spectrogram.hpp"
#include "motionkit/harness/metrics.hpp"
#include "motionkit/nn/adam.hpp"
#include "motionkit/nn/checkpoint.hpp"
#include "motionkit/nn/loss.hpp"
#include "motionkit/nn/motion_net.hpp"

namespace motionkit::harness {

using features::ImagePtr;
using features::ImageSet;
using Progress = std::function<void(const std::string&)>;

struct TrainConfig {
  int epochs = 50;
  double lr = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 7;
  // Keep every k-th training / validation frame. Neighbouring frames overlap
  // by 7/8 at the default hop.
  int train_stride = 1;
  int val_stride = 1;
  int stage1 = 32;
  int stage2 = 64;
  int hidden = 512;
  double dropout = 0.5;
  bool include_other_in_macro = false;
  Progress progress;
};

struct TrainedModel {
  nn::MotionNet<float> net;
  double rate_hz = 0.0;
  double best_val_f1 = 0.0;
  int best_epoch = -1;
  std::vector<double> val_history;
};

/// Stable order: user, location, frame start.
inline ImageSet sorted(ImageSet images) {
  std::stable_sort(images.begin(), images.end(), [](const ImagePtr& a, const ImagePtr& b) {
    return std::tie(a->user_id, a->location, a->frame_start_unix_s) <
           std::tie(b->user_id, b->location, b->frame_start_unix_s);
  });
  return images;
}

inline ImageSet every_kth(const ImageSet& images, int k) {
  if (k <= 1) return images;
  ImageSet out;
  for (std::size_t i = 0; i < images.size(); i += static_cast<std::size_t>(k)) out.push_back(images[i]);
  return out;
}

template <typename Pred>
ImageSet select(const ImageSet& images, Pred pred) {
  ImageSet out;
  for (const auto& img : images)
    if (pred(*img)) out.push_back(img);
  return out;
}

/// Checks that every image has the same rate and shape; returns the rate.
inline double common_rate(const ImageSet& images) {
  if (images.empty()) fail(ErrorCode::EmptyDataset, "no spectrogram images");
  const auto& first = *images.front();
  for (const auto& img : images) {
    if (img->rate_hz != first.rate_hz || img->time_bins != first.time_bins || img->freq_bins != first.freq_bins) {
      fail(ErrorCode::MixedRates, "images mix " + std::to_string(first.rate_hz) + " Hz and " +
                                      std::to_string(img->rate_hz) + " Hz");
    }
  }
  return first.rate_hz;
}

/// Packs images [begin, end) of `order` into an N x 1 x T x F batch.
inline nn::Tensor<float> make_batch(const ImageSet& images, std::span<const std::size_t> order, std::vector<int>* labels) {
  const auto& first = *images[order.front()];
  const int n = static_cast<int>(order.size());
  const std::size_t px = static_cast<std::size_t>(first.time_bins) * first.freq_bins;
  nn::Tensor<float> x({n, 1, first.time_bins, first.freq_bins});
  if (labels) labels->resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& img = *images[order[i]];
    std::copy(img.data.begin(), img.data.end(), x.ptr() + i * px);
    if (labels) (*labels)[i] = static_cast<int>(img.activity);
  }
  return x;
}

inline std::vector<int> labels_of(const ImageSet& images) {
  std::vector<int> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(static_cast<int>(img->activity));
  return out;
}

inline nn::MotionNetConfig net_config(const TrainConfig& cfg, const features::SpectrogramImage& shape_of, int n_classes) {
  nn::MotionNetConfig nc;
  nc.rows = shape_of.time_bins;
  nc.cols = shape_of.freq_bins;
  nc.stage1 = cfg.stage1;
  nc.stage2 = cfg.stage2;
  nc.hidden = cfg.hidden;
  nc.n_classes = n_classes;
  nc.dropout = cfg.dropout;
  return nc;
}

/// Argmax class per image. Works in Fused mode when the net is fused, Eval
/// otherwise.
inline std::vector<int> predict(nn::MotionNet<float>& net, const ImageSet& images, int batch = 64) {
  std::vector<int> out;
  out.reserve(images.size());
  const auto mode = net.is_fused() ? nn::BlockMode::Fused : nn::BlockMode::Eval;
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t b = 0; b < images.size(); b += static_cast<std::size_t>(batch)) {
    const std::size_t e = std::min(images.size(), b + static_cast<std::size_t>(batch));
    const auto x = make_batch(images, std::span<const std::size_t>(order.data() + b, e - b), nullptr);
    const auto logits = net.forward(x, mode, false, 0);
    const int k = logits.dim(1);
    for (std::size_t i = 0; i < e - b; ++i) {
      const float* row = logits.ptr() + i * static_cast<std::size_t>(k);
      out.push_back(static_cast<int>(std::max_element(row, row + k) - row));
    }
  }
  return out;
}

inline EvalResult evaluate(nn::MotionNet<float>& net, const ImageSet& images, bool include_other = false) {
  if (images.empty()) return {};
  const auto truth = labels_of(images);
  const auto pred = predict(net, images);
  return score(truth, pred, include_other);
}

/// Shuffled minibatch training with Adam and cross-entropy; the epoch with
/// the best validation macro F1 is restored and fused before returning.
inline TrainedModel train_motion_model(const ImageSet& train_in, const ImageSet& val_in, const TrainConfig& cfg) {
  if (train_in.empty()) fail(ErrorCode::EmptyDataset, "empty training set");
  if (val_in.empty()) fail(ErrorCode::EmptyDataset, "empty validation set");
  ImageSet all = train_in;
  all.insert(all.end(), val_in.begin(), val_in.end());
  TrainedModel out;
  out.rate_hz = common_rate(all);

  const ImageSet train = every_kth(sorted(train_in), cfg.train_stride);
  const ImageSet val = every_kth(sorted(val_in), cfg.val_stride);

  out.net = nn::MotionNet<float>(net_config(cfg, *train.front(), kNumActivities));
  nn::Rng init_rng(nn::derive_seed(cfg.seed, 0x1417));
  out.net.init(init_rng);
  nn::Adam<float> opt(out.net.params(), nn::AdamConfig{cfg.lr});
  auto state = out.net.state();
  auto best = nn::snapshot(state);

  std::vector<std::size_t> order(train.size());
  std::vector<int> labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::Rng shuffle_rng(nn::derive_seed(cfg.seed, 0x5EED, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng() % (i + 1)]);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      // A batch of one gives degenerate batch-norm statistics.
      if (e - b < 2) continue;
      const auto x = make_batch(train, std::span<const std::size_t>(order.data() + b, e - b), &labels);
      opt.zero_grad();
      const auto logits = out.net.forward(x, nn::BlockMode::Train, true,
                                          nn::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, b));
      const auto lg = nn::cross_entropy(logits, std::span<const int>(labels));
      out.net.backward(lg.grad);
      opt.step();
      loss_sum += lg.loss;
      ++batches;
    }
    const double f1 = evaluate(out.net, val, cfg.include_other_in_macro).macro_f1;
    out.val_history.push_back(f1);
    if (out.best_epoch < 0 || f1 > out.best_val_f1) {
      out.best_val_f1 = f1;
      out.best_epoch = epoch;
      best = nn::snapshot(state);
    }
    if (cfg.progress) {
      cfg.progress("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
                   " loss " + std::to_string(batches ? loss_sum / batches : 0.0) + " val_f1 " + std::to_string(f1));
    }
  }
  if (cfg.epochs > 0) nn::restore(state, best);
  out.net.fuse();
  return out;
}

}  // namespace motionkit::harness
