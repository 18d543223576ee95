#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "motionkit/features/spectrogram.hpp"
#include "motionkit/ingest/csv.hpp"
#include "motionkit/nn/adam.hpp"
#include "motionkit/nn/autoencoder.hpp"
#include "motionkit/nn/checkpoint.hpp"
#include "motionkit/nn/loss.hpp"
#include "motionkit/synthesis/cost.hpp"
#include "motionkit/synthesis/sinkhorn.hpp"
#include "motionkit/synthesis/transport.hpp"

namespace motionkit::synthesis {

using features::ImagePtr;
using features::ImageSet;
using Progress = std::function<void(const std::string&)>;

/// N x 1 x T x F batch of the images at `idx`.
inline nn::Tensor<float> stack_images(const ImageSet& images, std::span<const std::size_t> idx) {
  const auto& first = *images.at(idx.front());
  const std::size_t px = static_cast<std::size_t>(first.time_bins) * first.freq_bins;
  nn::Tensor<float> x({static_cast<int>(idx.size()), 1, first.time_bins, first.freq_bins});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& img = *images[idx[i]];
    if (img.data.size() != px) fail(ErrorCode::ShapeMismatch, "images differ in shape");
    std::copy(img.data.begin(), img.data.end(), x.ptr() + i * px);
  }
  return x;
}

inline std::vector<std::size_t> iota_index(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

inline void shuffle_index(std::vector<std::size_t>& order, std::uint64_t seed) {
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
}

template <typename Fn>
void for_batches(std::size_t n, int batch, Fn fn) {
  for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(batch)) fn(b, std::min(n, b + static_cast<std::size_t>(batch)));
}

// ---------------------------------------------------------------- autoencoder

struct AutoencoderTrainConfig {
  std::array<int, 3> channels{8, 16, 32};
  int lstm_hidden = 256;
  int embed = 512;
  int epochs = 20;
  double lr = 1e-3;
  int batch_size = 16;
  std::uint64_t seed = 7;
  Progress progress;
};

struct Autoencoder {
  Location location;
  nn::Encoder<float> encoder;
  nn::Decoder<float> decoder;
  double best_val_mse = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  std::vector<double> val_history;

  std::vector<nn::NamedTensor<float>> state() {
    auto out = encoder.state();
    for (auto& s : decoder.state()) out.push_back(s);
    return out;
  }
};

inline nn::AutoencoderConfig autoencoder_shape(const features::SpectrogramImage& img, const AutoencoderTrainConfig& cfg) {
  nn::AutoencoderConfig c;
  c.rows = img.time_bins;
  c.cols = img.freq_bins;
  c.channels = cfg.channels;
  c.lstm_hidden = cfg.lstm_hidden;
  c.embed = cfg.embed;
  return c;
}

/// Encoder embeddings, one row per image.
inline nn::Tensor<float> encode_all(nn::Encoder<float>& enc, const ImageSet& images, int batch = 32) {
  const int e = enc.config().embed;
  nn::Tensor<float> out({static_cast<int>(images.size()), e});
  const auto idx = iota_index(images.size());
  for_batches(images.size(), batch, [&](std::size_t b, std::size_t end) {
    const auto z = enc.forward(stack_images(images, std::span<const std::size_t>(idx.data() + b, end - b)));
    std::copy(z.data.begin(), z.data.end(), out.ptr() + b * static_cast<std::size_t>(e));
  });
  return out;
}

/// Mean reconstruction MSE over a set of images.
inline double reconstruction_mse(Autoencoder& ae, const ImageSet& images, int batch = 32) {
  if (images.empty()) return 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  const auto idx = iota_index(images.size());
  for_batches(images.size(), batch, [&](std::size_t b, std::size_t end) {
    const auto x = stack_images(images, std::span<const std::size_t>(idx.data() + b, end - b));
    sum += mean_squared(ae.decoder.forward(ae.encoder.forward(x)), x) * static_cast<double>(x.size());
    count += x.size();
  });
  return sum / static_cast<double>(count);
}

/// Location-specific autoencoder trained on reconstruction MSE; the epoch
/// with the lowest validation MSE is restored. Zero epochs returns the
/// initialization. An empty validation set falls back to the training set.
inline Autoencoder train_autoencoder(const ImageSet& train, const ImageSet& val_in, const AutoencoderTrainConfig& cfg) {
  if (train.empty()) fail(ErrorCode::EmptyDataset, "autoencoder needs training images");
  const ImageSet& val = val_in.empty() ? train : val_in;
  Autoencoder ae;
  ae.location = train.front()->location;
  const auto shape = autoencoder_shape(*train.front(), cfg);
  ae.encoder = nn::Encoder<float>(shape, "enc");
  ae.decoder = nn::Decoder<float>(shape, "dec");
  nn::Rng init(nn::derive_seed(cfg.seed, 0xAE));
  ae.encoder.init(init);
  ae.decoder.init(init);
  if (cfg.epochs <= 0) return ae;

  auto params = ae.encoder.params();
  for (auto* p : ae.decoder.params()) params.push_back(p);
  nn::Adam<float> opt(params, nn::AdamConfig{cfg.lr});
  const auto state = ae.state();
  auto best = nn::snapshot(state);
  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_index(order, nn::derive_seed(cfg.seed, 0xAE5, static_cast<std::uint64_t>(epoch)));
    double loss = 0.0;
    int batches = 0;
    for_batches(order.size(), cfg.batch_size, [&](std::size_t b, std::size_t end) {
      const auto x = stack_images(train, std::span<const std::size_t>(order.data() + b, end - b));
      opt.zero_grad();
      const auto lg = nn::mse(ae.decoder.forward(ae.encoder.forward(x)), x);
      ae.encoder.backward(ae.decoder.backward(lg.grad), false);
      opt.step();
      loss += lg.loss;
      ++batches;
    });
    const double v = reconstruction_mse(ae, val);
    ae.val_history.push_back(v);
    if (v < ae.best_val_mse) {
      ae.best_val_mse = v;
      ae.best_epoch = epoch;
      best = nn::snapshot(state);
    }
    if (cfg.progress) {
      cfg.progress("autoencoder " + ae.location.name() + " epoch " + std::to_string(epoch + 1) + " loss " +
                   std::to_string(loss / std::max(1, batches)) + " val_mse " + std::to_string(v));
    }
  }
  nn::restore(state, best);
  return ae;
}

// ------------------------------------------------------------------- pairing

struct AlignedPair {
  ImagePtr source;
  ImagePtr target;
};

/// Pairs each source-location frame with the same user's target-location
/// frame whose start time is closest, if within `tol_s`.
inline std::vector<AlignedPair> align_pairs(const ImageSet& images, const Location& source, const Location& target,
                                            double tol_s = 0.32) {
  std::map<std::string, std::vector<ImagePtr>> targets;
  for (const auto& img : images)
    if (img->location == target) targets[img->user_id].push_back(img);
  for (auto& [user, v] : targets) {
    std::sort(v.begin(), v.end(),
              [](const ImagePtr& a, const ImagePtr& b) { return a->frame_start_unix_s < b->frame_start_unix_s; });
  }
  std::vector<AlignedPair> out;
  for (const auto& img : images) {
    if (!(img->location == source)) continue;
    const auto it = targets.find(img->user_id);
    if (it == targets.end()) continue;
    const auto& v = it->second;
    const double t = img->frame_start_unix_s;
    auto pos = std::lower_bound(v.begin(), v.end(), t,
                                [](const ImagePtr& a, double x) { return a->frame_start_unix_s < x; });
    ImagePtr best;
    double gap = tol_s;
    for (auto c : {pos, pos == v.begin() ? v.end() : pos - 1}) {
      if (c == v.end()) continue;
      const double d = std::abs((*c)->frame_start_unix_s - t);
      if (d < gap) {
        gap = d;
        best = *c;
      }
    }
    if (best) out.push_back({img, best});
  }
  return out;
}

// --------------------------------------------------------------- synthesizer

struct SynthConfig {
  double lambda = 0.1;
  int transport_iterations = 100;  // unrolled steps during training
  int cost_dim = 16;
  double cost_init_std = 0.25;
  int epochs = 20;
  double lr = 1e-4;
  int batch_size = 16;
  std::uint64_t seed = 7;
  int sinkhorn_max_iters = 1000;
  double sinkhorn_tol = 1e-6;
  Progress progress;
};

/// Source encoder, learnable cost embedding and decoder. The target encoder
/// is only needed while training and is not kept.
struct Synthesizer {
  Location source;
  Location target;
  double lambda = 0.1;
  std::uint64_t seed = 0;
  int sinkhorn_max_iters = 1000;
  double sinkhorn_tol = 1e-6;
  nn::AutoencoderConfig shape;
  nn::Encoder<float> encoder;
  nn::Decoder<float> decoder;
  nn::Param<float> cost_rows;
  bool trained = false;
  SynthesisLoss best_val;
  int best_epoch = -1;

  std::vector<nn::NamedTensor<float>> state() {
    auto out = encoder.state();
    for (auto& s : decoder.state()) out.push_back(s);
    out.push_back({cost_rows.name, &cost_rows.value});
    return out;
  }

  /// Plan against uniform marginals. It does not depend on the input, so one
  /// solve serves a whole batch.
  TransportPlan plan() const {
    const auto c = build_cost(cost_rows.value);
    const int n = c.dim(0);
    SinkhornProblem pb;
    pb.cost = nn::ConstMatMap<float>(c.ptr(), n, n).cast<double>();
    pb.a = Eigen::VectorXd::Constant(n, 1.0 / n);
    pb.b = pb.a;
    pb.lambda = lambda;
    pb.max_iters = sinkhorn_max_iters;
    pb.tol = sinkhorn_tol;
    return sinkhorn(pb);
  }
};

/// Encodes, transports every embedding through `plan` and decodes.
inline nn::Tensor<float> synthesize_batch(Synthesizer& s, const Eigen::MatrixXd& plan, const nn::Tensor<float>& x,
                                          nn::Tensor<float>* transported = nullptr) {
  const auto z = s.encoder.forward(x);
  const int n = z.dim(0), e = z.dim(1);
  nn::Tensor<float> zt({n, e});
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd f = nn::ConstMatMap<float>(z.ptr() + static_cast<std::size_t>(i) * e, 1, e).transpose().cast<double>();
    const auto moved = transport_apply(plan, f);
    for (int j = 0; j < e; ++j) zt[static_cast<std::size_t>(i) * e + j] = static_cast<float>(moved.values[j]);
  }
  if (transported) *transported = zt;
  return s.decoder.forward(zt);
}

/// Validation losses through the inference path; `zt_all` holds the frozen
/// target-encoder embeddings of the pairs.
inline SynthesisLoss synthesis_losses(Synthesizer& s, const std::vector<AlignedPair>& pairs, const nn::Tensor<float>& zt_all,
                                      int batch = 32) {
  const auto plan = s.plan();
  ImageSet src, tgt;
  for (const auto& p : pairs) {
    src.push_back(p.source);
    tgt.push_back(p.target);
  }
  const int e = zt_all.dim(1);
  SynthesisLoss sum;
  const auto idx = iota_index(pairs.size());
  for_batches(pairs.size(), batch, [&](std::size_t b, std::size_t end) {
    const std::span<const std::size_t> span(idx.data() + b, end - b);
    nn::Tensor<float> moved;
    const auto y = synthesize_batch(s, plan.plan, stack_images(src, span), &moved);
    nn::Tensor<float> zt({static_cast<int>(end - b), e});
    std::copy_n(zt_all.ptr() + b * static_cast<std::size_t>(e), zt.size(), zt.ptr());
    const auto l = synthesis_loss(moved, zt, y, stack_images(tgt, span));
    const double w = static_cast<double>(end - b);
    sum.l_ot += l.l_ot * w;
    sum.l_recon += l.l_recon * w;
  });
  const double n = static_cast<double>(pairs.size());
  sum.l_ot /= n;
  sum.l_recon /= n;
  sum.total = sum.l_ot + sum.l_recon;
  return sum;
}

/// Trains the cost embedding and the decoder on time-aligned pairs against
/// l_ot + l_recon. Both encoders stay frozen: they are only run forward, once,
/// to precompute embeddings. The decoder starts from the target autoencoder's.
/// The epoch with the lowest validation total (inference path) is kept.
inline Synthesizer train_synthesizer(Autoencoder& source_ae, Autoencoder& target_ae, const std::vector<AlignedPair>& train,
                                     const std::vector<AlignedPair>& val_in, const SynthConfig& cfg) {
  if (train.empty()) fail(ErrorCode::NoAlignedPairs, "no time-aligned source/target frames");
  const auto& val = val_in.empty() ? train : val_in;

  Synthesizer s;
  s.source = source_ae.location;
  s.target = target_ae.location;
  s.lambda = cfg.lambda;
  s.seed = cfg.seed;
  s.sinkhorn_max_iters = cfg.sinkhorn_max_iters;
  s.sinkhorn_tol = cfg.sinkhorn_tol;
  s.shape = source_ae.encoder.config();
  s.encoder = source_ae.encoder;
  s.decoder = target_ae.decoder;
  const int e = s.shape.embed;
  s.cost_rows = nn::Param<float>("synth.cost_rows", {e, cfg.cost_dim});
  {
    nn::Rng rng(nn::derive_seed(cfg.seed, 0xC057));
    std::normal_distribution<double> d(0.0, cfg.cost_init_std);
    for (auto& v : s.cost_rows.value.data) v = static_cast<float>(d(rng));
  }

  ImageSet src, tgt, vtgt;
  for (const auto& p : train) {
    src.push_back(p.source);
    tgt.push_back(p.target);
  }
  for (const auto& p : val) vtgt.push_back(p.target);
  const auto zs = encode_all(source_ae.encoder, src);
  const auto zt = encode_all(target_ae.encoder, tgt);
  const auto zt_val = encode_all(target_ae.encoder, vtgt);

  BatchTransport<float> bt({cfg.lambda, cfg.transport_iterations});
  auto params = s.decoder.params();
  params.push_back(&s.cost_rows);
  nn::Adam<float> opt(params, nn::AdamConfig{cfg.lr});
  const auto state = s.state();
  auto best = nn::snapshot(state);
  double best_total = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_index(order, nn::derive_seed(cfg.seed, 0x5A5, static_cast<std::uint64_t>(epoch)));
    SynthesisLoss running;
    int batches = 0;
    for_batches(order.size(), cfg.batch_size, [&](std::size_t b, std::size_t end) {
      const std::span<const std::size_t> idx(order.data() + b, end - b);
      nn::Tensor<float> zs_b({static_cast<int>(idx.size()), e}), zt_b(zs_b.shape);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(zs.ptr() + idx[i] * e, e, zs_b.ptr() + i * e);
        std::copy_n(zt.ptr() + idx[i] * e, e, zt_b.ptr() + i * e);
      }
      const auto x_t = stack_images(tgt, idx);
      opt.zero_grad();
      const auto moved = bt.forward(build_cost(s.cost_rows.value), zs_b);
      const auto y = s.decoder.forward(moved);
      const auto ot = nn::mse(moved, zt_b);
      const auto rec = nn::mse(y, x_t);
      auto gz = s.decoder.backward(rec.grad);
      for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += ot.grad[i];
      const auto g = bt.backward(gz);
      const auto ge = build_cost_backward(s.cost_rows.value, g.cost);
      for (std::size_t i = 0; i < ge.size(); ++i) s.cost_rows.grad[i] += ge[i];
      opt.step();
      running.l_ot += ot.loss;
      running.l_recon += rec.loss;
      ++batches;
    });
    const auto v = synthesis_losses(s, val, zt_val);
    if (v.total < best_total) {
      best_total = v.total;
      s.best_val = v;
      s.best_epoch = epoch;
      best = nn::snapshot(state);
    }
    if (cfg.progress) {
      cfg.progress("synth " + s.source.name() + "->" + s.target.name() + " epoch " + std::to_string(epoch + 1) +
                   " l_ot " + std::to_string(running.l_ot / std::max(1, batches)) + " l_recon " +
                   std::to_string(running.l_recon / std::max(1, batches)) + " val_total " + std::to_string(v.total));
    }
  }
  if (cfg.epochs > 0) {
    nn::restore(state, best);
  } else {
    s.best_val = synthesis_losses(s, val, zt_val);
  }
  s.trained = true;
  return s;
}

/// Target-location spectrograms generated from source-location ones. Only
/// the source encoder is used. Metadata is copied with the location swapped.
inline ImageSet synthesize(Synthesizer& s, const ImageSet& sources, int batch = 32) {
  if (!s.trained) fail(ErrorCode::Untrained, "synthesizer has not been trained or loaded");
  ImageSet out;
  if (sources.empty()) return out;
  const auto plan = s.plan();
  const auto idx = iota_index(sources.size());
  for_batches(sources.size(), batch, [&](std::size_t b, std::size_t end) {
    const auto y = synthesize_batch(s, plan.plan, stack_images(sources, std::span<const std::size_t>(idx.data() + b, end - b)));
    const std::size_t px = static_cast<std::size_t>(s.shape.rows) * s.shape.cols;
    for (std::size_t i = b; i < end; ++i) {
      auto img = std::make_shared<features::SpectrogramImage>(*sources[i]);
      img->location = s.target;
      img->data.assign(y.ptr() + (i - b) * px, y.ptr() + (i - b + 1) * px);
      out.push_back(std::move(img));
    }
  });
  return out;
}

// ---------------------------------------------------------------- checkpoint

inline void save_synthesizer(const std::filesystem::path& dir, Synthesizer& s) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["source"] = s.source.name();
  j["target"] = s.target.name();
  j["lambda"] = s.lambda;
  j["seed"] = s.seed;
  j["sinkhorn_max_iters"] = s.sinkhorn_max_iters;
  j["sinkhorn_tol"] = s.sinkhorn_tol;
  j["rows"] = s.shape.rows;
  j["cols"] = s.shape.cols;
  j["channels"] = s.shape.channels;
  j["lstm_hidden"] = s.shape.lstm_hidden;
  j["embed"] = s.shape.embed;
  j["cost_dim"] = s.cost_rows.value.dim(1);
  j["best_epoch"] = s.best_epoch;
  j["val_l_ot"] = s.best_val.l_ot;
  j["val_l_recon"] = s.best_val.l_recon;
  csv::write_text(dir / "synth.json", j.dump(2) + "\n");
  nn::save_state(dir / "tensors", s.state());
}

inline Synthesizer load_synthesizer(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(csv::read_text(dir / "synth.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Io, "bad synth.json: " + std::string(e.what()));
  }
  Synthesizer s;
  s.source = Location::parse(j.at("source").get<std::string>());
  s.target = Location::parse(j.at("target").get<std::string>());
  s.lambda = j.at("lambda").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.sinkhorn_max_iters = j.at("sinkhorn_max_iters").get<int>();
  s.sinkhorn_tol = j.at("sinkhorn_tol").get<double>();
  s.shape.rows = j.at("rows").get<int>();
  s.shape.cols = j.at("cols").get<int>();
  s.shape.channels = j.at("channels").get<std::array<int, 3>>();
  s.shape.lstm_hidden = j.at("lstm_hidden").get<int>();
  s.shape.embed = j.at("embed").get<int>();
  s.best_epoch = j.value("best_epoch", -1);
  s.best_val.l_ot = j.value("val_l_ot", 0.0);
  s.best_val.l_recon = j.value("val_l_recon", 0.0);
  s.best_val.total = s.best_val.l_ot + s.best_val.l_recon;
  s.encoder = nn::Encoder<float>(s.shape, "enc");
  s.decoder = nn::Decoder<float>(s.shape, "dec");
  s.cost_rows = nn::Param<float>("synth.cost_rows", {s.shape.embed, j.at("cost_dim").get<int>()});
  nn::load_state(dir / "tensors", s.state());
  s.trained = true;
  return s;
}

// ------------------------------------------------------------------ triptych

/// Writes source | real target | synthetic side by side as an 8-bit binary
/// PGM (time down, frequency across), separated by 2-pixel white bars.
inline void write_triptych_pgm(const std::filesystem::path& path, const features::SpectrogramImage& source,
                               const features::SpectrogramImage& real, const features::SpectrogramImage& synthetic) {
  const std::array<const features::SpectrogramImage*, 3> panels{&source, &real, &synthetic};
  int rows = 0, cols = 0;
  for (const auto* p : panels) {
    rows = std::max(rows, p->time_bins);
    cols += p->freq_bins;
  }
  constexpr int kBar = 2;
  cols += 2 * kBar;
  std::string body(static_cast<std::size_t>(rows) * cols, static_cast<char>(255));
  int x0 = 0;
  for (const auto* p : panels) {
    for (int r = 0; r < p->time_bins; ++r)
      for (int c = 0; c < p->freq_bins; ++c) {
        const float v = std::clamp(p->at(r, c), 0.0f, 1.0f);
        body[static_cast<std::size_t>(r) * cols + x0 + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
      }
    x0 += p->freq_bins + kBar;
  }
  csv::write_text(path, "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n" + body);
}

}  // namespace motionkit::synthesis
