#pragma once

#include <array>
#include <string>
#include <vector>

#include "motionkit/nn/layers.hpp"

namespace motionkit::nn {

struct AutoencoderConfig {
  int rows = 128;  // time bins
  int cols = 128;  // frequency bins
  std::array<int, 3> channels{8, 16, 32};
  int lstm_hidden = 256;
  int embed = 512;

  static int halve(int n) { return (n + 1) / 2; }
  int seq_steps() const { return halve(halve(halve(rows))); }
  int seq_cols() const { return halve(halve(halve(cols))); }
  int step_features() const { return channels[2] * seq_cols(); }
};

namespace detail {

/// [N, C, S, F] -> [N, S, C*F]: each time row becomes one sequence step.
template <typename T>
Tensor<T> to_sequence(const Tensor<T>& x) {
  const int N = x.dim(0), C = x.dim(1), S = x.dim(2), F = x.dim(3);
  Tensor<T> out({N, S, C * F});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int s = 0; s < S; ++s)
        for (int f = 0; f < F; ++f)
          out[((static_cast<std::size_t>(n) * S + s) * C + c) * F + f] = x[((static_cast<std::size_t>(n) * C + c) * S + s) * F + f];
  return out;
}

template <typename T>
Tensor<T> from_sequence(const Tensor<T>& seq, int C, int F) {
  const int N = seq.dim(0), S = seq.dim(1);
  Tensor<T> out({N, C, S, F});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int s = 0; s < S; ++s)
        for (int f = 0; f < F; ++f)
          out[((static_cast<std::size_t>(n) * C + c) * S + s) * F + f] = seq[((static_cast<std::size_t>(n) * S + s) * C + c) * F + f];
  return out;
}

}  // namespace detail

/// CNN-LSTM encoder: three stride-2 conv stages over the spectrogram, the
/// time rows fed as a sequence to an LSTM, last hidden state projected to the
/// embedding.
template <typename T>
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const AutoencoderConfig& cfg, const std::string& prefix = "enc")
      : cfg_(cfg),
        conv1(prefix + ".conv1", 1, cfg.channels[0], 3, 2, 1, true),
        conv2(prefix + ".conv2", cfg.channels[0], cfg.channels[1], 3, 2, 1, true),
        conv3(prefix + ".conv3", cfg.channels[1], cfg.channels[2], 3, 2, 1, true),
        lstm(prefix + ".lstm", cfg.step_features(), cfg.lstm_hidden),
        proj(prefix + ".proj", cfg.lstm_hidden, cfg.embed) {}

  void init(Rng& rng) {
    conv1.init(rng);
    conv2.init(rng);
    conv3.init(rng);
    lstm.init(rng);
    proj.init(rng, 3.0);
  }

  const AutoencoderConfig& config() const { return cfg_; }

  Tensor<T> forward(const Tensor<T>& x) {
    expect_shape(x, {x.dim(0), 1, cfg_.rows, cfg_.cols}, "Encoder input");
    Tensor<T> h = r1_.forward(conv1.forward(x));
    h = r2_.forward(conv2.forward(h));
    h = r3_.forward(conv3.forward(h));
    const Tensor<T> seq = lstm.forward(detail::to_sequence(h));
    const int N = x.dim(0), S = seq.dim(1), H = cfg_.lstm_hidden;
    Tensor<T> last({N, H});
    for (int n = 0; n < N; ++n) {
      std::copy_n(seq.ptr() + (static_cast<std::size_t>(n) * S + (S - 1)) * H, H, last.ptr() + static_cast<std::size_t>(n) * H);
    }
    return proj.forward(last);
  }

  Tensor<T> backward(const Tensor<T>& gz, bool need_input_grad = true) {
    const Tensor<T> glast = proj.backward(gz);
    const int N = gz.dim(0), S = cfg_.seq_steps(), H = cfg_.lstm_hidden;
    Tensor<T> gseq({N, S, H});
    for (int n = 0; n < N; ++n) {
      std::copy_n(glast.ptr() + static_cast<std::size_t>(n) * H, H, gseq.ptr() + (static_cast<std::size_t>(n) * S + (S - 1)) * H);
    }
    Tensor<T> g = detail::from_sequence(lstm.backward(gseq), cfg_.channels[2], cfg_.seq_cols());
    g = conv3.backward(r3_.backward(g));
    g = conv2.backward(r2_.backward(g));
    return conv1.backward(r1_.backward(g), need_input_grad);
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* p : conv1.params()) out.push_back(p);
    for (auto* p : conv2.params()) out.push_back(p);
    for (auto* p : conv3.params()) out.push_back(p);
    for (auto* p : lstm.params()) out.push_back(p);
    for (auto* p : proj.params()) out.push_back(p);
    return out;
  }

  std::vector<NamedTensor<T>> state() {
    std::vector<NamedTensor<T>> out;
    for (auto* p : params()) out.push_back({p->name, &p->value});
    return out;
  }

 private:
  AutoencoderConfig cfg_;

 public:
  Conv2d<T> conv1, conv2, conv3;
  LSTM<T> lstm;
  Linear<T> proj;

 private:
  ReLU<T> r1_, r2_, r3_;
};

/// Mirror of the encoder: the embedding is fed at every step of an LSTM,
/// each step's output is projected to one row of feature maps, and three
/// stride-2 transposed convs rebuild the spectrogram (cropped, sigmoid).
template <typename T>
class Decoder {
 public:
  Decoder() = default;
  explicit Decoder(const AutoencoderConfig& cfg, const std::string& prefix = "dec")
      : cfg_(cfg),
        lstm(prefix + ".lstm", cfg.embed, cfg.lstm_hidden),
        proj(prefix + ".proj", cfg.lstm_hidden, cfg.step_features()),
        up1(prefix + ".up1", cfg.channels[2], cfg.channels[1], 4, 2, 1),
        up2(prefix + ".up2", cfg.channels[1], cfg.channels[0], 4, 2, 1),
        up3(prefix + ".up3", cfg.channels[0], 1, 4, 2, 1) {}

  void init(Rng& rng) {
    lstm.init(rng);
    proj.init(rng);
    up1.init(rng);
    up2.init(rng);
    up3.init(rng);
  }

  const AutoencoderConfig& config() const { return cfg_; }

  Tensor<T> forward(const Tensor<T>& z) {
    if (z.rank() != 2 || z.dim(1) != cfg_.embed) fail(ErrorCode::ShapeMismatch, "Decoder expects N x embed input");
    const int N = z.dim(0), S = cfg_.seq_steps(), E = cfg_.embed, H = cfg_.lstm_hidden;
    Tensor<T> xin({N, S, E});
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        std::copy_n(z.ptr() + static_cast<std::size_t>(n) * E, E, xin.ptr() + (static_cast<std::size_t>(n) * S + s) * E);
    const Tensor<T> seq = lstm.forward(xin).reshaped({N * S, H});
    Tensor<T> rows = proj.forward(seq).reshaped({N, S, cfg_.step_features()});
    Tensor<T> h = r0_.forward(detail::from_sequence(rows, cfg_.channels[2], cfg_.seq_cols()));
    h = r1_.forward(up1.forward(h));
    h = r2_.forward(up2.forward(h));
    h = up3.forward(h);
    full_shape_ = h.shape;
    Tensor<T> cropped({N, 1, cfg_.rows, cfg_.cols});
    for (int n = 0; n < N; ++n)
      for (int r = 0; r < cfg_.rows; ++r)
        std::copy_n(h.ptr() + (static_cast<std::size_t>(n) * h.dim(2) + r) * h.dim(3), cfg_.cols,
                    cropped.ptr() + (static_cast<std::size_t>(n) * cfg_.rows + r) * cfg_.cols);
    return sig_.forward(cropped);
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const Tensor<T> gc = sig_.backward(gy);
    const int N = gy.dim(0), S = cfg_.seq_steps(), H = cfg_.lstm_hidden, E = cfg_.embed;
    Tensor<T> g(full_shape_);
    for (int n = 0; n < N; ++n)
      for (int r = 0; r < cfg_.rows; ++r)
        std::copy_n(gc.ptr() + (static_cast<std::size_t>(n) * cfg_.rows + r) * cfg_.cols, cfg_.cols,
                    g.ptr() + (static_cast<std::size_t>(n) * full_shape_[2] + r) * full_shape_[3]);
    g = up3.backward(g);
    g = up2.backward(r2_.backward(g));
    g = up1.backward(r1_.backward(g));
    g = detail::to_sequence(r0_.backward(g)).reshaped({N * S, cfg_.step_features()});
    const Tensor<T> gseq = proj.backward(g).reshaped({N, S, H});
    const Tensor<T> gx = lstm.backward(gseq);
    Tensor<T> gz({N, E});
    for (int n = 0; n < N; ++n)
      for (int s = 0; s < S; ++s)
        for (int e = 0; e < E; ++e) gz[static_cast<std::size_t>(n) * E + e] += gx[(static_cast<std::size_t>(n) * S + s) * E + e];
    return gz;
  }

  std::vector<Param<T>*> params() {
    std::vector<Param<T>*> out;
    for (auto* p : lstm.params()) out.push_back(p);
    for (auto* p : proj.params()) out.push_back(p);
    for (auto* p : up1.params()) out.push_back(p);
    for (auto* p : up2.params()) out.push_back(p);
    for (auto* p : up3.params()) out.push_back(p);
    return out;
  }

  std::vector<NamedTensor<T>> state() {
    std::vector<NamedTensor<T>> out;
    for (auto* p : params()) out.push_back({p->name, &p->value});
    return out;
  }

 private:
  AutoencoderConfig cfg_;

 public:
  LSTM<T> lstm;
  Linear<T> proj;
  ConvTranspose2d<T> up1, up2, up3;

 private:
  ReLU<T> r0_, r1_, r2_;
  Sigmoid<T> sig_;
  std::vector<int> full_shape_;
};

}  // namespace motionkit::nn
