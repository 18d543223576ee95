#pragma once

// One finite-difference instance per differentiable op. Each function builds
// a small random instance in double precision, runs the analytic backward
// pass, then compares against central differences of the scalar loss
// L = <r, op(x)> for a fixed random projection r.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "motionkit/nn/autoencoder.hpp"
#include "motionkit/nn/layers.hpp"
#include "motionkit/nn/loss.hpp"
#include "motionkit/nn/motion_net.hpp"
#include "motionkit/nn/rep_block.hpp"
#include "motionkit/synthesis/cost.hpp"
#include "motionkit/synthesis/sinkhorn.hpp"
#include "motionkit/synthesis/transport.hpp"

namespace motionkit::testing {

using nn::Tensor;
using Rng64 = std::mt19937_64;

struct GradOp {
  std::string name;
  std::function<double(Rng64&)> instance;
};

namespace detail {

constexpr std::size_t kCoordsPerTensor = 12;

template <typename Layer>
void zero_grads(Layer& layer) {
  for (auto* p : layer.params()) p->zero_grad();
}

template <typename Layer>
void add_param_coords(Layer& layer, Rng64& rng, std::vector<Coord>& coords) {
  for (auto* p : layer.params()) sample_coords(p->value, p->grad, kCoordsPerTensor, rng, coords);
}

// Zero biases put ReLU inputs exactly on the kink wherever the incoming
// activations are dead, so central differences straddle it.
template <typename Layer>
void randomize_biases(Layer& layer, nn::Rng& rng) {
  for (auto* p : layer.params()) {
    if (p->name.ends_with(".bias")) init_uniform(p->value, 0.5, rng);
  }
}

}  // namespace detail

inline double grad_conv2d(Rng64& rng) {
  std::uniform_int_distribution<int> stride(1, 2);
  nn::Conv2d<double> conv("c", 2, 3, 3, stride(rng), 1, true);
  nn::Rng init(rng());
  conv.init(init);
  init_uniform(conv.bias.value, 0.5, init);
  auto x = random_tensor({2, 2, 5, 6}, rng);
  const auto r = random_tensor(conv.output_shape(x.shape), rng);
  detail::zero_grads(conv);
  conv.forward(x);
  const auto gx = conv.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(conv, rng, coords);
  return check_coords([&] { return dot(r, conv.forward(x)); }, coords);
}

inline double grad_conv_transpose(Rng64& rng) {
  nn::ConvTranspose2d<double> up("u", 3, 2, 4, 2, 1);
  nn::Rng init(rng());
  up.init(init);
  init_uniform(up.bias.value, 0.5, init);
  auto x = random_tensor({2, 3, 3, 4}, rng);
  const auto r = random_tensor({2, 2, 6, 8}, rng);
  detail::zero_grads(up);
  up.forward(x);
  const auto gx = up.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(up, rng, coords);
  return check_coords([&] { return dot(r, up.forward(x)); }, coords);
}

inline double grad_batchnorm(Rng64& rng, bool train) {
  nn::BatchNorm2d<double> bn("bn", 3);
  nn::Rng init(rng());
  init_uniform(bn.gamma.value, 1.5, init);
  init_uniform(bn.beta.value, 0.5, init);
  for (auto& v : bn.running_mean.data) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  for (auto& v : bn.running_var.data) v = std::uniform_real_distribution<double>(0.5, 2)(rng);
  auto x = random_tensor({3, 3, 4, 4}, rng, 2.0);
  const auto r = random_tensor(x.shape, rng);
  detail::zero_grads(bn);
  bn.forward(x, train);
  const auto gx = bn.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(bn, rng, coords);
  return check_coords([&] { return dot(r, bn.forward(x, train)); }, coords);
}

inline double grad_linear(Rng64& rng) {
  nn::Linear<double> fc("fc", 7, 5);
  nn::Rng init(rng());
  fc.init(init);
  init_uniform(fc.bias.value, 0.5, init);
  auto x = random_tensor({4, 7}, rng);
  const auto r = random_tensor({4, 5}, rng);
  detail::zero_grads(fc);
  fc.forward(x);
  const auto gx = fc.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(fc, rng, coords);
  return check_coords([&] { return dot(r, fc.forward(x)); }, coords);
}

template <typename Act>
double grad_elementwise(Rng64& rng) {
  Act act;
  auto x = random_tensor({3, 11}, rng);
  // Keep inputs away from the ReLU kink so central differences are valid.
  for (auto& v : x.data) {
    if (std::abs(v) < 1e-2) v += 0.05;
  }
  const auto r = random_tensor(x.shape, rng);
  act.forward(x);
  const auto gx = act.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, 33, rng, coords);
  return check_coords([&] { return dot(r, act.forward(x)); }, coords);
}

inline double grad_dropout(Rng64& rng) {
  nn::Dropout<double> drop(0.5);
  const std::uint64_t seed = rng();
  auto x = random_tensor({4, 9}, rng);
  const auto r = random_tensor(x.shape, rng);
  drop.forward(x, true, seed);
  const auto gx = drop.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, 36, rng, coords);
  return check_coords([&] { return dot(r, drop.forward(x, true, seed)); }, coords);
}

inline double grad_lstm(Rng64& rng) {
  nn::LSTM<double> lstm("lstm", 5, 4);
  nn::Rng init(rng());
  lstm.init(init);
  init_uniform(lstm.bias.value, 0.5, init);
  auto x = random_tensor({2, 4, 5}, rng);
  const auto r = random_tensor({2, 4, 4}, rng);
  detail::zero_grads(lstm);
  lstm.forward(x);
  const auto gx = lstm.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(lstm, rng, coords);
  return check_coords([&] { return dot(r, lstm.forward(x)); }, coords);
}

inline double grad_cross_entropy(Rng64& rng) {
  auto z = random_tensor({3, 4}, rng, 2.0);
  std::uniform_int_distribution<int> cls(0, 3);
  const std::vector<int> labels{cls(rng), cls(rng), cls(rng)};
  const auto lg = nn::cross_entropy(z, labels);
  std::vector<Coord> coords;
  sample_coords(z, lg.grad, 12, rng, coords);
  return check_coords([&] { return nn::cross_entropy(z, labels).loss; }, coords);
}

inline double grad_mse(Rng64& rng) {
  auto a = random_tensor({3, 5}, rng);
  const auto b = random_tensor({3, 5}, rng);
  const auto lg = nn::mse(a, b);
  std::vector<Coord> coords;
  sample_coords(a, lg.grad, 15, rng, coords);
  return check_coords([&] { return nn::mse(a, b).loss; }, coords);
}

inline double grad_rep_block(Rng64& rng) {
  std::bernoulli_distribution same(0.5);
  const bool skip = same(rng);
  nn::RepBlock<double> block("blk", skip ? 3 : 2, 3, skip ? 1 : 2);
  nn::Rng init(rng());
  block.init(init);
  auto x = random_tensor({3, block.in_channels(), 5, 5}, rng);
  const auto r = random_tensor(block.output_shape(x.shape), rng);
  detail::zero_grads(block);
  block.forward(x, nn::BlockMode::Train);
  const auto gx = block.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(block, rng, coords);
  return check_coords([&] { return dot(r, block.forward(x, nn::BlockMode::Train)); }, coords);
}

inline double grad_classifier_head(Rng64& rng) {
  nn::ClassifierHead<double> head(6, 8, 4, 0.5);
  nn::Rng init(rng());
  head.init(init);
  const std::uint64_t seed = rng();
  auto x = random_tensor({3, 6}, rng);
  const auto r = random_tensor({3, 4}, rng);
  detail::zero_grads(head);
  head.forward(x, true, seed);
  const auto gx = head.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(head, rng, coords);
  return check_coords([&] { return dot(r, head.forward(x, true, seed)); }, coords);
}

inline nn::AutoencoderConfig tiny_autoencoder() {
  nn::AutoencoderConfig cfg;
  cfg.rows = 10;
  cfg.cols = 7;
  cfg.channels = {2, 3, 4};
  cfg.lstm_hidden = 5;
  cfg.embed = 6;
  return cfg;
}

inline double grad_encoder(Rng64& rng) {
  nn::Encoder<double> enc(tiny_autoencoder());
  nn::Rng init(rng());
  enc.init(init);
  detail::randomize_biases(enc, init);
  auto x = random_tensor({2, 1, 10, 7}, rng);
  const auto r = random_tensor({2, 6}, rng);
  detail::zero_grads(enc);
  enc.forward(x);
  const auto gx = enc.backward(r);
  std::vector<Coord> coords;
  sample_coords(x, gx, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(enc, rng, coords);
  return check_coords([&] { return dot(r, enc.forward(x)); }, coords);
}

inline double grad_decoder(Rng64& rng) {
  nn::Decoder<double> dec(tiny_autoencoder());
  nn::Rng init(rng());
  dec.init(init);
  detail::randomize_biases(dec, init);
  auto z = random_tensor({2, 6}, rng);
  const auto r = random_tensor({2, 1, 10, 7}, rng);
  detail::zero_grads(dec);
  dec.forward(z);
  const auto gz = dec.backward(r);
  std::vector<Coord> coords;
  sample_coords(z, gz, detail::kCoordsPerTensor, rng, coords);
  detail::add_param_coords(dec, rng, coords);
  return check_coords([&] { return dot(r, dec.forward(z)); }, coords);
}

inline double grad_build_cost(Rng64& rng) {
  auto rows = random_tensor({6, 3}, rng);
  const auto r = random_tensor({6, 6}, rng);
  const auto g = synthesis::build_cost_backward(rows, r);
  std::vector<Coord> coords;
  sample_coords(rows, g, 18, rng, coords);
  return check_coords([&] { return dot(r, synthesis::build_cost(rows)); }, coords);
}

/// Unrolled Sinkhorn scaling plus barycentric transport, differentiated with
/// respect to the cost matrix and the transported feature.
inline double grad_transport(Rng64& rng) {
  const int n = 5, batch = 2;
  auto cost = random_tensor({n, n}, rng, 0.3);
  for (auto& v : cost.data) v = std::abs(v);
  auto feats = random_tensor({batch, n}, rng);
  const auto r = random_tensor({batch, n}, rng);
  synthesis::BatchTransportConfig cfg;
  cfg.lambda = 0.5;
  cfg.iterations = 15;
  cfg.histogram_marginals = std::bernoulli_distribution(0.5)(rng);
  synthesis::BatchTransport<double> op(cfg);
  op.forward(cost, feats);
  const auto grads = op.backward(r);
  std::vector<Coord> coords;
  sample_coords(cost, grads.cost, 15, rng, coords);
  if (!cfg.histogram_marginals) sample_coords(feats, grads.features, 10, rng, coords);
  return check_coords([&] { return dot(r, op.forward(cost, feats)); }, coords);
}

inline std::vector<GradOp> gradient_ops() {
  return {
      {"conv2d", grad_conv2d},
      {"conv_transpose2d", grad_conv_transpose},
      {"batchnorm_train", [](Rng64& r) { return grad_batchnorm(r, true); }},
      {"batchnorm_eval", [](Rng64& r) { return grad_batchnorm(r, false); }},
      {"linear", grad_linear},
      {"relu", grad_elementwise<nn::ReLU<double>>},
      {"sigmoid", grad_elementwise<nn::Sigmoid<double>>},
      {"dropout", grad_dropout},
      {"lstm", grad_lstm},
      {"cross_entropy", grad_cross_entropy},
      {"mse", grad_mse},
      {"rep_block", grad_rep_block},
      {"classifier_head", grad_classifier_head},
      {"encoder", grad_encoder},
      {"decoder", grad_decoder},
      {"build_cost", grad_build_cost},
      {"sinkhorn_transport", grad_transport},
  };
}

}  // namespace motionkit::testing
