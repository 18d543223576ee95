#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "motionkit/features/pipeline.hpp"
#include "motionkit/harness/aggregate.hpp"
#include "motionkit/harness/benchmark.hpp"
#include "motionkit/harness/finetune.hpp"
#include "motionkit/harness/model_io.hpp"
#include "motionkit/harness/reports.hpp"
#include "motionkit/harness/split.hpp"
#include "motionkit/harness/transfer.hpp"
#include "support/tmpdir.hpp"

using namespace motionkit;
namespace mt = motionkit::testing;
using namespace motionkit::harness;
using features::SpectrogramImage;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

std::vector<std::string> user_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("user" + std::to_string(i));
  return out;
}

// Per-class F1 straight from the precision/recall definitions.
double oracle_f1(long tp, long fp, long fn) {
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2 * p * r / (p + r);
}

double oracle_macro(const Confusion& c, int classes) {
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < classes; ++k) {
    long tp = c[k][k], fp = 0, fn = 0;
    for (int j = 0; j < kNumActivities; ++j) {
      if (j == k) continue;
      fp += c[j][k];
      fn += c[k][j];
    }
    if (tp + fp + fn == 0) continue;
    sum += oracle_f1(tp, fp, fn);
    ++used;
  }
  return used ? 100.0 * sum / used : 0.0;
}

// Small low-rate benchmark shared by the training tests.
BenchSpec small_spec(double rate_hz = 10.0) {
  BenchSpec s;
  s.rate_hz = rate_hz;
  s.segment_s = 30.0;
  return s;
}

const ImageSet& small_images() {
  static const ImageSet images =
      features::featurize_sessions(generate_benchmark(small_spec()), features::rate_config(10.0));
  return images;
}

TrainConfig tiny_config(int epochs = 4) {
  TrainConfig c;
  c.epochs = epochs;
  c.stage1 = 4;
  c.stage2 = 8;
  c.hidden = 32;
  c.train_stride = 6;
  c.val_stride = 6;
  c.seed = 7;
  return c;
}

SplitSpec small_split() {
  std::vector<std::string> users;
  for (const auto& i : small_images()) users.push_back(i->user_id);
  return split_users(users, 7);
}

ImageSet of_split(const ImageSet& images, const std::vector<std::string>& users) {
  return select(images, [&](const SpectrogramImage& i) {
    return std::find(users.begin(), users.end(), i.user_id) != users.end();
  });
}

std::shared_ptr<SpectrogramImage> flat_image(double rate, int rows, int cols, float v, Activity act) {
  auto img = std::make_shared<SpectrogramImage>();
  img->time_bins = rows;
  img->freq_bins = cols;
  img->rate_hz = rate;
  img->activity = act;
  img->user_id = "u";
  img->data.assign(static_cast<std::size_t>(rows) * cols, v);
  return img;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ metrics

TEST(Metrics, PerfectPredictionsScoreHundred) {
  const std::vector<int> y{0, 1, 2, 3, 0, 1, 2, 2};
  EXPECT_DOUBLE_EQ(score(y, y).macro_f1, 100.0);
}

TEST(Metrics, CyclicShiftScoresZero) {
  std::vector<int> truth, pred;
  for (int i = 0; i < 40; ++i) {
    truth.push_back(i % 4);
    pred.push_back((i + 1) % 4);
  }
  EXPECT_DOUBLE_EQ(score(truth, pred).macro_f1, 0.0);
  EXPECT_DOUBLE_EQ(score(truth, pred, true).macro_f1, 0.0);
}

TEST(Metrics, TwoClassReductionMatchesHandArithmetic) {
  std::array<std::array<long, 2>, 2> c{{{45, 5}, {10, 40}}};
  const std::vector<int> both{0, 1};
  // Class 0: P = 45/55, R = 45/50. Class 1: P = 40/45, R = 40/50.
  const double f0 = 2.0 * (45.0 / 55) * (45.0 / 50) / (45.0 / 55 + 45.0 / 50);
  const double f1 = 2.0 * (40.0 / 45) * (40.0 / 50) / (40.0 / 45 + 40.0 / 50);
  EXPECT_NEAR(macro_f1(c, std::span<const int>(both)), 0.5 * (f0 + f1), 1e-12);
  EXPECT_NEAR(macro_f1(c, std::span<const int>(both)), 0.849624, 1e-6);
}

TEST(Metrics, OtherIsExcludedFromTheDefaultAverage) {
  // Walking perfect, Other always mistaken for Running.
  const std::vector<int> truth{0, 0, 3, 3, 1};
  const std::vector<int> pred{0, 0, 1, 1, 1};
  const auto r = score(truth, pred);
  EXPECT_NEAR(r.macro_f1, oracle_macro(r.confusion, 3), 1e-9);
  EXPECT_NEAR(score(truth, pred, true).macro_f1, oracle_macro(r.confusion, 4), 1e-9);
  EXPECT_EQ(r.confusion[3][1], 2);
}

TEST(Metrics, RandomConfusionsAgreeWithOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 3);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> truth(200), pred(200);
    for (auto& v : truth) v = cls(rng);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = rng() % 3 == 0 ? cls(rng) : truth[i];
    const auto r = score(truth, pred);
    EXPECT_NEAR(r.macro_f1, oracle_macro(r.confusion, 3), 1e-9);
    for (int k = 0; k < 4; ++k) {
      long row = 0;
      for (int j = 0; j < 4; ++j) row += r.confusion[k][j];
      EXPECT_EQ(row, std::count(truth.begin(), truth.end(), k));
    }
  }
}

// -------------------------------------------------------------------- split

TEST(Split, SizesFollowSeventyTwentyTen) {
  for (auto [n, tr, te, va] : std::vector<std::array<std::size_t, 4>>{{50, 35, 10, 5}, {10, 7, 2, 1}, {12, 8, 2, 2}}) {
    const auto s = split_users(user_names(static_cast<int>(n)), 7);
    EXPECT_EQ(s.train_users.size(), tr) << n;
    EXPECT_EQ(s.test_users.size(), te) << n;
    EXPECT_EQ(s.val_users.size(), va) << n;
  }
}

TEST(Split, DeterministicAndDisjointForManySeeds) {
  const auto users = user_names(23);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto a = split_users(users, seed);
    const auto b = split_users(users, seed);
    EXPECT_EQ(a.train_users, b.train_users);
    EXPECT_EQ(a.test_users, b.test_users);
    EXPECT_EQ(a.val_users, b.val_users);
    std::vector<std::string> all;
    for (const auto* v : {&a.train_users, &a.test_users, &a.val_users}) all.insert(all.end(), v->begin(), v->end());
    std::sort(all.begin(), all.end());
    auto sorted_users = users;
    std::sort(sorted_users.begin(), sorted_users.end());
    EXPECT_EQ(all, sorted_users);
  }
}

TEST(Split, SeedChangesAssignment) {
  const auto users = user_names(50);
  EXPECT_NE(split_users(users, 1).test_users, split_users(users, 2).test_users);
}

TEST(Split, RejectsFewerThanTenUsers) {
  EXPECT_EQ(code_of([] { split_users(user_names(9), 7); }), ErrorCode::TooFewUsers);
  // Duplicates count once.
  auto users = user_names(9);
  users.push_back("user0");
  EXPECT_EQ(code_of([&] { split_users(users, 7); }), ErrorCode::TooFewUsers);
}

// -------------------------------------------------------------- aggregation

TEST(Aggregation, ThirtySecondsIsFortySixFrames) {
  EXPECT_EQ(frames_per_window({30.0, 0.64, false}), 46);
  EXPECT_EQ(frames_per_window({10.0, 0.64, false}), 15);
  EXPECT_EQ(frames_per_window({50.0, 0.64, false}), 78);
}

TEST(Aggregation, WindowTooSmall) {
  EXPECT_EQ(code_of([] { frames_per_window({1.0, 0.64, false}); }), ErrorCode::WindowTooSmall);
  std::vector<FramePrediction> frames(10);
  EXPECT_EQ(code_of([&] { aggregate_activity(frames, {0.5, 0.64, false}); }), ErrorCode::WindowTooSmall);
}

TEST(Aggregation, MajorityVote) {
  std::vector<int> votes(40, 0);
  votes.insert(votes.end(), 6, 3);
  EXPECT_EQ(majority(votes), 0);
  // A segment needs 47 frames (30.08 s) before it yields one 46-frame window.
  std::vector<FramePrediction> frames;
  for (int i = 0; i < 47; ++i) frames.push_back({0.64 * i, 0, i < 40 ? 0 : 3});
  const auto w = aggregate_activity(frames, {30.0, 0.64, false});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].pred, 0);
  EXPECT_EQ(w[0].truth, 0);
  EXPECT_EQ(w[0].frames, 46);
}

TEST(Aggregation, TiesGoToLowestClass) {
  const std::vector<int> v{2, 1, 2, 1};
  EXPECT_EQ(majority(v), 1);
  const std::vector<int> w{3, 0};
  EXPECT_EQ(majority(w), 0);
}

TEST(Aggregation, WindowCountLawPerSegment) {
  // Three contiguous segments of different lengths, one split by a time gap.
  const double hop = 0.64;
  std::vector<FramePrediction> frames;
  double t = 0.0;
  const std::vector<std::pair<int, int>> segs{{0, 100}, {1, 47}, {1, 200}, {2, 45}};
  for (std::size_t s = 0; s < segs.size(); ++s) {
    for (int i = 0; i < segs[s].second; ++i) {
      frames.push_back({t, segs[s].first, segs[s].first});
      t += hop;
    }
    t += 10.0;  // gap between segments
  }
  for (double window : {10.0, 20.0, 30.0, 50.0}) {
    std::size_t expected = 0;
    for (const auto& [cls, len] : segs) expected += static_cast<std::size_t>(std::floor(len * hop / window + 1e-9));
    const auto w = aggregate_activity(frames, {window, hop, false});
    EXPECT_EQ(w.size(), expected) << window;
    for (const auto& x : w) EXPECT_EQ(x.truth, x.pred);
  }
}

TEST(Aggregation, SmoothsIsolatedErrors) {
  std::vector<FramePrediction> frames;
  for (int i = 0; i < 460; ++i) frames.push_back({0.64 * i, i < 230 ? 0 : 1, i % 7 == 0 ? 2 : (i < 230 ? 0 : 1)});
  const auto r = aggregate_streams({frames}, {30.0, 0.64, false});
  EXPECT_LT(r.frame.macro_f1, 100.0);
  EXPECT_DOUBLE_EQ(r.activity.macro_f1, 100.0);
}

// ---------------------------------------------------------------- benchmark

TEST(Benchmark, SameSpecGivesByteIdenticalTrees) {
  mt::TempDir a("bench_a"), b("bench_b");
  BenchSpec spec;
  spec.n_users = 2;
  spec.rate_hz = 10.0;
  spec.segment_s = 8.0;
  spec.locations = {BodySite::Wrist, BodySite::Ankle};
  write_benchmark(spec, a.path());
  write_benchmark(spec, b.path());
  const auto ta = tree(a.path()), tb = tree(b.path());
  ASSERT_FALSE(ta.empty());
  ASSERT_EQ(ta.size(), tb.size());
  for (const auto& [name, bytes] : ta) {
    // Manifests embed their own directory; compare those with it stripped.
    std::string other = tb.at(name);
    std::string mine = bytes;
    for (auto* s : {&mine, &other}) {
      for (const auto& root : {a.path().string(), b.path().string()}) {
        for (auto pos = s->find(root); pos != std::string::npos; pos = s->find(root)) s->replace(pos, root.size(), "<root>");
      }
    }
    EXPECT_EQ(mine, other) << name;
  }
  spec.seed = 8;
  mt::TempDir c("bench_c");
  write_benchmark(spec, c.path());
  EXPECT_NE(slurp(a / "u01/Wrist.csv"), slurp(c / "u01/Wrist.csv"));
}

TEST(Benchmark, WalkingPeaksInsideTheWalkBand) {
  BenchSpec spec;
  spec.rate_hz = 25.0;
  spec.n_users = 4;
  for (int user = 0; user < spec.n_users; ++user) {
    const auto walk = bench_labels(spec, user)[0];
    for (const auto& loc : six_locations()) {
      const auto rec = features::normalize_channels(render_recording(spec, user, loc)).recording;
      const auto mag = features::magnitude(rec);
      const auto begin = static_cast<std::size_t>((walk.start_unix_s - rec.t0_unix_s) * spec.rate_hz);
      const auto end = static_cast<std::size_t>((walk.stop_unix_s - rec.t0_unix_s) * spec.rate_hz);
      std::vector<double> x(mag.begin() + static_cast<std::ptrdiff_t>(begin), mag.begin() + static_cast<std::ptrdiff_t>(end));
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(x.size());
      // Naive DFT oracle; the peak is searched above 0.3 Hz to skip drift.
      const auto n = x.size();
      double best = -1.0, best_f = 0.0;
      for (std::size_t k = 1; k < n / 2; ++k) {
        const double f = static_cast<double>(k) * spec.rate_hz / static_cast<double>(n);
        if (f < 0.3) continue;
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
          acc += (x[i] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i) / static_cast<double>(n));
        }
        if (std::abs(acc) > best) {
          best = std::abs(acc);
          best_f = f;
        }
      }
      EXPECT_GE(best_f, spec.walk.lo * 0.97) << bench_user_id(user) << " " << loc.name();
      EXPECT_LE(best_f, spec.walk.hi * 1.03) << bench_user_id(user) << " " << loc.name();
    }
  }
}

TEST(Benchmark, TwelveUsersSplitEightTwoTwo) {
  BenchSpec spec;
  std::vector<std::string> users;
  for (int u = 0; u < spec.n_users; ++u) users.push_back(bench_user_id(u));
  const auto s = split_users(users, spec.seed);
  EXPECT_EQ(s.train_users.size(), 8u);
  EXPECT_EQ(s.test_users.size(), 2u);
  EXPECT_EQ(s.val_users.size(), 2u);
}

TEST(Benchmark, LinearlySeparableOnBandEnergies) {
  // Softmax regression on per-bin mean energies, trained on train-split users
  // and scored on test-split users.
  const auto& images = small_images();
  const auto split = small_split();
  const int d = images.front()->freq_bins + 1;
  auto feats = [&](const SpectrogramImage& img) {
    std::vector<double> f(static_cast<std::size_t>(d), 0.0);
    for (int t = 0; t < img.time_bins; ++t)
      for (int k = 0; k < img.freq_bins; ++k) f[static_cast<std::size_t>(k)] += img.at(t, k) / img.time_bins;
    f.back() = 1.0;
    return f;
  };
  std::vector<std::vector<double>> xtr, xte;
  std::vector<int> ytr, yte;
  for (const auto& img : images) {
    if (split.is_train(img->user_id)) {
      xtr.push_back(feats(*img));
      ytr.push_back(static_cast<int>(img->activity));
    } else if (split.is_test(img->user_id)) {
      xte.push_back(feats(*img));
      yte.push_back(static_cast<int>(img->activity));
    }
  }
  std::vector<std::vector<double>> w(kNumActivities, std::vector<double>(static_cast<std::size_t>(d), 0.0));
  auto logits = [&](const std::vector<double>& x) {
    std::array<double, kNumActivities> z{};
    for (int c = 0; c < kNumActivities; ++c)
      for (int j = 0; j < d; ++j) z[c] += w[c][j] * x[j];
    return z;
  };
  for (int it = 0; it < 400; ++it) {
    std::vector<std::vector<double>> g(kNumActivities, std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (std::size_t i = 0; i < xtr.size(); ++i) {
      auto z = logits(xtr[i]);
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0.0;
      for (auto& v : z) s += (v = std::exp(v - m));
      for (int c = 0; c < kNumActivities; ++c) {
        const double p = z[c] / s - (c == ytr[i] ? 1.0 : 0.0);
        for (int j = 0; j < d; ++j) g[c][j] += p * xtr[i][j];
      }
    }
    for (int c = 0; c < kNumActivities; ++c)
      for (int j = 0; j < d; ++j) w[c][j] -= 2.0 * g[c][j] / static_cast<double>(xtr.size());
  }
  int correct = 0;
  for (std::size_t i = 0; i < xte.size(); ++i) {
    const auto z = logits(xte[i]);
    correct += static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()) == yte[i];
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(xte.size());
  EXPECT_GT(acc, 0.8);
}

// ----------------------------------------------------------------- training

TEST(Training, OneSamplePerClassOverfits) {
  ImageSet train;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int a = 0; a < kNumActivities; ++a) {
    auto img = flat_image(10.0, 38, 13, 0.0f, static_cast<Activity>(a));
    for (auto& v : img->data) v = u(rng);
    train.push_back(img);
  }
  auto cfg = tiny_config(60);
  cfg.train_stride = 1;
  cfg.val_stride = 1;
  cfg.batch_size = 4;
  cfg.lr = 3e-3;
  auto m = train_motion_model(train, train, cfg);
  EXPECT_EQ(predict(m.net, train), labels_of(train));
  EXPECT_TRUE(m.net.is_fused());
}

TEST(Training, SameSeedSameMetrics) {
  const auto& images = small_images();
  const auto split = small_split();
  const auto train = at_locations(of_split(images, split.train_users), {BodySite::Wrist});
  const auto val = at_locations(of_split(images, split.val_users), {BodySite::Wrist});
  auto a = train_motion_model(train, val, tiny_config(2));
  auto b = train_motion_model(train, val, tiny_config(2));
  EXPECT_EQ(a.val_history, b.val_history);
  EXPECT_EQ(predict(a.net, val), predict(b.net, val));
  auto other = tiny_config(2);
  other.seed = 8;
  auto c = train_motion_model(train, val, other);
  EXPECT_NE(a.net.state().front().tensor->data, c.net.state().front().tensor->data);
}

TEST(Training, Errors) {
  const ImageSet empty;
  const ImageSet one{flat_image(10.0, 38, 13, 0.5f, Activity::Walking), flat_image(10.0, 38, 13, 0.5f, Activity::Running)};
  EXPECT_EQ(code_of([&] { train_motion_model(empty, one, tiny_config(1)); }), ErrorCode::EmptyDataset);
  EXPECT_EQ(code_of([&] { train_motion_model(one, empty, tiny_config(1)); }), ErrorCode::EmptyDataset);
  const ImageSet other_rate{flat_image(25.0, 96, 32, 0.5f, Activity::Walking)};
  EXPECT_EQ(code_of([&] { train_motion_model(one, other_rate, tiny_config(1)); }), ErrorCode::MixedRates);
}

TEST(Training, LearnsTheSmallBenchmark) {
  const auto& images = small_images();
  const auto split = small_split();
  auto cfg = tiny_config(8);
  auto m = train_motion_model(of_split(images, split.train_users), of_split(images, split.val_users), cfg);
  EXPECT_GE(m.best_val_f1, 80.0);
  EXPECT_EQ(m.val_history.size(), 8u);
  EXPECT_DOUBLE_EQ(m.best_val_f1, *std::max_element(m.val_history.begin(), m.val_history.end()));
  // The returned checkpoint is the best-validation one.
  const auto val = every_kth(sorted(of_split(images, split.val_users)), cfg.val_stride);
  EXPECT_NEAR(evaluate(m.net, val).macro_f1, m.best_val_f1, 1e-3);
}

TEST(ModelIo, RoundTripPredictsIdentically) {
  const auto& images = small_images();
  const auto split = small_split();
  auto m = train_motion_model(of_split(images, split.train_users), of_split(images, split.val_users), tiny_config(1));
  mt::TempDir dir("model");
  save_model(dir.path(), m, {BodySite::Wrist, BodySite::Ankle});
  auto back = load_model(dir.path());
  const auto test = of_split(images, split.test_users);
  EXPECT_EQ(predict(back.net, test), predict(m.net, test));
  EXPECT_EQ(back.rate_hz, 10.0);
  EXPECT_EQ(back.best_epoch, m.best_epoch);
  EXPECT_EQ(code_of([] { load_model("/nonexistent/model"); }), ErrorCode::Io);
}

// ----------------------------------------------------------------- transfer

TEST(Transfer, CombinationsEnumerateSubsets) {
  EXPECT_EQ(combinations(six_locations(), 1).size(), 6u);
  EXPECT_EQ(combinations(six_locations(), 2).size(), 15u);
  const auto triples = combinations(six_locations(), 3);
  ASSERT_EQ(triples.size(), 20u);
  std::set<std::string> names;
  for (const auto& t : triples) {
    EXPECT_EQ(t.size(), 3u);
    names.insert(set_name(t));
  }
  EXPECT_EQ(names.size(), 20u);
  EXPECT_EQ(set_name(six_locations()), "All");
  EXPECT_EQ(set_name({BodySite::Ankle, BodySite::Thigh}), "Ankle+Thigh");
}

TEST(Transfer, MissingLocation) {
  const auto wrist_only = at_locations(small_images(), {BodySite::Wrist});
  EXPECT_EQ(code_of([&] { transfer_matrix(wrist_only, {{BodySite::Ankle}}, small_split(), tiny_config(1)); }),
            ErrorCode::MissingLocation);
}

TEST(Transfer, ReportCellsAreRecomputable) {
  const auto& images = small_images();
  const auto split = small_split();
  const std::vector<LocationSet> sets{{BodySite::Wrist}, {BodySite::Ankle, BodySite::Thigh}};
  const auto r = transfer_matrix(images, sets, split, tiny_config(2), 2);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[1].name, "Ankle+Thigh");
  for (const auto& row : r.rows) {
    ASSERT_EQ(row.cells.size(), 6u);
    double sum = 0.0;
    for (std::size_t k = 0; k < row.cells.size(); ++k) {
      const auto& cell = row.cells[k];
      EXPECT_NEAR(cell.macro_f1, oracle_macro(cell.confusion, 3), 1e-9);
      const auto test = at_locations(of_split(images, split.test_users), {r.eval_locations[k]});
      const auto truth = labels_of(test);
      for (int c = 0; c < kNumActivities; ++c) {
        long row_sum = 0;
        for (int j = 0; j < kNumActivities; ++j) row_sum += cell.confusion[c][j];
        EXPECT_EQ(row_sum, std::count(truth.begin(), truth.end(), c));
      }
      sum += cell.macro_f1;
    }
    EXPECT_NEAR(row.average, sum / 6.0, 1e-9);
  }
  // Worker count does not change results.
  const auto serial = transfer_matrix(images, sets, split, tiny_config(2), 1);
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(serial.rows[i].cells[k].confusion, r.rows[i].cells[k].confusion);

  mt::TempDir dir("report");
  write_transfer_report(dir.path(), r);
  const auto matrix = slurp(dir / "transfer_matrix.csv");
  EXPECT_EQ(matrix.substr(0, matrix.find('\n')), "train_set,Wrist,Ankle,Thigh,Head,Chest,Shoulder,average");
  EXPECT_EQ(std::count(matrix.begin(), matrix.end(), '\n'), 3);
  EXPECT_TRUE(std::filesystem::exists(dir / "confusion_Ankle+Thigh_Head.csv"));
}

TEST(Transfer, EigenlocationsSingleRanking) {
  TransferReport full;
  const auto ranked = eigenlocations(1, small_images(), small_split(), tiny_config(1), 1, &full);
  ASSERT_EQ(ranked.size(), 6u);
  EXPECT_EQ(full.rows.size(), 6u);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    EXPECT_GE(ranked[i].average, 0.0);
    EXPECT_LE(ranked[i].average, 100.0);
    if (i) EXPECT_GE(ranked[i - 1].average, ranked[i].average);
  }
  const auto csv_text = eigenlocations_csv(ranked);
  EXPECT_EQ(std::count(csv_text.begin(), csv_text.end(), '\n'), 7);
}

TEST(Transfer, EigenlocationsRejectsBadK) {
  EXPECT_EQ(code_of([] { eigenlocations(0, small_images(), small_split(), tiny_config(1)); }), ErrorCode::BadFlag);
  EXPECT_EQ(code_of([] { eigenlocations(4, small_images(), small_split(), tiny_config(1)); }), ErrorCode::BadFlag);
}

TEST(Transfer, ResolveWorkers) {
  EXPECT_EQ(resolve_workers(3), 3);
  ::setenv("MOTIONKIT_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(0), 5);
  ::unsetenv("MOTIONKIT_WORKERS");
  EXPECT_EQ(resolve_workers(0), 1);
}

// ------------------------------------------------------------------ reports

TEST(Reports, ConfusionAndCurveCsv) {
  Confusion c{};
  c[0][0] = 5;
  c[3][1] = 2;
  const auto s = confusion_csv(c);
  EXPECT_NE(s.find("walking,5,0,0,0"), std::string::npos);
  EXPECT_NE(s.find("other,0,2,0,0"), std::string::npos);
  const std::vector<CurvePoint> curve{{30.0, {90.0, 80.5}, 85.25}};
  EXPECT_EQ(aggregation_curve_csv(curve, {BodySite::Wrist, BodySite::Head}), "window_s,Wrist,Head,average\n30.0,90.00,80.50,85.25\n");
  const auto ref = reference_annotations();
  EXPECT_DOUBLE_EQ(ref["transfer_matrix"]["All_row_average_f1"].get<double>(), 91.41);
  EXPECT_DOUBLE_EQ(ref["aggregation"]["superset_activity_f1"].get<double>(), 95.17);
}

// ---------------------------------------------------------------- fine-tune

TEST(Finetune, ExtractorFrozenAndHeadWidth) {
  const auto& images = small_images();
  const auto split = small_split();
  auto m = train_motion_model(of_split(images, split.train_users), of_split(images, split.val_users), tiny_config(1));
  std::vector<std::vector<float>> before;
  for (const auto& s : m.net.extractor_state()) before.emplace_back(s.tensor->data.begin(), s.tensor->data.end());

  auto labelled = [&](const std::vector<std::string>& users) {
    LabelledSet s;
    s.images = every_kth(sorted(of_split(images, users)), 10);
    for (const auto& i : s.images) s.labels.push_back(std::min(2, static_cast<int>(i->activity)));
    return s;
  };
  FinetuneConfig fc;
  fc.epochs = 3;
  auto r = finetune_embeddings(m.net, labelled(split.train_users), labelled(split.val_users), 3, fc);
  std::vector<std::vector<float>> after;
  for (const auto& s : m.net.extractor_state()) after.emplace_back(s.tensor->data.begin(), s.tensor->data.end());
  EXPECT_EQ(before, after);
  EXPECT_EQ(r.head.n_classes(), 3);
  m.net.replace_head(r.head);
  const auto one = ImageSet{images.front()};
  const auto x = make_batch(one, std::vector<std::size_t>{0}, nullptr);
  EXPECT_EQ(m.net.forward(x, nn::BlockMode::Fused, false, 0).dim(1), 3);
}

TEST(Finetune, Errors) {
  nn::MotionNetConfig nc;
  nc.rows = 38;
  nc.cols = 13;
  nc.stage1 = 4;
  nc.stage2 = 8;
  nc.hidden = 16;
  nn::MotionNet<float> net(nc);
  nn::Rng rng(1);
  net.init(rng);
  LabelledSet empty, one;
  one.images = {flat_image(10.0, 38, 13, 0.5f, Activity::Walking)};
  one.labels = {0};
  EXPECT_EQ(code_of([&] { finetune_embeddings(net, empty, one, 2, {}); }), ErrorCode::EmptyDataset);
  EXPECT_EQ(code_of([&] { finetune_embeddings(net, one, empty, 2, {}); }), ErrorCode::EmptyDataset);
  EXPECT_EQ(code_of([&] { finetune_embeddings(net, one, one, 1, {}); }), ErrorCode::BadFlag);
}

TEST(Finetune, PseudoActivitiesReachEightyPercent) {
  // Base model on the regular benchmark; new head on two unseen periodic
  // movements from different users.
  BenchSpec base = small_spec(25.0);
  const auto images = features::featurize_sessions(generate_benchmark(base), features::rate_config(25.0));
  std::vector<std::string> users;
  for (const auto& i : images) users.push_back(i->user_id);
  const auto split = split_users(users, 7);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.stage1 = 8;
  cfg.stage2 = 16;
  cfg.hidden = 128;
  cfg.train_stride = 8;
  cfg.val_stride = 8;
  auto m = train_motion_model(of_split(images, split.train_users), of_split(images, split.val_users), cfg);

  BenchSpec pseudo = small_spec(25.0);
  pseudo.pseudo = true;
  pseudo.n_users = 10;
  const auto pimages = features::featurize_sessions(generate_benchmark(pseudo), features::rate_config(25.0));
  std::vector<std::string> pusers;
  for (const auto& i : pimages) pusers.push_back(i->user_id);
  const auto psplit = split_users(pusers, 7);
  auto labelled = [&](const std::vector<std::string>& u, int stride) {
    LabelledSet s;
    for (const auto& i : every_kth(sorted(of_split(pimages, u)), stride)) {
      if (i->activity == Activity::Walking || i->activity == Activity::Running) {
        s.images.push_back(i);
        s.labels.push_back(static_cast<int>(i->activity));
      }
    }
    return s;
  };
  FinetuneConfig fc;
  fc.lr = 1e-4;
  fc.epochs = 30;
  auto r = finetune_embeddings(m.net, labelled(psplit.train_users, 4), labelled(psplit.val_users, 4), 2, fc);
  const double test_f1 = evaluate_head(m.net, r.head, labelled(psplit.test_users, 1), 2);
  RecordProperty("finetune_test_f1", std::to_string(test_f1));
  EXPECT_GE(test_f1, 80.0);
}
