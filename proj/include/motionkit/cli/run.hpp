#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "motionkit/features/dataset.hpp"
#include "motionkit/features/pipeline.hpp"
#include "motionkit/features/spectransform.hpp"
#include "motionkit/harness/aggregate.hpp"
#include "motionkit/harness/benchmark.hpp"
#include "motionkit/harness/finetune.hpp"
#include "motionkit/harness/model_io.hpp"
#include "motionkit/harness/reports.hpp"
#include "motionkit/harness/split.hpp"
#include "motionkit/harness/transfer.hpp"
#include "motionkit/ingest/manifest.hpp"
#include "motionkit/synthesis/evaluate.hpp"

namespace motionkit::cli {

namespace fs = std::filesystem;

/// Every knob of a run. Values come from defaults, then --config, then flags.
struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 7;
  double rate_hz = 100.0;
  std::vector<std::string> locations{"Wrist", "Ankle", "Thigh", "Head", "Chest", "Shoulder"};
  std::string data;      // benchmark / manifest directory
  std::string features;  // featurized dataset directory
  std::string model;     // model checkpoint directory
  std::string synth;     // synthesizer checkpoint directory
  std::string out = "out";
  int workers = 0;       // 0: MOTIONKIT_WORKERS or 1
  bool quiet = false;
  // training
  int epochs = 50;
  double lr = 1e-3;
  int batch_size = 32;
  int stage1 = 8;
  int stage2 = 16;
  int hidden = 512;
  double dropout = 0.5;
  int train_stride = 8;
  int val_stride = 8;
  bool include_other_in_macro = false;
  // gen-bench
  int users = 12;
  bool pseudo = false;
  // eigenlocations / spectransform / aggregate
  int k = 3;
  double from_hz = 100.0;
  double to_hz = 25.0;
  double window_s = 30.0;
  // finetune
  std::vector<std::string> classes{"Walking", "Running"};
  double finetune_lr = 1e-4;
  int finetune_epochs = 30;
  // synthesis
  std::string source = "Wrist";
  std::string target = "Ankle";
  double lambda = 0.1;
  int ae_epochs = 30;
  int synth_epochs = 20;
  double synth_lr = 1e-3;
  int synth_stride = 1;
};

#define MOTIONKIT_CONFIG_FIELDS(X)                                                                                  \
  X(seed) X(rate_hz) X(locations) X(data) X(features) X(model) X(synth) X(out) X(workers) X(quiet) X(epochs) X(lr)   \
  X(batch_size) X(stage1) X(stage2) X(hidden) X(dropout) X(train_stride) X(val_stride) X(include_other_in_macro)     \
  X(users) X(pseudo) X(k) X(from_hz) X(to_hz) X(window_s) X(classes) X(finetune_lr) X(finetune_epochs) X(source)     \
  X(target) X(lambda) X(ae_epochs) X(synth_epochs) X(synth_lr) X(synth_stride)

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["subcommand"] = c.subcommand;
#define X(f) j[#f] = c.f;
  MOTIONKIT_CONFIG_FIELDS(X)
#undef X
  return j;
}

/// Applies every key of `j`; unknown keys are rejected so typos surface.
inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::BadFlag, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "subcommand") continue;
#define X(f)                  \
  if (key == #f) {            \
    value.get_to(c.f);        \
    continue;                 \
  }
      MOTIONKIT_CONFIG_FIELDS(X)
#undef X
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::BadFlag, "config key '" + key + "': " + e.what());
    }
    fail(ErrorCode::BadFlag, "unknown config key '" + key + "'");
  }
}

#undef MOTIONKIT_CONFIG_FIELDS

inline void write_run_config(const RunConfig& c) {
  csv::write_text(fs::path(c.out) / "run_config.json", to_json(c).dump(2) + "\n");
}

// ------------------------------------------------------------------ helpers

struct Context {
  RunConfig cfg;

  void log(const std::string& msg) const {
    if (!cfg.quiet) std::cerr << "[" << cfg.subcommand << "] " << msg << "\n";
  }
  harness::Progress progress() const {
    if (cfg.quiet) return {};
    return [this](const std::string& m) { log(m); };
  }
  fs::path out(const std::string& name) const { return fs::path(cfg.out) / name; }

  std::vector<Location> locations() const {
    std::vector<Location> v;
    for (const auto& n : cfg.locations) v.push_back(Location::parse(n));
    if (v.empty()) fail(ErrorCode::BadFlag, "no locations given");
    return v;
  }

  harness::TrainConfig train_config() const {
    harness::TrainConfig t;
    t.epochs = cfg.epochs;
    t.lr = cfg.lr;
    t.batch_size = cfg.batch_size;
    t.seed = cfg.seed;
    t.train_stride = cfg.train_stride;
    t.val_stride = cfg.val_stride;
    t.stage1 = cfg.stage1;
    t.stage2 = cfg.stage2;
    t.hidden = cfg.hidden;
    t.dropout = cfg.dropout;
    t.include_other_in_macro = cfg.include_other_in_macro;
    t.progress = progress();
    return t;
  }

  std::vector<ingest::Session> sessions() const {
    if (cfg.data.empty()) fail(ErrorCode::BadFlag, "--data is required");
    fs::path manifest = cfg.data;
    if (fs::is_directory(manifest)) manifest /= "manifest.jsonl";
    if (!fs::exists(manifest)) fail(ErrorCode::Io, "no manifest at " + manifest.string());
    std::vector<ingest::Session> out;
    for (const auto& m : ingest::parse_manifest(manifest)) out.push_back(ingest::load_session(m));
    return out;
  }

  /// Featurized images: from --features if given, else featurized from --data
  /// at --rate.
  features::ImageSet images() const {
    if (!cfg.features.empty()) {
      log("loading features from " + cfg.features);
      return features::load_dataset(cfg.features);
    }
    log("featurizing " + cfg.data + " at " + csv::fmt(cfg.rate_hz, 0) + " Hz");
    return features::featurize_sessions(sessions(), features::rate_config(cfg.rate_hz));
  }

  harness::SplitSpec split(const features::ImageSet& images) const {
    std::vector<std::string> users;
    for (const auto& i : images) users.push_back(i->user_id);
    return harness::split_users(users, cfg.seed);
  }

  harness::TrainedModel model() const {
    if (cfg.model.empty()) fail(ErrorCode::BadFlag, "--model is required");
    return harness::load_model(cfg.model);
  }
};

inline features::ImageSet of_users(const features::ImageSet& images, const std::vector<std::string>& users) {
  const std::set<std::string> keep(users.begin(), users.end());
  return harness::select(images, [&](const features::SpectrogramImage& i) { return keep.count(i.user_id) > 0; });
}

inline nlohmann::json split_json(const harness::SplitSpec& s) {
  return {{"seed", s.seed}, {"train", s.train_users}, {"test", s.test_users}, {"val", s.val_users}};
}

inline void check_rate(const harness::TrainedModel& m, const features::ImageSet& images) {
  const double r = harness::common_rate(images);
  if (r != m.rate_hz) {
    fail(ErrorCode::MixedRates, "model expects " + csv::fmt(m.rate_hz, 0) + " Hz images, data is " + csv::fmt(r, 0) + " Hz");
  }
}

inline std::vector<Location> present_locations(const features::ImageSet& images) {
  std::set<Location> s;
  for (const auto& i : images) s.insert(i->location);
  return {s.begin(), s.end()};
}

// -------------------------------------------------------------- subcommands

inline void cmd_gen_bench(const Context& ctx) {
  harness::BenchSpec spec;
  spec.seed = ctx.cfg.seed;
  spec.n_users = ctx.cfg.users;
  spec.rate_hz = ctx.cfg.rate_hz;
  spec.pseudo = ctx.cfg.pseudo;
  spec.locations = ctx.locations();
  ctx.log("writing " + std::to_string(spec.n_users) + " users to " + ctx.cfg.out);
  harness::write_benchmark(spec, ctx.cfg.out);
}

inline void cmd_ingest(const Context& ctx) {
  std::string s = "session_id,user_id,location,rate_hz,samples,duration_s,labeled_s\n";
  for (const auto& session : ctx.sessions()) {
    double labeled = 0.0;
    for (const auto& l : session.labels) labeled += l.stop_unix_s - l.start_unix_s;
    for (const auto& r : session.recordings) {
      s += session.manifest.session_id + "," + session.manifest.user_id + "," + r.location.name() + "," +
           csv::fmt(r.rate_hz, 0) + "," + std::to_string(r.samples.size()) + "," +
           csv::fmt(static_cast<double>(r.samples.size()) / r.rate_hz, 2) + "," + csv::fmt(labeled, 2) + "\n";
    }
  }
  csv::write_text(ctx.out("ingest_summary.csv"), s);
}

inline void cmd_featurize(const Context& ctx) {
  const auto images = features::featurize_sessions(ctx.sessions(), features::rate_config(ctx.cfg.rate_hz));
  if (images.empty()) fail(ErrorCode::EmptyDataset, "no labelled frames");
  features::save_dataset(ctx.cfg.out, images);
  ctx.log(std::to_string(images.size()) + " images of " + std::to_string(images.front()->time_bins) + "x" +
          std::to_string(images.front()->freq_bins));
}

inline void cmd_train(const Context& ctx) {
  const auto images = ctx.images();
  const auto split = ctx.split(images);
  const auto locs = ctx.locations();
  const auto train = harness::at_locations(of_users(images, split.train_users), locs);
  const auto val = harness::at_locations(of_users(images, split.val_users), locs);
  auto m = harness::train_motion_model(train, val, ctx.train_config());
  harness::save_model(ctx.out("model"), m, locs);
  nlohmann::json j;
  j["split"] = split_json(split);
  j["best_val_f1"] = m.best_val_f1;
  j["best_epoch"] = m.best_epoch;
  j["val_history"] = m.val_history;
  csv::write_text(ctx.out("train_summary.json"), j.dump(2) + "\n");
}

inline std::string model_set_name(const fs::path& model_dir) {
  const auto j = nlohmann::json::parse(csv::read_text(model_dir / "model.json"));
  harness::LocationSet set;
  for (const auto& n : j.value("locations", std::vector<std::string>{})) set.push_back(Location::parse(n));
  return set.empty() ? std::string("model") : harness::set_name(set);
}

inline void cmd_eval(const Context& ctx) {
  auto m = ctx.model();
  const auto images = ctx.images();
  const auto test = of_users(images, ctx.split(images).test_users);
  check_rate(m, test);
  const std::string name = model_set_name(ctx.cfg.model);
  std::string s = "location,macro_f1,frames\n";
  std::vector<int> all_truth, all_pred;
  for (const auto& loc : present_locations(test)) {
    const auto subset = harness::at_locations(test, {loc});
    const auto r = harness::evaluate(m.net, subset, ctx.cfg.include_other_in_macro);
    s += loc.name() + "," + harness::f1_cell(r.macro_f1) + "," + std::to_string(r.frames) + "\n";
    csv::write_text(ctx.out("confusion_" + name + "_" + loc.name() + ".csv"), harness::confusion_csv(r.confusion));
    ctx.log(loc.name() + " macro F1 " + harness::f1_cell(r.macro_f1));
  }
  csv::write_text(ctx.out("eval.csv"), s);
}

inline void cmd_transfer(const Context& ctx) {
  const auto images = ctx.images();
  std::vector<harness::LocationSet> sets;
  for (const auto& l : ctx.locations()) sets.push_back({l});
  sets.push_back(ctx.locations());
  const auto report =
      harness::transfer_matrix(images, sets, ctx.split(images), ctx.train_config(), ctx.cfg.workers, ctx.locations());
  harness::write_transfer_report(ctx.cfg.out, report);
  harness::write_reference_annotations(ctx.cfg.out);
}

inline void cmd_eigen(const Context& ctx) {
  if (ctx.cfg.k < 1 || ctx.cfg.k > 3) fail(ErrorCode::BadFlag, "--k must be 1, 2 or 3");
  const auto images = ctx.images();
  const auto ranked = harness::eigenlocations(ctx.cfg.k, images, ctx.split(images), ctx.train_config(), ctx.cfg.workers);
  csv::write_text(ctx.out("eigenlocations_k" + std::to_string(ctx.cfg.k) + ".csv"), harness::eigenlocations_csv(ranked));
  harness::write_reference_annotations(ctx.cfg.out);
}

inline void cmd_spectransform(const Context& ctx) {
  if (!(ctx.cfg.to_hz < ctx.cfg.from_hz)) fail(ErrorCode::BadDirection, "--to must be below --from");
  const auto images = ctx.images();
  const double rate = harness::common_rate(images);
  if (rate != ctx.cfg.from_hz) {
    fail(ErrorCode::MixedRates, "data is " + csv::fmt(rate, 0) + " Hz, --from says " + csv::fmt(ctx.cfg.from_hz, 0));
  }
  const auto out = features::spectransform(images, ctx.cfg.to_hz);
  features::save_dataset(ctx.cfg.out, out);
  ctx.log(std::to_string(out.size()) + " images now " + std::to_string(out.front()->time_bins) + "x" +
          std::to_string(out.front()->freq_bins));
}

inline void cmd_aggregate(const Context& ctx) {
  auto m = ctx.model();
  const auto images = ctx.images();
  const auto test = of_users(images, ctx.split(images).test_users);
  check_rate(m, test);
  harness::AggregationConfig ac{ctx.cfg.window_s, 0.64, ctx.cfg.include_other_in_macro};
  harness::frames_per_window(ac);  // validates the window before any work
  const auto r = harness::aggregate_model(m.net, test, ac);
  std::string s = "window_s,frame_f1,activity_f1,frames,windows\n";
  s += csv::fmt(ac.window_s, 1) + "," + harness::f1_cell(r.frame.macro_f1) + "," + harness::f1_cell(r.activity.macro_f1) +
       "," + std::to_string(r.frame.frames) + "," + std::to_string(r.windows.size()) + "\n";
  csv::write_text(ctx.out("aggregation.csv"), s);
  const auto locs = present_locations(test);
  const auto curve = harness::aggregation_curve(m.net, test, locs, {10, 20, 30, 40, 50}, ctx.cfg.include_other_in_macro);
  csv::write_text(ctx.out("aggregation_curve.csv"), harness::aggregation_curve_csv(curve, locs));
  harness::write_reference_annotations(ctx.cfg.out);
  ctx.log("frame F1 " + harness::f1_cell(r.frame.macro_f1) + " activity F1 " + harness::f1_cell(r.activity.macro_f1));
}

inline void cmd_finetune(const Context& ctx) {
  auto m = ctx.model();
  if (ctx.cfg.classes.size() < 2) fail(ErrorCode::BadFlag, "--classes needs at least two activities");
  std::vector<Activity> classes;
  for (const auto& c : ctx.cfg.classes) classes.push_back(parse_activity(c));
  const auto all = ctx.images();
  check_rate(m, all);
  auto label_of = [&](const features::SpectrogramImage& i) {
    return static_cast<int>(std::find(classes.begin(), classes.end(), i.activity) - classes.begin());
  };
  const int n = static_cast<int>(classes.size());
  const auto images = harness::select(all, [&](const features::SpectrogramImage& i) { return label_of(i) < n; });
  const auto split = ctx.split(images);
  auto labelled = [&](const std::vector<std::string>& users, int stride) {
    harness::LabelledSet s;
    s.images = harness::every_kth(harness::sorted(of_users(images, users)), stride);
    for (const auto& i : s.images) s.labels.push_back(label_of(*i));
    return s;
  };
  const auto train = labelled(split.train_users, ctx.cfg.train_stride);
  const auto val = labelled(split.val_users, ctx.cfg.val_stride);
  const auto test = labelled(split.test_users, 1);
  harness::FinetuneConfig fc{ctx.cfg.finetune_lr, ctx.cfg.finetune_epochs, ctx.cfg.batch_size, ctx.cfg.seed, ctx.progress()};
  auto r = harness::finetune_embeddings(m.net, train, val, n, fc);
  const double test_f1 = harness::evaluate_head(m.net, r.head, test, n);
  m.net.replace_head(r.head);
  m.best_val_f1 = r.best_val_f1;
  m.best_epoch = r.best_epoch;
  harness::save_model(ctx.out("model"), m);
  nlohmann::json j;
  j["classes"] = ctx.cfg.classes;
  j["split"] = split_json(split);
  j["best_val_f1"] = r.best_val_f1;
  j["best_epoch"] = r.best_epoch;
  j["test_f1"] = test_f1;
  csv::write_text(ctx.out("finetune.json"), j.dump(2) + "\n");
  ctx.log("fine-tuned test F1 " + harness::f1_cell(test_f1));
}

inline void cmd_synth_train(const Context& ctx) {
  const auto images = ctx.images();
  const auto split = ctx.split(images);
  const Location src = Location::parse(ctx.cfg.source), tgt = Location::parse(ctx.cfg.target);
  const auto train = of_users(images, split.train_users);
  const auto val = of_users(images, split.val_users);
  synthesis::AutoencoderTrainConfig ac;
  ac.epochs = ctx.cfg.ae_epochs;
  ac.seed = ctx.cfg.seed;
  ac.progress = ctx.progress();
  auto stride = [&](const features::ImageSet& s) { return harness::every_kth(harness::sorted(s), ctx.cfg.synth_stride); };
  auto src_ae = synthesis::train_autoencoder(stride(harness::at_locations(train, {src})),
                                             stride(harness::at_locations(val, {src})), ac);
  auto tgt_ae = src == tgt ? src_ae
                           : synthesis::train_autoencoder(stride(harness::at_locations(train, {tgt})),
                                                          stride(harness::at_locations(val, {tgt})), ac);
  auto every = [&](std::vector<synthesis::AlignedPair> p) {
    std::vector<synthesis::AlignedPair> out;
    for (std::size_t i = 0; i < p.size(); i += static_cast<std::size_t>(std::max(1, ctx.cfg.synth_stride))) out.push_back(p[i]);
    return out;
  };
  synthesis::SynthConfig sc;
  sc.lambda = ctx.cfg.lambda;
  sc.epochs = ctx.cfg.synth_epochs;
  sc.lr = ctx.cfg.synth_lr;
  sc.seed = ctx.cfg.seed;
  sc.progress = ctx.progress();
  auto s = synthesis::train_synthesizer(src_ae, tgt_ae, every(synthesis::align_pairs(train, src, tgt)),
                                        every(synthesis::align_pairs(val, src, tgt)), sc);
  synthesis::save_synthesizer(ctx.out("synth"), s);
  nlohmann::json j;
  j["split"] = split_json(split);
  j["source_ae_val_mse"] = src_ae.best_val_mse;
  j["target_ae_val_mse"] = tgt_ae.best_val_mse;
  j["val_l_ot"] = s.best_val.l_ot;
  j["val_l_recon"] = s.best_val.l_recon;
  j["best_epoch"] = s.best_epoch;
  csv::write_text(ctx.out("synth_train.json"), j.dump(2) + "\n");
}

inline void cmd_synth_eval(const Context& ctx) {
  if (ctx.cfg.synth.empty()) fail(ErrorCode::BadFlag, "--synth is required");
  auto s = synthesis::load_synthesizer(ctx.cfg.synth);
  auto m = ctx.model();
  const auto images = ctx.images();
  const auto test = of_users(images, ctx.split(images).test_users);
  check_rate(m, test);
  const auto pairs = synthesis::align_pairs(test, s.source, s.target);
  if (pairs.empty()) fail(ErrorCode::NoAlignedPairs, "no aligned test frames");
  features::ImageSet src, real;
  for (const auto& p : pairs) {
    src.push_back(p.source);
    real.push_back(p.target);
  }
  const auto fake = synthesis::synthesize(s, src);
  const auto r = synthesis::evaluate_synthesis(m.net, fake, real, ctx.cfg.include_other_in_macro);
  std::string csv_s = "source,target,real_f1,synthetic_f1,gap,frames\n";
  csv_s += s.source.name() + "," + s.target.name() + "," + harness::f1_cell(r.real.macro_f1) + "," +
           harness::f1_cell(r.synthetic.macro_f1) + "," + harness::f1_cell(r.gap()) + "," + std::to_string(pairs.size()) + "\n";
  csv::write_text(ctx.out("synthesis_eval.csv"), csv_s);
  // One triptych per activity, from the first test frame carrying it.
  std::set<Activity> done;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!done.insert(real[i]->activity).second) continue;
    synthesis::write_triptych_pgm(ctx.out("triptych_" + s.source.name() + "2" + s.target.name() + "_" +
                                          activity_name(real[i]->activity) + ".pgm"),
                                  *src[i], *real[i], *fake[i]);
  }
  harness::write_reference_annotations(ctx.cfg.out);
  ctx.log("real F1 " + harness::f1_cell(r.real.macro_f1) + " synthetic F1 " + harness::f1_cell(r.synthetic.macro_f1));
}

// ---------------------------------------------------------------------- run

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> kNames{"gen-bench", "ingest",    "featurize",     "train",
                                               "eval",      "transfer-matrix", "eigenlocations", "spectransform",
                                               "aggregate", "finetune",  "synth-train",   "synth-eval"};
  return kNames;
}

inline bool is_usage_error(ErrorCode c) {
  return c == ErrorCode::UnknownSubcommand || c == ErrorCode::BadFlag || c == ErrorCode::BadDirection;
}

/// Entry point. Exit codes: 0 success, 1 usage error, 2 data error.
inline int run(std::vector<std::string> args, std::ostream& err = std::cerr) {
  RunConfig cfg;
  try {
    if (args.empty() || args[0].empty() || args[0][0] == '-') {
      if (!args.empty() && (args[0] == "-h" || args[0] == "--help")) {
        std::cout << "usage: motionkit <subcommand> [flags]\nsubcommands:";
        for (const auto& s : subcommands()) std::cout << " " << s;
        std::cout << "\n";
        return 0;
      }
      fail(ErrorCode::UnknownSubcommand, "missing subcommand");
    }
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), args[0]) == names.end()) {
      fail(ErrorCode::UnknownSubcommand, "'" + args[0] + "'");
    }
    cfg.subcommand = args[0];
    // --config is applied first so explicit flags override it.
    for (std::size_t i = 1; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(csv::read_text(path));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::BadFlag, "config " + path + ": " + e.what());
      }
      apply_json(cfg, j);
    }

    CLI::App app{"motionkit " + cfg.subcommand};
    std::string config_path;
    app.add_option("--config", config_path, "JSON run config; flags override it");
    app.add_option("--seed", cfg.seed);
    app.add_option("--rate", cfg.rate_hz, "sampling rate in Hz");
    app.add_option("--locations", cfg.locations)->delimiter(',');
    app.add_option("--data", cfg.data, "benchmark or manifest directory");
    app.add_option("--features", cfg.features, "featurized dataset directory");
    app.add_option("--model", cfg.model, "model checkpoint directory");
    app.add_option("--synth", cfg.synth, "synthesizer checkpoint directory");
    app.add_option("--out", cfg.out, "output directory");
    app.add_option("--workers", cfg.workers, "parallel training jobs");
    app.add_flag("--quiet", cfg.quiet);
    app.add_option("--epochs", cfg.epochs);
    app.add_option("--lr", cfg.lr);
    app.add_option("--batch-size", cfg.batch_size);
    app.add_option("--stage1", cfg.stage1);
    app.add_option("--stage2", cfg.stage2);
    app.add_option("--hidden", cfg.hidden);
    app.add_option("--dropout", cfg.dropout);
    app.add_option("--train-stride", cfg.train_stride);
    app.add_option("--val-stride", cfg.val_stride);
    app.add_flag("--include-other-in-macro", cfg.include_other_in_macro);
    app.add_option("--users", cfg.users);
    app.add_flag("--pseudo", cfg.pseudo, "render the two pseudo-activities instead");
    app.add_option("--k", cfg.k);
    app.add_option("--from", cfg.from_hz);
    app.add_option("--to", cfg.to_hz);
    app.add_option("--window", cfg.window_s, "activity window in seconds");
    app.add_option("--classes", cfg.classes, "activities to fine-tune on, in class-index order")->delimiter(',');
    app.add_option("--finetune-lr", cfg.finetune_lr);
    app.add_option("--finetune-epochs", cfg.finetune_epochs);
    app.add_option("--source", cfg.source);
    app.add_option("--target", cfg.target);
    app.add_option("--lambda", cfg.lambda);
    app.add_option("--ae-epochs", cfg.ae_epochs);
    app.add_option("--synth-epochs", cfg.synth_epochs);
    app.add_option("--synth-lr", cfg.synth_lr);
    app.add_option("--synth-stride", cfg.synth_stride);

    std::vector<std::string> rest(args.begin() + 1, args.end());
    std::reverse(rest.begin(), rest.end());  // CLI11 consumes a reversed vector
    try {
      app.parse(rest);
    } catch (const CLI::CallForHelp&) {
      std::cout << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      fail(ErrorCode::BadFlag, e.what());
    }
    if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.train_stride < 1 || cfg.val_stride < 1 || !(cfg.lr > 0.0)) {
      fail(ErrorCode::BadFlag, "epochs, batch size, strides and lr must be positive");
    }

    Context ctx{cfg};
    fs::create_directories(cfg.out);
    write_run_config(cfg);
    const auto& sub = cfg.subcommand;
    if (sub == "gen-bench") cmd_gen_bench(ctx);
    else if (sub == "ingest") cmd_ingest(ctx);
    else if (sub == "featurize") cmd_featurize(ctx);
    else if (sub == "train") cmd_train(ctx);
    else if (sub == "eval") cmd_eval(ctx);
    else if (sub == "transfer-matrix") cmd_transfer(ctx);
    else if (sub == "eigenlocations") cmd_eigen(ctx);
    else if (sub == "spectransform") cmd_spectransform(ctx);
    else if (sub == "aggregate") cmd_aggregate(ctx);
    else if (sub == "finetune") cmd_finetune(ctx);
    else if (sub == "synth-train") cmd_synth_train(ctx);
    else if (sub == "synth-eval") cmd_synth_eval(ctx);
    return 0;
  } catch (const Error& e) {
    err << "motionkit: " << e.what() << "\n";
    return is_usage_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << "motionkit: " << e.what() << "\n";
    return 2;
  }
}

inline int run(int argc, char** argv) { return run(std::vector<std::string>(argv + 1, argv + argc)); }

}  // namespace motionkit::cli
