// Copyright 2026 The DIKM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: gen | train | eval | export | sweep.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dikm/checkpoint.hpp"
#include "dikm/clustering.hpp"
#include "dikm/config.hpp"
#include "dikm/datasets.hpp"
#include "dikm/error.hpp"
#include "dikm/evaluation.hpp"
#include "dikm/parallel.hpp"
#include "dikm/png_io.hpp"
#include "dikm/similarity.hpp"

namespace fs = std::filesystem;
using namespace dikm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

// Flags that mirror config keys. Values stay textual until RunConfig parses
// them, so the file and the command line go through the same validation.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    options[key] = app->add_option(flag, values[key], help);
  }

  RunConfig resolve() const {
    RunConfig cfg;
    cfg.threads = default_thread_count();
    if (!config_path.empty()) cfg.apply_file(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) cfg.set(key, values.at(key));
    return cfg;
  }
};

void add_training_flags(CLI::App* app, ConfigFlags& f) {
  f.add(app, "--metric", "metric", "euclidean | affine | diffeo");
  f.add(app, "--k", "k", "number of clusters");
  f.add(app, "--landmarks", "landmarks", "landmark count, a perfect square");
  f.add(app, "--lr", "learning_rate", "Adam learning rate for the warp fits");
  f.add(app, "--epochs", "epochs", "maximum Lloyd epochs (default 150)");
  f.add(app, "--batch-size", "batch_size", "mini-batch size (default 64)");
  f.add(app, "--blur-sigma", "blur_sigma", "Gaussian blur of the affine stage, in pixels");
  f.add(app, "--stage1-steps", "stage1_steps", "affine steps per fit");
  f.add(app, "--stage2-steps", "stage2_steps", "landmark steps per fit and epoch");
  f.add(app, "--refresh-affine", "refresh_affine", "rerun the affine stage every epoch (true/false)");
  f.add(app, "--clamp-cells", "clamp_cells", "max landmark offset from the affine fit, in grid cells");
  f.add(app, "--test-stage1-steps", "test_stage1_steps", "affine steps when assigning unseen data");
  f.add(app, "--test-stage2-steps", "test_stage2_steps", "landmark steps when assigning unseen data");
  f.add(app, "--tolerance", "change_tolerance", "stop when fewer than this fraction of samples move");
  f.add(app, "--regularization", "regularization", "kernel diagonal regularizer");
  f.add(app, "--seed", "seed", "random seed");
  f.add(app, "--restarts", "restarts", "independent seedings; the lowest final distortion is kept");
  f.add(app, "--threads", "threads", "worker threads (default $DIKM_THREADS or 1)");
  f.add(app, "--data", "data", "training data: IDX directory or PNG class-directory root");
  f.add(app, "--test-data", "test_data", "held-out data for evaluation");
  f.add(app, "--out", "out", "output directory");
  app->add_option("--config", f.config_path, "key = value config file; flags take precedence");
}

LabeledDataset load_dataset(const std::string& descriptor, int height, int width) {
  if (descriptor.empty()) throw Error(ErrorCode::kInvalidArgument, "no dataset given (--data)");
  const fs::path p(descriptor);
  if (fs::exists(p / "images-idx3-ubyte")) return load_idx_dir(p);
  return load_png_dir(p, height, width);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

std::shared_ptr<const WarpPlan> plan_for(const RunConfig& cfg, int height, int width) {
  return WarpPlan::create(height, width, cfg.landmarks, TpsOptions{cfg.regularization});
}

LandmarkCache make_cache(const ClusterState& state) {
  LandmarkCache cache;
  cache.assignments = state.assignments;
  for (std::size_t i = 0; i < state.sample_count(); ++i) {
    const auto& t = state.fit(i, static_cast<std::size_t>(state.assignments[i])).target;
    cache.targets.insert(cache.targets.end(), t.data(), t.data() + t.size());
  }
  return cache;
}

struct TrainResult {
  ClusterState state;
  Checkpoint checkpoint;
};

TrainResult run_training(const RunConfig& cfg, const LabeledDataset& data, std::ostream* history) {
  const auto plan = plan_for(cfg, data.height(), data.width());
  TrainConfig tc = cfg.train_config();
  const auto start = std::chrono::steady_clock::now();
  if (history) {
    *history << "restart,epoch,distortion,change_fraction,wall_seconds\n";
    tc.on_epoch = [&](const ClusterState& s) {
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const double change = s.change_history.empty() ? 1.0 : s.change_history.back();
      *history << s.restart << ',' << s.epoch << ',' << format_double(s.distortion_history.back()) << ',' << format_double(change) << ','
               << format_double(wall) << '\n';
    };
  }
  TrainResult r{train(data.images, cfg.k, cfg.metric, tc, cfg.seed, *plan), {}};
  r.checkpoint.kind = cfg.metric;
  r.checkpoint.height = data.height();
  r.checkpoint.width = data.width();
  r.checkpoint.landmarks = cfg.landmarks;
  r.checkpoint.tps = TpsOptions{cfg.regularization};
  r.checkpoint.centroids = r.state.centroids;
  r.checkpoint.cache = make_cache(r.state);
  return r;
}

int cmd_gen(const std::string& kind, int per_class, double sigma, const std::string& source,
            const std::optional<std::uint64_t>& seed, const AffineRanges& ranges, const std::string& out) {
  if (!seed) throw Error(ErrorCode::kInvalidArgument, "gen requires an explicit --seed");
  if (kind != "affine" && kind != "diffeo") throw Error(ErrorCode::kInvalidArgument, "--kind must be affine or diffeo");
  const LabeledDataset src = load_dataset(source, 28, 28);
  const int classes = src.class_count();
  const auto exemplars = base_exemplars(src, classes);
  const SyntheticDataset d = kind == "affine" ? gen_affine_mnist(exemplars, per_class, ranges, *seed)
                                              : gen_diffeo_mnist(exemplars, per_class, ranges, sigma, *seed);
  const fs::path dir(out);
  save_idx_dir(d.train, dir / "train");
  save_idx_dir(d.test, dir / "test");
  std::ostringstream prov;
  prov << "kind = " << kind << "\nseed = " << *seed << "\nper_class = " << per_class
       << "\nclasses = " << classes << "\nrotation_deg = " << format_double(ranges.rotation_deg)
       << "\nscale_min = " << format_double(ranges.scale_min) << "\nscale_max = " << format_double(ranges.scale_max)
       << "\nshear = " << format_double(ranges.shear) << "\nshift = " << format_double(ranges.shift)
       << "\ndiffeo_sigma = " << format_double(kind == "affine" ? 0.0 : sigma) << "\nsource = " << source
       << "\ntrain = " << d.train.size() << "\ntest = " << d.test.size() << "\n";
  write_text(dir / "provenance.txt", prov.str());
  std::cout << "wrote " << d.train.size() << " train / " << d.test.size() << " test samples to " << dir << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  const LabeledDataset data = load_dataset(cfg.data, 28, 28);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_text(dir / "config.txt", cfg.serialize());
  std::ofstream history(dir / "history.csv");
  history << std::setprecision(17);
  const TrainResult r = run_training(cfg, data, &history);
  save_checkpoint(r.checkpoint, dir / "checkpoint.dikm");
  std::cout << "restart " << r.state.restart << ", epochs " << r.state.epoch << ", distortion " << r.state.distortion_history.back() << "\n";
  return kExitOk;
}

struct EvalRun {
  std::string checkpoint;
  TestAssignment test;
  EvalReport report;
  double distortion = 0.0;
};

int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& checkpoints) {
  if (checkpoints.empty()) throw Error(ErrorCode::kInvalidArgument, "eval needs at least one --checkpoint");
  const std::string source = cfg.test_data.empty() ? cfg.data : cfg.test_data;
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_text(dir / "config.txt", cfg.serialize());

  std::vector<EvalRun> runs;
  for (const auto& path : checkpoints) {
    const Checkpoint cp = load_checkpoint(path);
    const LabeledDataset data = load_dataset(source, cp.height, cp.width);
    if (data.height() != cp.height || data.width() != cp.width)
      throw Error(ErrorCode::kDimensionMismatch, "test images do not match the checkpoint frame");
    const auto plan = WarpPlan::create(cp.height, cp.width, cp.landmarks, cp.tps);
    EvalRun run;
    run.checkpoint = path;
    run.test = assign_test(cp.centroids, cp.kind, data.images, *plan, cfg.train_config());
    run.report = clustering_accuracy(data.labels, run.test.assignments, cp.k());
    for (std::size_t i = 0; i < data.size(); ++i)
      run.distortion += run.test.distances(static_cast<Eigen::Index>(i), run.test.assignments[i]);
    run.report.distortion = run.distortion;
    runs.push_back(std::move(run));
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r].report.accuracy > runs[best].report.accuracy) best = r;

  std::ofstream csv(dir / "eval.csv");
  csv << "run,checkpoint,accuracy,distortion\n";
  for (std::size_t r = 0; r < runs.size(); ++r)
    csv << r << ',' << runs[r].checkpoint << ',' << format_double(runs[r].report.accuracy) << ','
        << format_double(runs[r].distortion) << '\n';
  csv << "best," << runs[best].checkpoint << ',' << format_double(runs[best].report.accuracy) << ','
      << format_double(runs[best].distortion) << '\n';

  const EvalRun& b = runs[best];
  std::ofstream mapping(dir / "mapping.csv");
  mapping << "cluster,label,size\n";
  for (std::size_t c = 0; c < b.report.mapping.size(); ++c)
    mapping << c << ',' << b.report.mapping[c] << ',' << b.report.per_cluster_sizes[c] << '\n';
  std::ofstream assignments(dir / "assignments.csv");
  assignments << "sample,cluster,label,distance\n";
  for (std::size_t i = 0; i < b.test.assignments.size(); ++i) {
    const int c = b.test.assignments[i];
    assignments << i << ',' << c << ',' << b.report.mapping[static_cast<std::size_t>(c)] << ','
                << format_double(b.test.distances(static_cast<Eigen::Index>(i), c)) << '\n';
  }
  std::ostringstream report;
  report << "runs = " << runs.size() << "\nbest_run = " << best << "\nbest_checkpoint = " << b.checkpoint
         << "\naccuracy = " << format_double(b.report.accuracy) << "\nmatched = " << b.report.matched
         << "\nsamples = " << b.test.assignments.size() << "\ndistortion = " << format_double(b.distortion) << "\n";
  write_text(dir / "report.txt", report.str());
  std::cout << report.str();
  return kExitOk;
}

int cmd_export(const RunConfig& cfg, const std::string& checkpoint_path) {
  const Checkpoint cp = load_checkpoint(checkpoint_path);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);

  // Centroid grid: one row of K tiles, each min-max rescaled on its own.
  const int h = cp.height, w = cp.width, k = cp.k();
  std::vector<std::uint8_t> grid(static_cast<std::size_t>(h) * w * k, 0);
  for (int c = 0; c < k; ++c) {
    const auto& px = cp.centroids[static_cast<std::size_t>(c)].pixels;
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) {
        const double v = px[static_cast<std::size_t>(r) * w + col];
        const double scaled = *hi > *lo ? (v - *lo) / (*hi - *lo) * 255.0 : 128.0;
        grid[(static_cast<std::size_t>(r) * k + c) * w + col] = static_cast<std::uint8_t>(std::lround(scaled));
      }
  }
  write_png_gray8(dir / "centroids.png", h, w * k, grid);

  if (!cfg.data.empty()) {
    const LabeledDataset data = load_dataset(cfg.data, h, w);
    const auto plan = WarpPlan::create(h, w, cp.landmarks, cp.tps);
    std::vector<Image> warped(data.size());
    const bool cached = cp.cache && cp.cache->assignments.size() == data.size();
    const std::size_t per = 2 * static_cast<std::size_t>(cp.landmarks);
    if (cached) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        WarpFit fit = WarpFit::identity(*plan);
        fit.target = Eigen::Map<const Eigen::VectorXd>(cp.cache->targets.data() + i * per, static_cast<Eigen::Index>(per));
        warped[i] = warped_representation(cp.kind, data.images[i], *plan, fit);
      }
    } else {
      const TestAssignment t = assign_test(cp.centroids, cp.kind, data.images, *plan, cfg.train_config());
      for (std::size_t i = 0; i < data.size(); ++i)
        warped[i] = warped_representation(cp.kind, data.images[i], *plan,
                                          t.fits[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(t.assignments[i])]);
    }
    std::ofstream csv(dir / "warped.csv");
    csv << std::setprecision(17);
    for (const Image& im : warped) {
      for (std::size_t p = 0; p < im.pixels.size(); ++p) csv << (p ? "," : "") << format_double(im.pixels[p]);
      csv << '\n';
    }
  }
  std::cout << "exported to " << dir << "\n";
  return kExitOk;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    RunConfig probe;
    probe.set("landmarks", item);
    out.push_back(probe.landmarks);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    RunConfig probe;
    probe.set("learning_rate", item);
    out.push_back(probe.learning_rate);
  }
  return out;
}

int cmd_sweep(const RunConfig& base, const std::string& landmark_grid, const std::string& lr_grid) {
  const std::vector<int> landmarks = landmark_grid.empty() ? kLandmarkGrid : parse_int_list(landmark_grid);
  const std::vector<double> rates = lr_grid.empty() ? kLearningRateGrid : parse_double_list(lr_grid);
  const LabeledDataset data = load_dataset(base.data, 28, 28);
  std::optional<LabeledDataset> test;
  if (!base.test_data.empty()) test = load_dataset(base.test_data, data.height(), data.width());
  const fs::path dir(base.out);
  fs::create_directories(dir);

  std::vector<SweepRun> runs;
  std::ofstream csv(dir / "sweep.csv");
  csv << "landmarks,learning_rate,distortion,accuracy\n";
  for (int l : landmarks)
    for (double lr : rates) {
      RunConfig cfg = base;
      cfg.landmarks = l;
      cfg.learning_rate = lr;
      const TrainResult r = run_training(cfg, data, nullptr);
      SweepRun run{{l, lr}, r.state.distortion_history.back(), std::nullopt};
      if (test) {
        const auto plan = plan_for(cfg, data.height(), data.width());
        const TestAssignment t = assign_test(r.state, test->images, *plan, cfg.train_config());
        run.accuracy = clustering_accuracy(test->labels, t.assignments, cfg.k).accuracy;
      }
      csv << l << ',' << format_double(lr) << ',' << format_double(run.distortion) << ','
          << (run.accuracy ? format_double(*run.accuracy) : "") << '\n';
      csv.flush();
      std::cout << "landmarks=" << l << " lr=" << lr << " distortion=" << run.distortion;
      if (run.accuracy) std::cout << " accuracy=" << *run.accuracy;
      std::cout << "\n";
      runs.push_back(run);
    }
  const SweepRun& chosen = runs[crossval_select(runs)];
  RunConfig selected = base;
  selected.landmarks = chosen.params.landmarks;
  selected.learning_rate = chosen.params.learning_rate;
  write_text(dir / "selected.txt", selected.serialize());
  std::cout << "selected landmarks=" << chosen.params.landmarks << " lr=" << chosen.params.learning_rate << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deformation-invariant K-means clustering"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "generate Affine-/Diffeo-MNIST from base exemplars");
  std::string gen_kind = "affine", gen_source, gen_out = "data";
  int gen_per_class = 100;
  double gen_sigma = 1.5;
  std::optional<std::uint64_t> gen_seed;
  AffineRanges ranges;
  gen->add_option("--kind", gen_kind, "affine | diffeo")->capture_default_str();
  gen->add_option("--per-class", gen_per_class, "samples per class")->capture_default_str();
  gen->add_option("--sigma", gen_sigma, "landmark jitter in pixels (diffeo)")->capture_default_str();
  gen->add_option("--source", gen_source, "IDX directory holding the base exemplars")->required();
  gen->add_option("--seed", gen_seed, "random seed (required)");
  gen->add_option("--rotation", ranges.rotation_deg, "max rotation, degrees")->capture_default_str();
  gen->add_option("--scale-min", ranges.scale_min)->capture_default_str();
  gen->add_option("--scale-max", ranges.scale_max)->capture_default_str();
  gen->add_option("--shear", ranges.shear)->capture_default_str();
  gen->add_option("--shift", ranges.shift, "max translation, pixels")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->capture_default_str();

  ConfigFlags train_flags, eval_flags, export_flags, sweep_flags;
  auto* train_cmd = app.add_subcommand("train", "cluster a dataset and write a checkpoint");
  add_training_flags(train_cmd, train_flags);

  auto* eval_cmd = app.add_subcommand("eval", "assign held-out data to trained centroids");
  add_training_flags(eval_cmd, eval_flags);
  std::vector<std::string> eval_checkpoints;
  eval_cmd->add_option("--checkpoint", eval_checkpoints, "checkpoint file(s); the best run is reported")->required();

  auto* export_cmd = app.add_subcommand("export", "write the centroid grid PNG and warped-data CSV");
  add_training_flags(export_cmd, export_flags);
  std::string export_checkpoint;
  export_cmd->add_option("--checkpoint", export_checkpoint, "checkpoint file")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "cross-validate landmarks x learning rate by distortion");
  add_training_flags(sweep_cmd, sweep_flags);
  std::string sweep_landmarks, sweep_rates;
  sweep_cmd->add_option("--landmark-grid", sweep_landmarks, "comma-separated landmark counts");
  sweep_cmd->add_option("--lr-grid", sweep_rates, "comma-separated learning rates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*gen) return cmd_gen(gen_kind, gen_per_class, gen_sigma, gen_source, gen_seed, ranges, gen_out);
    if (*train_cmd) return cmd_train(train_flags.resolve());
    if (*eval_cmd) return cmd_eval(eval_flags.resolve(), eval_checkpoints);
    if (*export_cmd) return cmd_export(export_flags.resolve(), export_checkpoint);
    if (*sweep_cmd) return cmd_sweep(sweep_flags.resolve(), sweep_landmarks, sweep_rates);
  } catch (const Error& e) {
    std::cerr << "dikm: " << e.what() << "\n";
    return e.is_numerical() ? kExitNumerical : kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << "dikm: " << e.what() << "\n";
    return kExitBadInput;
  }
  return kExitBadInput;
}
