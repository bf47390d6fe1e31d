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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "dikm/checkpoint.hpp"
#include "dikm/clustering.hpp"
#include "dikm/config.hpp"
#include "dikm/datasets.hpp"
#include "dikm/png_io.hpp"

using namespace dikm;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("dikm_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Cleanup {
  const fs::path dir = work_dir();
  ~Cleanup() { fs::remove_all(dir); }
} cleanup;

int run(const std::string& args) {
  const std::string cmd = std::string(DIKM_CLI) + " " + args + " > " + (work_dir() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Three well-separated blob classes on a 12 x 12 frame, written as IDX.
fs::path toy_dataset() {
  static const fs::path dir = [] {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.02);
    LabeledDataset d;
    const double centres[3][2] = {{3, 3}, {3, 8}, {8, 5}};
    for (int j = 0; j < 8; ++j)
      for (int c = 0; c < 3; ++c) {
        Image im(12, 12);
        for (int r = 0; r < 12; ++r)
          for (int col = 0; col < 12; ++col) {
            const double du = r - centres[c][0], dv = col - centres[c][1];
            im.at(r, col) = std::max(0.0, std::exp(-(du * du + dv * dv) / 4.0) + noise(rng));
          }
        d.images.push_back(normalized(im));
        d.labels.push_back(c);
      }
    const fs::path out = work_dir() / "toy";
    save_idx_dir(d, out);
    return out;
  }();
  return dir;
}

}  // namespace

TEST_CASE("gen is deterministic and demands a seed") {
  const std::string src = std::string(" --source ") + DIKM_MNIST_DIR + "/train";
  const fs::path a = work_dir() / "gen_a", b = work_dir() / "gen_b";
  REQUIRE(run("gen --kind affine --per-class 5 --seed 7 --out " + a.string() + src) == 0);
  REQUIRE(run("gen --kind affine --per-class 5 --seed 7 --out " + b.string() + src) == 0);
  for (const char* f : {"train/images-idx3-ubyte", "train/labels-idx1-ubyte", "test/images-idx3-ubyte", "provenance.txt"})
    CHECK(slurp(a / f) == slurp(b / f));
  CHECK(slurp(a / "provenance.txt").find("seed = 7") != std::string::npos);

  const fs::path z = work_dir() / "gen_z";
  REQUIRE(run("gen --kind diffeo --sigma 0 --per-class 5 --seed 7 --out " + z.string() + src) == 0);
  CHECK(slurp(a / "train/images-idx3-ubyte") == slurp(z / "train/images-idx3-ubyte"));
  CHECK(slurp(a / "test/labels-idx1-ubyte") == slurp(z / "test/labels-idx1-ubyte"));

  CHECK(run("gen --kind affine --per-class 5 --out " + (work_dir() / "gen_x").string() + src) == 2);
  CHECK(slurp(work_dir() / "last.log").find("seed") != std::string::npos);
  CHECK(run("gen --kind sideways --seed 1 --out " + (work_dir() / "gen_y").string() + src) == 2);
}

TEST_CASE("train with zero epochs stores the K-means++ seeds") {
  const fs::path out = work_dir() / "train0";
  REQUIRE(run("train --data " + toy_dataset().string() + " --metric euclidean --k 3 --epochs 0 --seed 4 --out " +
              out.string()) == 0);
  const Checkpoint cp = load_checkpoint(out / "checkpoint.dikm");
  const LabeledDataset d = load_idx_dir(toy_dataset());
  CHECK(cp.centroids == kmeanspp_init(d.images, 3, 4));
  CHECK(cp.kind == MetricKind::kEuclidean);
  REQUIRE(cp.cache.has_value());
  CHECK(cp.cache->assignments.size() == d.size());
  const auto history = read_csv(out / "history.csv");
  REQUIRE(history.size() == 2);
  CHECK(history[0] == std::vector<std::string>{"restart", "epoch", "distortion", "change_fraction", "wall_seconds"});
}

TEST_CASE("train, eval and export on a separable toy set") {
  const fs::path out = work_dir() / "train_di";
  const fs::path cfg = work_dir() / "run.cfg";
  std::ofstream(cfg) << "metric = diffeo\nk = 3\nlandmarks = 9\nepochs = 40\nlearning_rate = 0.05\nseed = 3\n";
  REQUIRE(run("train --config " + cfg.string() + " --metric euclidean --data " + toy_dataset().string() + " --out " +
              out.string()) == 0);
  RunConfig echoed;
  echoed.apply_file(out / "config.txt");
  CHECK(echoed.metric == MetricKind::kEuclidean);  // the flag wins over the file
  CHECK(echoed.epochs == 40);
  CHECK(echoed.landmarks == 9);

  const auto history = read_csv(out / "history.csv");
  for (std::size_t r = 2; r < history.size(); ++r) CHECK(std::stod(history[r][2]) <= std::stod(history[r - 1][2]) + 1e-9);

  const fs::path ev = work_dir() / "eval";
  REQUIRE(run("eval --checkpoint " + (out / "checkpoint.dikm").string() + " --data " + toy_dataset().string() +
              " --out " + ev.string()) == 0);
  const auto rows = read_csv(ev / "eval.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::stod(rows[1][2]) == 1.0);
  const auto mapping = read_csv(ev / "mapping.csv");
  REQUIRE(mapping.size() == 4);
  std::vector<int> labels;
  for (std::size_t r = 1; r < mapping.size(); ++r) labels.push_back(std::stoi(mapping[r][1]));
  std::sort(labels.begin(), labels.end());
  CHECK(labels == std::vector<int>{0, 1, 2});
  CHECK(read_csv(ev / "assignments.csv").size() == 25);

  const fs::path ex = work_dir() / "export";
  REQUIRE(run("export --checkpoint " + (out / "checkpoint.dikm").string() + " --data " + toy_dataset().string() +
              " --out " + ex.string()) == 0);
  const Image png = read_png_gray(ex / "centroids.png");
  CHECK(png.height == 12);
  CHECK(png.width == 36);
  const auto warped = read_csv(ex / "warped.csv");
  const LabeledDataset d = load_idx_dir(toy_dataset());
  REQUIRE(warped.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    REQUIRE(warped[i].size() == 144);
    for (std::size_t p = 0; p < 144; ++p) CHECK(std::stod(warped[i][p]) == d.images[i].pixels[p]);
  }
}

TEST_CASE("restarts keep the lowest final distortion") {
  const fs::path out = work_dir() / "restarts";
  REQUIRE(run("train --data " + toy_dataset().string() + " --metric affine --landmarks 9 --k 4 --epochs 4 --restarts 3 "
              "--seed 6 --out " + out.string()) == 0);
  const auto history = read_csv(out / "history.csv");
  std::map<int, double> final_distortion;
  for (std::size_t r = 1; r < history.size(); ++r) {
    const int restart = std::stoi(history[r][0]);
    if (r > 1 && std::stoi(history[r - 1][0]) == restart)
      CHECK(std::stod(history[r][2]) <= std::stod(history[r - 1][2]) + 1e-9);
    final_distortion[restart] = std::stod(history[r][2]);
  }
  REQUIRE(final_distortion.size() == 3);
  double best = final_distortion.begin()->second;
  for (const auto& [restart, d] : final_distortion) best = std::min(best, d);
  const std::string log = slurp(work_dir() / "last.log");
  const double reported = std::stod(log.substr(log.find("distortion ") + 11));
  CHECK(reported == doctest::Approx(best).epsilon(1e-5));
}

TEST_CASE("export of a constant centroid is uniform gray") {
  Checkpoint cp;
  cp.height = 4;
  cp.width = 4;
  cp.landmarks = 4;
  cp.centroids = {normalized(Image(4, 4, 1.0))};
  cp.centroids[0].pixels[0] = 0.0;
  cp.centroids.push_back(normalized(Image(4, 4, 1.0)));
  save_checkpoint(cp, work_dir() / "const.dikm");
  const fs::path ex = work_dir() / "export_const";
  REQUIRE(run("export --checkpoint " + (work_dir() / "const.dikm").string() + " --out " + ex.string()) == 0);
  const Image png = read_png_gray(ex / "centroids.png");
  REQUIRE(png.width == 8);
  CHECK(png.at(0, 0) == 0.0);
  CHECK(png.at(0, 1) == 1.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 4; c < 8; ++c) CHECK(png.at(r, c) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("eval rejects a corrupted checkpoint") {
  const fs::path out = work_dir() / "train_crc";
  REQUIRE(run("train --data " + toy_dataset().string() + " --metric euclidean --k 3 --seed 1 --out " + out.string()) == 0);
  std::string bytes = slurp(out / "checkpoint.dikm");
  bytes[50] = static_cast<char>(bytes[50] ^ 0x01);
  std::ofstream(out / "bad.dikm", std::ios::binary) << bytes;
  CHECK(run("eval --checkpoint " + (out / "bad.dikm").string() + " --data " + toy_dataset().string() + " --out " +
            (work_dir() / "eval_bad").string()) == 2);
  CHECK(slurp(work_dir() / "last.log").find("ChecksumMismatch") != std::string::npos);
}

TEST_CASE("bad input exit codes") {
  CHECK(run("train --data " + (work_dir() / "missing").string() + " --out " + (work_dir() / "x").string()) == 2);
  CHECK(run("train --data " + toy_dataset().string() + " --k 100 --out " + (work_dir() / "x").string()) == 2);
  CHECK(run("train --data " + toy_dataset().string() + " --metric manhattan --out " + (work_dir() / "x").string()) == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("an ill-conditioned spline system is a numerical failure") {
  CHECK(run("train --data " + toy_dataset().string() + " --k 3 --landmarks 9 --regularization 1e300 --out " +
            (work_dir() / "x").string()) == 3);
}

TEST_CASE("sweep writes one row per cell and selects the smallest distortion") {
  const fs::path out = work_dir() / "sweep";
  REQUIRE(run("sweep --data " + toy_dataset().string() + " --test-data " + toy_dataset().string() +
              " --metric affine --k 3 --epochs 3 --landmark-grid 9,16 --lr-grid 0.01,0.05 --seed 2 --out " +
              out.string()) == 0);
  const auto rows = read_csv(out / "sweep.csv");
  REQUIRE(rows.size() == 5);
  std::size_t best = 1;
  for (std::size_t r = 2; r < rows.size(); ++r)
    if (std::stod(rows[r][2]) < std::stod(rows[best][2])) best = r;
  RunConfig selected;
  selected.apply_file(out / "selected.txt");
  CHECK(selected.landmarks == std::stoi(rows[best][0]));
  CHECK(selected.learning_rate == std::stod(rows[best][1]));

  const fs::path single = work_dir() / "sweep1";
  REQUIRE(run("sweep --data " + toy_dataset().string() + " --k 3 --epochs 2 --landmark-grid 16 --lr-grid 0.02 --out " +
              single.string()) == 0);
  RunConfig one;
  one.apply_file(single / "selected.txt");
  CHECK(one.landmarks == 16);
  CHECK(one.learning_rate == 0.02);
  CHECK(read_csv(single / "sweep.csv").size() == 2);
}

TEST_CASE("thread count defaults to the environment") {
  const fs::path out = work_dir() / "threads";
  setenv("DIKM_THREADS", "2", 1);
  REQUIRE(run("train --data " + toy_dataset().string() + " --metric euclidean --k 3 --epochs 1 --out " + out.string()) == 0);
  unsetenv("DIKM_THREADS");
  RunConfig echoed;
  echoed.apply_file(out / "config.txt");
  CHECK(echoed.threads == 2);
}
