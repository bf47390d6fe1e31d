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

#include "dikm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dikm/error.hpp"

namespace dikm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(ErrorCode::kInvalidArgument, "bad value for " + key + ": '" + value + "'");
  return out;
}

int parse_positive(const std::string& key, const std::string& value, int min) {
  const int v = parse_number<int>(key, value);
  if (v < min) throw Error(ErrorCode::kInvalidArgument, key + " must be >= " + std::to_string(min));
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::kInvalidArgument, "bad value for " + key + ": '" + value + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "metric",        "k",           "landmarks",         "learning_rate",     "epochs",
      "batch_size",    "blur_sigma",  "stage1_steps",      "stage2_steps",      "refresh_affine",
      "clamp_cells",   "test_stage1_steps", "test_stage2_steps", "change_tolerance", "regularization",
      "seed",          "restarts",    "threads",     "data",              "test_data",         "out"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "metric") {
    metric = parse_metric(value);
  } else if (key == "k") {
    k = parse_positive(key, value, 1);
  } else if (key == "landmarks") {
    landmarks = parse_positive(key, value, 4);
  } else if (key == "learning_rate") {
    const double v = parse_number<double>(key, value);
    if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be positive");
    learning_rate = v;
  } else if (key == "epochs") {
    epochs = parse_positive(key, value, 0);
  } else if (key == "batch_size") {
    batch_size = parse_positive(key, value, 1);
  } else if (key == "blur_sigma") {
    const double v = parse_number<double>(key, value);
    if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, "blur_sigma must be positive");
    blur_sigma = v;
  } else if (key == "stage1_steps") {
    stage1_steps = parse_positive(key, value, 0);
  } else if (key == "stage2_steps") {
    stage2_steps = parse_positive(key, value, 0);
  } else if (key == "refresh_affine") {
    refresh_affine = parse_bool(key, value);
  } else if (key == "clamp_cells") {
    clamp_cells = parse_number<double>(key, value);
  } else if (key == "test_stage1_steps") {
    test_stage1_steps = parse_positive(key, value, 0);
  } else if (key == "test_stage2_steps") {
    test_stage2_steps = parse_positive(key, value, 0);
  } else if (key == "change_tolerance") {
    change_tolerance = parse_number<double>(key, value);
  } else if (key == "regularization") {
    const double v = parse_number<double>(key, value);
    if (!(v >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "regularization must be >= 0");
    regularization = v;
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "restarts") {
    restarts = parse_positive(key, value, 1);
  } else if (key == "threads") {
    threads = parse_positive(key, value, 1);
  } else if (key == "data") {
    data = value;
  } else if (key == "test_data") {
    test_data = value;
  } else if (key == "out") {
    out = value;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

std::string RunConfig::get(const std::string& key) const {
  if (key == "metric") return std::string(metric_name(metric));
  if (key == "k") return std::to_string(k);
  if (key == "landmarks") return std::to_string(landmarks);
  if (key == "learning_rate") return format_double(learning_rate);
  if (key == "epochs") return std::to_string(epochs);
  if (key == "batch_size") return std::to_string(batch_size);
  if (key == "blur_sigma") return format_double(blur_sigma);
  if (key == "stage1_steps") return std::to_string(stage1_steps);
  if (key == "stage2_steps") return std::to_string(stage2_steps);
  if (key == "refresh_affine") return refresh_affine ? "true" : "false";
  if (key == "clamp_cells") return format_double(clamp_cells);
  if (key == "test_stage1_steps") return std::to_string(test_stage1_steps);
  if (key == "test_stage2_steps") return std::to_string(test_stage2_steps);
  if (key == "change_tolerance") return format_double(change_tolerance);
  if (key == "regularization") return format_double(regularization);
  if (key == "seed") return std::to_string(seed);
  if (key == "restarts") return std::to_string(restarts);
  if (key == "threads") return std::to_string(threads);
  if (key == "data") return data;
  if (key == "test_data") return test_data;
  if (key == "out") return out;
  throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

void RunConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kInvalidArgument, "config line " + std::to_string(number) + " lacks '='");
    set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(buf.str());
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& key : keys()) out += key + " = " + get(key) + "\n";
  return out;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.max_epochs = epochs;
  t.change_tolerance = change_tolerance;
  t.batch_size = batch_size;
  t.threads = threads;
  t.restarts = restarts;
  t.fit.learning_rate = learning_rate;
  t.fit.stage1_steps = stage1_steps;
  t.fit.stage2_steps = stage2_steps;
  t.fit.blur_sigma = blur_sigma;
  t.fit.refresh_affine = refresh_affine;
  t.fit.clamp_cells = clamp_cells;
  t.test_fit = t.fit;
  t.test_fit.stage1_steps = test_stage1_steps;
  t.test_fit.stage2_steps = test_stage2_steps;
  return t;
}

}  // namespace dikm
