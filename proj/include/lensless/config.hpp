#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lensless/classifiers.hpp"
#include "lensless/errors.hpp"
#include "lensless/optics.hpp"
#include "lensless/surf.hpp"

namespace lensless {

struct ExperimentConfig {
  std::string dataset_dir;  // empty: $LENSLESS_DATA_DIR, then "./data"
  bool preserve_boundary = false;

  CaptureConfig capture;
  NoiseConfig noise;
  uint64_t capture_seed = 12345;  // shared by all cells so frames are reusable

  FeatureParams features;

  size_t vocab_k = 500;
  size_t vocab_subset = 2500;
  int vocab_max_iters = 50;
  double vocab_rel_tol = 1e-3;

  RosterParams roster;

  std::vector<std::vector<int>> tasks = {{0, 1}, {0, 1, 2, 3, 4}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}};
  std::vector<size_t> train_sizes = {200, 500, 1000, 2000, 4000};
  double val_fraction = 0.2;  // n_val = round(val_fraction * n_train) ...
  size_t n_val_fixed = 0;     // ... unless this is nonzero
  size_t n_test = 500;
  int n_repeats = 3;
  uint64_t master_seed = 42;

  std::string resolved_dataset_dir() const {
    if (!dataset_dir.empty()) return dataset_dir;
    if (const char* env = std::getenv("LENSLESS_DATA_DIR")) {
      if (*env) return env;
    }
    return "data";
  }
};

inline std::string task_label(const std::vector<int>& classes) {
  // Contiguous ranges print as "0-4", anything else as a comma list.
  bool contiguous = true;
  for (size_t i = 1; i < classes.size(); ++i) {
    if (classes[i] != classes[i - 1] + 1) contiguous = false;
  }
  if (contiguous && classes.size() >= 2) {
    return std::to_string(classes.front()) + "-" + std::to_string(classes.back());
  }
  std::string out;
  for (size_t i = 0; i < classes.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(classes[i]);
  }
  return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::Config, key + ": expected a boolean, got '" + v + "'");
}

inline long long parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, key + ": expected an integer, got '" + v + "'");
  }
}

inline uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, key + ": expected a non-negative integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, key + ": expected a number, got '" + v + "'");
  }
}

inline std::vector<double> parse_double_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(parse_double(trim(tok), key));
  if (out.empty()) fail(ErrorKind::Config, key + ": empty list");
  return out;
}

inline std::vector<size_t> parse_size_list(const std::string& v, const std::string& key) {
  std::vector<size_t> out;
  std::istringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    long long n = parse_int(trim(tok), key);
    if (n < 0) fail(ErrorKind::Config, key + ": negative count");
    out.push_back(size_t(n));
  }
  if (out.empty()) fail(ErrorKind::Config, key + ": empty list");
  return out;
}

// Task syntax: semicolon-separated tasks; each task is a comma list of
// digits and/or a-b ranges, e.g. "0-1;0-4;0-9" or "1,3,7".
inline std::vector<std::vector<int>> parse_tasks(const std::string& v, const std::string& key) {
  std::vector<std::vector<int>> tasks;
  std::istringstream tasks_in(v);
  std::string task_tok;
  while (std::getline(tasks_in, task_tok, ';')) {
    std::vector<int> classes;
    std::istringstream items(trim(task_tok));
    std::string item;
    while (std::getline(items, item, ',')) {
      item = trim(item);
      auto dash = item.find('-');
      if (dash != std::string::npos && dash > 0) {
        int a = int(parse_int(item.substr(0, dash), key));
        int b = int(parse_int(item.substr(dash + 1), key));
        if (a > b) fail(ErrorKind::Config, key + ": descending range '" + item + "'");
        for (int c = a; c <= b; ++c) classes.push_back(c);
      } else if (!item.empty()) {
        classes.push_back(int(parse_int(item, key)));
      }
    }
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    for (int c : classes) {
      if (c < 0 || c > 9) fail(ErrorKind::Config, key + ": class id outside [0,9]");
    }
    if (classes.empty()) fail(ErrorKind::Config, key + ": empty task");
    tasks.push_back(std::move(classes));
  }
  if (tasks.empty()) fail(ErrorKind::Config, key + ": no tasks");
  return tasks;
}

}  // namespace detail

// Applies one `key = value` setting. Unknown keys are hard errors so a typo
// in a physics parameter cannot silently fall back to a default.
inline void apply_config_key(ExperimentConfig& cfg, const std::string& key,
                             const std::string& value) {
  using namespace detail;
  auto& cap = cfg.capture;
  if (key == "dataset.dir") cfg.dataset_dir = value;
  else if (key == "dataset.preserve_boundary") cfg.preserve_boundary = parse_bool(value, key);
  else if (key == "capture.scene_width") cap.scene_width = int(parse_int(value, key));
  else if (key == "capture.scene_height") cap.scene_height = int(parse_int(value, key));
  else if (key == "capture.sensor_width") cap.sensor_width = int(parse_int(value, key));
  else if (key == "capture.sensor_height") cap.sensor_height = int(parse_int(value, key));
  else if (key == "capture.distance_mm") cap.distance = parse_double(value, key);
  else if (key == "capture.lcd_pitch_mm") cap.lcd_pitch = parse_double(value, key);
  else if (key == "capture.sensor_pitch_mm") cap.sensor_pitch = parse_double(value, key);
  else if (key == "capture.n_avg") cap.n_avg = int(parse_int(value, key));
  else if (key == "capture.exposure_scale") {
    if (value == "auto") {
      cap.exposure_auto = true;
    } else {
      cap.exposure_auto = false;
      cap.exposure_scale = parse_double(value, key);
    }
  } else if (key == "capture.bit_depth") cap.bit_depth = int(parse_int(value, key));
  else if (key == "capture.mode") {
    if (value == "geometric") cap.mode = SensorMode::Geometric;
    else if (value == "coded-mask") cap.mode = SensorMode::CodedMask;
    else fail(ErrorKind::Config, "capture.mode: expected geometric or coded-mask");
  } else if (key == "capture.mask_seed") cap.mask_seed = parse_u64(value, key);
  else if (key == "capture.mask_open_fraction") cap.mask_open_fraction = parse_double(value, key);
  else if (key == "capture.fill_fraction") cap.fill_fraction = parse_double(value, key);
  else if (key == "capture.memory_budget_mb") {
    cap.memory_budget_bytes = size_t(parse_int(value, key)) << 20;
  } else if (key == "capture.seed") cfg.capture_seed = parse_u64(value, key);
  else if (key == "noise.read_sigma") cfg.noise.read_sigma = parse_double(value, key);
  else if (key == "noise.shot_scale") cfg.noise.shot_scale = parse_double(value, key);
  else if (key == "noise.enabled") cfg.noise.enabled = parse_bool(value, key);
  else if (key == "features.mode") {
    if (value == "grid") cfg.features.mode = FeatureParams::Mode::Grid;
    else if (value == "detector") cfg.features.mode = FeatureParams::Mode::Detector;
    else fail(ErrorKind::Config, "features.mode: expected grid or detector");
  } else if (key == "features.grid_step") cfg.features.grid_step = int(parse_int(value, key));
  else if (key == "features.grid_scales") cfg.features.grid_scales = parse_double_list(value, key);
  else if (key == "features.upright") cfg.features.upright = parse_bool(value, key);
  else if (key == "features.detector_threshold") {
    cfg.features.detector.threshold = parse_double(value, key);
  } else if (key == "features.detector_octaves") {
    cfg.features.detector.octaves = int(parse_int(value, key));
  } else if (key == "vocab.k") cfg.vocab_k = size_t(parse_int(value, key));
  else if (key == "vocab.subset") cfg.vocab_subset = size_t(parse_int(value, key));
  else if (key == "vocab.max_iters") cfg.vocab_max_iters = int(parse_int(value, key));
  else if (key == "vocab.rel_tol") cfg.vocab_rel_tol = parse_double(value, key);
  else if (key == "classifier.svm_c") cfg.roster.svm_c = parse_double(value, key);
  else if (key == "classifier.rbf_gamma") {
    cfg.roster.rbf_gamma = value == "auto" ? 0.0 : parse_double(value, key);
  } else if (key == "classifier.svm_linear") cfg.roster.svm_linear = parse_bool(value, key);
  else if (key == "classifier.svm_rbf") cfg.roster.svm_rbf = parse_bool(value, key);
  else if (key == "classifier.knn_k") cfg.roster.knn_k = int(parse_int(value, key));
  else if (key == "classifier.tree_max_depth") {
    cfg.roster.tree_max_depth = int(parse_int(value, key));
  } else if (key == "classifier.tree_min_leaf") {
    cfg.roster.tree_min_leaf = int(parse_int(value, key));
  } else if (key == "experiment.tasks") cfg.tasks = parse_tasks(value, key);
  else if (key == "experiment.train_sizes") cfg.train_sizes = parse_size_list(value, key);
  else if (key == "experiment.val_fraction") cfg.val_fraction = parse_double(value, key);
  else if (key == "experiment.n_val") {
    if (value == "auto") cfg.n_val_fixed = 0;
    else cfg.n_val_fixed = size_t(parse_int(value, key));
  } else if (key == "experiment.n_test") cfg.n_test = size_t(parse_int(value, key));
  else if (key == "experiment.n_repeats") cfg.n_repeats = int(parse_int(value, key));
  else if (key == "experiment.master_seed") cfg.master_seed = parse_u64(value, key);
  else fail(ErrorKind::Config, "unknown config key: " + key);
}

inline void validate_experiment_config(const ExperimentConfig& cfg) {
  validate_config(cfg.capture);
  validate_noise(cfg.noise);
  if (cfg.tasks.empty()) fail(ErrorKind::Config, "experiment.tasks must be nonempty");
  if (cfg.train_sizes.empty()) fail(ErrorKind::Config, "experiment.train_sizes must be nonempty");
  for (size_t i = 1; i < cfg.train_sizes.size(); ++i) {
    if (cfg.train_sizes[i] <= cfg.train_sizes[i - 1]) {
      fail(ErrorKind::Config, "experiment.train_sizes must be strictly increasing");
    }
  }
  if (cfg.n_test < 1) fail(ErrorKind::Config, "experiment.n_test must be >= 1");
  if (cfg.n_repeats < 1) fail(ErrorKind::Config, "experiment.n_repeats must be >= 1");
  if (cfg.vocab_k < 2) fail(ErrorKind::Config, "vocab.k must be >= 2");
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) && cfg.n_val_fixed == 0) {
    fail(ErrorKind::Config, "experiment.val_fraction must be in (0,1)");
  }
  if (cfg.features.grid_step < 1) fail(ErrorKind::Config, "features.grid_step must be >= 1");
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open config file: " + path.string());
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config,
           path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    try {
      apply_config_key(cfg, key, value);
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_experiment_config(cfg);
  return cfg;
}

}  // namespace lensless
