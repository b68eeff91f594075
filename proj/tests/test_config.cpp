#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "lensless/config.hpp"
#include "support/testutil.hpp"

using namespace lensless;

namespace {

ExperimentConfig parse_lines(const std::string& text) {
  testutil::TempDir tmp("cfg");
  auto path = tmp.path() / "exp.cfg";
  std::ofstream out(path);
  out << text;
  out.close();
  return load_config_file(path);
}

ErrorKind parse_error(const std::string& text) {
  try {
    parse_lines(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("defaults survive an empty config file") {
  ExperimentConfig cfg = parse_lines("# nothing but a comment\n\n");
  REQUIRE(cfg.tasks.size() == 3);
  REQUIRE(cfg.tasks[0] == std::vector<int>{0, 1});
  REQUIRE(cfg.tasks[2].size() == 10);
  REQUIRE(cfg.train_sizes == std::vector<size_t>{200, 500, 1000, 2000, 4000});
  REQUIRE(cfg.vocab_k == 500);
  REQUIRE(cfg.n_repeats == 3);
  REQUIRE(cfg.master_seed == 42);
  REQUIRE(cfg.capture_seed == 12345);
  REQUIRE(cfg.capture.mode == SensorMode::CodedMask);
  REQUIRE(cfg.capture.mask_open_fraction == 0.5);
  REQUIRE(cfg.features.mode == FeatureParams::Mode::Grid);
}

TEST_CASE("a full config round of settings lands in the right fields") {
  ExperimentConfig cfg = parse_lines(
      "dataset.dir = /tmp/mnist\n"
      "dataset.preserve_boundary = true\n"
      "capture.scene_width = 32\n"
      "capture.scene_height = 24\n"
      "capture.sensor_width = 16\n"
      "capture.sensor_height = 12\n"
      "capture.distance_mm = 200\n"
      "capture.mode = geometric\n"
      "capture.mask_seed = 99\n"
      "capture.mask_open_fraction = 0.4\n"
      "capture.n_avg = 4\n"
      "capture.bit_depth = 10\n"
      "capture.exposure_scale = 2.5\n"
      "capture.seed = 777\n"
      "noise.read_sigma = 0.01\n"
      "noise.shot_scale = 5000\n"
      "noise.enabled = false\n"
      "features.mode = detector\n"
      "features.detector_threshold = 2e-4\n"
      "features.detector_octaves = 3\n"
      "features.upright = no\n"
      "vocab.k = 40\n"
      "vocab.subset = 600\n"
      "vocab.max_iters = 25\n"
      "vocab.rel_tol = 1e-4\n"
      "classifier.svm_c = 4.5\n"
      "classifier.rbf_gamma = 0.125\n"
      "classifier.knn_k = 9\n"
      "classifier.tree_max_depth = 12\n"
      "classifier.tree_min_leaf = 2\n"
      "experiment.tasks = 0-1; 2,4,6 ; 0-9\n"
      "experiment.train_sizes = 40, 80, 160\n"
      "experiment.val_fraction = 0.25\n"
      "experiment.n_test = 120\n"
      "experiment.n_repeats = 2\n"
      "experiment.master_seed = 4242\n");

  REQUIRE(cfg.dataset_dir == "/tmp/mnist");
  REQUIRE(cfg.preserve_boundary);
  REQUIRE(cfg.capture.scene_width == 32);
  REQUIRE(cfg.capture.sensor_height == 12);
  REQUIRE(cfg.capture.distance == 200.0);
  REQUIRE(cfg.capture.mode == SensorMode::Geometric);
  REQUIRE(cfg.capture.mask_seed == 99);
  REQUIRE(cfg.capture.mask_open_fraction == 0.4);
  REQUIRE(cfg.capture.n_avg == 4);
  REQUIRE(cfg.capture.bit_depth == 10);
  REQUIRE_FALSE(cfg.capture.exposure_auto);
  REQUIRE(cfg.capture.exposure_scale == 2.5);
  REQUIRE(cfg.capture_seed == 777);
  REQUIRE(cfg.noise.read_sigma == 0.01);
  REQUIRE(cfg.noise.shot_scale == 5000.0);
  REQUIRE_FALSE(cfg.noise.enabled);
  REQUIRE(cfg.features.mode == FeatureParams::Mode::Detector);
  REQUIRE(cfg.features.detector.threshold == 2e-4);
  REQUIRE(cfg.features.detector.octaves == 3);
  REQUIRE_FALSE(cfg.features.upright);
  REQUIRE(cfg.vocab_k == 40);
  REQUIRE(cfg.vocab_subset == 600);
  REQUIRE(cfg.vocab_max_iters == 25);
  REQUIRE(cfg.vocab_rel_tol == 1e-4);
  REQUIRE(cfg.roster.svm_c == 4.5);
  REQUIRE(cfg.roster.rbf_gamma == 0.125);
  REQUIRE(cfg.roster.knn_k == 9);
  REQUIRE(cfg.roster.tree_max_depth == 12);
  REQUIRE(cfg.roster.tree_min_leaf == 2);
  REQUIRE(cfg.tasks ==
          std::vector<std::vector<int>>{{0, 1}, {2, 4, 6}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});
  REQUIRE(cfg.train_sizes == std::vector<size_t>{40, 80, 160});
  REQUIRE(cfg.val_fraction == 0.25);
  REQUIRE(cfg.n_test == 120);
  REQUIRE(cfg.n_repeats == 2);
  REQUIRE(cfg.master_seed == 4242);
}

TEST_CASE("auto values reset to the computed defaults") {
  ExperimentConfig cfg = parse_lines(
      "capture.exposure_scale = auto\n"
      "classifier.rbf_gamma = auto\n"
      "experiment.n_val = auto\n");
  REQUIRE(cfg.capture.exposure_auto);
  REQUIRE(cfg.roster.rbf_gamma == 0.0);
  REQUIRE(cfg.n_val_fixed == 0);

  ExperimentConfig fixed = parse_lines("experiment.n_val = 64\n");
  REQUIRE(fixed.n_val_fixed == 64);
}

TEST_CASE("unknown keys and malformed lines are config errors") {
  REQUIRE(parse_error("capture.telescope = 3\n") == ErrorKind::Config);
  REQUIRE(parse_error("just words\n") == ErrorKind::Config);
  REQUIRE(parse_error("capture.n_avg = many\n") == ErrorKind::Config);
  REQUIRE(parse_error("noise.enabled = maybe\n") == ErrorKind::Config);
  REQUIRE(parse_error("capture.mode = pinhole\n") == ErrorKind::Config);
  REQUIRE(parse_error("features.mode = dense\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.train_sizes = \n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.train_sizes = 100, -5\n") == ErrorKind::Config);

  try {
    parse_lines("capture.bit_depth = ten\n");
    FAIL("expected config error");
  } catch (const Error& e) {
    // line number and key name make the typo findable
    REQUIRE(std::string(e.what()).find(":1:") != std::string::npos);
    REQUIRE(std::string(e.what()).find("capture.bit_depth") != std::string::npos);
  }
}

TEST_CASE("task syntax covers ranges, lists, and rejects bad ids") {
  ExperimentConfig cfg = parse_lines("experiment.tasks = 3,1,2;7-9\n");
  REQUIRE(cfg.tasks == std::vector<std::vector<int>>{{1, 2, 3}, {7, 8, 9}});

  ExperimentConfig dedup = parse_lines("experiment.tasks = 1,1,2-3,3\n");
  REQUIRE(dedup.tasks == std::vector<std::vector<int>>{{1, 2, 3}});

  REQUIRE(parse_error("experiment.tasks = 5-2\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.tasks = 0-10\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.tasks = ;\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.tasks = a-b\n") == ErrorKind::Config);
}

TEST_CASE("cross-field validation rejects inconsistent settings") {
  REQUIRE(parse_error("experiment.train_sizes = 100, 100\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.train_sizes = 200, 100\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.n_test = 0\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.n_repeats = 0\n") == ErrorKind::Config);
  REQUIRE(parse_error("vocab.k = 1\n") == ErrorKind::Config);
  REQUIRE(parse_error("experiment.val_fraction = 1.5\n") == ErrorKind::Config);
  REQUIRE(parse_error("features.grid_step = 0\n") == ErrorKind::Config);
  REQUIRE(parse_error("capture.bit_depth = 0\n") == ErrorKind::Config);
  REQUIRE(parse_error("capture.mask_open_fraction = 1.5\n") == ErrorKind::Config);

  // a fixed validation count makes val_fraction irrelevant
  ExperimentConfig ok = parse_lines(
      "experiment.val_fraction = 2.0\n"
      "experiment.n_val = 50\n");
  REQUIRE(ok.n_val_fixed == 50);
}

TEST_CASE("missing config files are reported as config errors") {
  try {
    load_config_file("/nonexistent/lensless.cfg");
    FAIL("expected config error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("task labels compress contiguous ranges") {
  REQUIRE(task_label({0, 1}) == "0-1");
  REQUIRE(task_label({0, 1, 2, 3, 4}) == "0-4");
  REQUIRE(task_label({2, 4, 6}) == "2,4,6");
  REQUIRE(task_label({7}) == "7");
}

TEST_CASE("dataset dir resolution falls back to the environment") {
  const char* previous = getenv("LENSLESS_DATA_DIR");
  std::string saved = previous ? previous : "";

  ExperimentConfig cfg;
  unsetenv("LENSLESS_DATA_DIR");
  REQUIRE(cfg.resolved_dataset_dir() == "data");
  setenv("LENSLESS_DATA_DIR", "/somewhere/else", 1);
  REQUIRE(cfg.resolved_dataset_dir() == "/somewhere/else");
  cfg.dataset_dir = "explicit";
  REQUIRE(cfg.resolved_dataset_dir() == "explicit");

  if (previous) setenv("LENSLESS_DATA_DIR", saved.c_str(), 1);
  else unsetenv("LENSLESS_DATA_DIR");
}
