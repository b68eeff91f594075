#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lensless/experiment.hpp"
#include "lensless/plot.hpp"
#include "lensless/synthdigits.hpp"
#include "support/testutil.hpp"

using namespace lensless;

namespace {

LabeledDataset toy_dataset(const std::vector<int>& labels) {
  LabeledDataset ds;
  for (int label : labels) {
    ds.images.emplace_back(1, 1, float(label) / 10.0f);
    ds.labels.push_back(label);
  }
  ds.rebuild_class_set();
  return ds;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t count_occurrences(const std::string& hay, const std::string& needle) {
  size_t count = 0;
  for (size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

ResultRow make_row(const std::string& task, size_t n_train, int repeat, double acc) {
  ResultRow r;
  r.task = task;
  r.n_classes = 2;
  r.n_train = n_train;
  r.repeat = repeat;
  r.seed = 7;
  r.classifier = "knn";
  r.accuracy = acc;
  r.val_accuracy_svm = acc;
  r.val_accuracy_knn = acc;
  r.val_accuracy_tree = acc;
  r.wall_s = 1.25;
  return r;
}

using RowKey = std::tuple<std::string, int, size_t, int, uint64_t, std::string, double, double,
                          double, double>;

RowKey key_without_wall(const ResultRow& r) {
  return {r.task,          r.n_classes,       r.n_train,         r.repeat, r.seed,
          r.classifier,    r.accuracy,        r.val_accuracy_svm, r.val_accuracy_knn,
          r.val_accuracy_tree};
}

}  // namespace

TEST_CASE("cell seeds are distinct and sensitive to every coordinate") {
  std::set<uint64_t> seen;
  for (size_t t = 0; t < 6; ++t) {
    for (size_t s = 0; s < 8; ++s) {
      for (int r = 0; r < 5; ++r) {
        seen.insert(cell_seed(42, t, s, r));
      }
    }
  }
  REQUIRE(seen.size() == 6 * 8 * 5);
  REQUIRE(cell_seed(42, 1, 2, 3) == cell_seed(42, 1, 2, 3));
  REQUIRE(cell_seed(42, 1, 2, 3) != cell_seed(43, 1, 2, 3));
  REQUIRE(cell_seed(42, 1, 2, 3) != cell_seed(42, 2, 2, 3));
  REQUIRE(cell_seed(42, 1, 2, 3) != cell_seed(42, 1, 3, 3));
  REQUIRE(cell_seed(42, 1, 2, 3) != cell_seed(42, 1, 2, 4));
}

TEST_CASE("vocabulary subsets are class-balanced with refill") {
  LabeledDataset ds = toy_dataset({0, 0, 0, 1, 1, 0});

  REQUIRE(detail::vocab_subset_rows(ds, 4, {0, 1}) == std::vector<size_t>{0, 1, 3, 4});
  // odd target: the remainder seat goes to the lower class id
  REQUIRE(detail::vocab_subset_rows(ds, 5, {0, 1}) == std::vector<size_t>{0, 1, 2, 3, 4});
  // target beyond the dataset clamps to everything
  REQUIRE(detail::vocab_subset_rows(ds, 100, {0, 1}) ==
          std::vector<size_t>{0, 1, 2, 3, 4, 5});

  // scarce class: the shortfall refills from the remaining rows in order
  LabeledDataset scarce = toy_dataset({0, 0, 0, 0, 1});
  REQUIRE(detail::vocab_subset_rows(scarce, 4, {0, 1}) == std::vector<size_t>{0, 1, 2, 4});
}

TEST_CASE("boundary-preserving splits never cross the train/test line") {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 2);
  LabeledDataset pool = toy_dataset(labels);
  const size_t boundary = 30;

  Split split = make_experiment_split(pool, boundary, true, {0, 1}, 8, 4, 6, 99);
  REQUIRE(split.train_indices.size() == 8);
  REQUIRE(split.val_indices.size() == 4);
  REQUIRE(split.test_indices.size() == 6);
  for (size_t i : split.train_indices) REQUIRE(i < boundary);
  for (size_t i : split.val_indices) REQUIRE(i < boundary);
  for (size_t i : split.test_indices) REQUIRE(i >= boundary);

  std::set<size_t> all(split.train_indices.begin(), split.train_indices.end());
  all.insert(split.val_indices.begin(), split.val_indices.end());
  all.insert(split.test_indices.begin(), split.test_indices.end());
  REQUIRE(all.size() == 18);

  Split again = make_experiment_split(pool, boundary, true, {0, 1}, 8, 4, 6, 99);
  REQUIRE(again.train_indices == split.train_indices);
  REQUIRE(again.test_indices == split.test_indices);
  Split other = make_experiment_split(pool, boundary, true, {0, 1}, 8, 4, 6, 100);
  REQUIRE(other.train_indices != split.train_indices);

  // pooled mode may mix sides; only the contract of make_split applies
  Split pooled = make_experiment_split(pool, boundary, false, {0, 1}, 8, 4, 6, 99);
  REQUIRE(pooled.train_indices.size() == 8);
  REQUIRE(pooled.test_indices.size() == 6);

  try {
    make_experiment_split(pool, boundary, true, {0, 1}, 28, 4, 6, 99);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Capacity);
    REQUIRE(std::string(e.what()).find("train-side") != std::string::npos);
  }
  try {
    make_experiment_split(pool, boundary, true, {0, 1}, 8, 4, 20, 99);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Capacity);
    REQUIRE(std::string(e.what()).find("test-side") != std::string::npos);
  }
}

TEST_CASE("the descriptor cache computes once and reproducibly") {
  LabeledDataset pool;
  Rng rng(123);
  for (int i = 0; i < 4; ++i) {
    GrayImage img(28, 28);
    for (float& v : img.data) v = float(rng.below(256)) / 255.0f;
    pool.images.push_back(img);
    pool.labels.push_back(i % 2);
  }
  pool.rebuild_class_set();

  CaptureConfig cap;
  SensorModel model = build_sensor_model(cap);
  NoiseConfig noise;

  DescriptorCache cache(pool, model, noise, 12345, FeatureParams{});
  cache.ensure({0, 1, 1, 0}, 1);
  REQUIRE(cache.computed() == 2);
  REQUIRE(cache.descriptors(0).size() == 16);
  REQUIRE_THROWS_AS(cache.descriptors(3), std::logic_error);

  cache.ensure({0}, 1);
  REQUIRE(cache.computed() == 2);
  cache.ensure({2, 3}, 2);
  REQUIRE(cache.computed() == 4);

  DescriptorCache fresh(pool, model, noise, 12345, FeatureParams{});
  fresh.ensure({0, 1, 2, 3}, 3);
  for (size_t i = 0; i < 4; ++i) {
    REQUIRE(fresh.descriptors(i) == cache.descriptors(i));
  }

  DescriptorCache reseeded(pool, model, noise, 54321, FeatureParams{});
  reseeded.ensure({0}, 1);
  REQUIRE(reseeded.descriptors(0) != cache.descriptors(0));
}

TEST_CASE("a small experiment produces the full deterministic grid") {
  testutil::TempDir tmp("experiment");
  auto data_dir = tmp.path() / "data";
  ensure_synth_dataset_dir(data_dir, 987654321, 600, 200);

  ExperimentConfig cfg;
  cfg.dataset_dir = data_dir.string();
  cfg.tasks = {{0, 1}};
  cfg.train_sizes = {24, 48};
  cfg.n_repeats = 2;
  cfg.n_test = 20;
  cfg.val_fraction = 0.25;
  cfg.vocab_k = 8;
  cfg.vocab_subset = 40;
  cfg.master_seed = 7;

  std::vector<ResultRow> rows = run_experiment(cfg, 1);
  REQUIRE(rows.size() == 4);
  for (size_t i = 0; i < rows.size(); ++i) {
    const ResultRow& r = rows[i];
    REQUIRE(r.task == "0-1");
    REQUIRE(r.n_classes == 2);
    REQUIRE((r.n_train == 24 || r.n_train == 48));
    REQUIRE((r.repeat == 0 || r.repeat == 1));
    REQUIRE(r.seed == cell_seed(7, 0, r.n_train == 24 ? 0 : 1, r.repeat));
    REQUIRE(r.accuracy >= 0.0);
    REQUIRE(r.accuracy <= 1.0);
    REQUIRE((r.classifier == "svm-linear" || r.classifier == "svm-rbf" ||
             r.classifier == "knn" || r.classifier == "tree"));
    REQUIRE(r.val_accuracy_svm >= 0.0);
    REQUIRE(r.val_accuracy_knn >= 0.0);
    REQUIRE(r.val_accuracy_tree >= 0.0);
    REQUIRE(r.n_val == (r.n_train == 24 ? 6 : 12));
    REQUIRE(r.n_vocab_images > 0);
    REQUIRE(r.mean_descriptors == 16.0);
    REQUIRE(r.wall_s >= 0.0);
  }

  std::vector<ResultRow> rerun = run_experiment(cfg, 1);
  REQUIRE(rerun.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(key_without_wall(rerun[i]) == key_without_wall(rows[i]));
  }

  ExperimentConfig starved = cfg;
  starved.n_test = 100000;
  try {
    run_experiment(starved, 1);
    FAIL("expected capacity error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Capacity);
    REQUIRE(std::string(e.what()).find("task 0-1") != std::string::npos);
  }
}

TEST_CASE("csv files round trip rows and keep a sorted order") {
  testutil::TempDir tmp("csv");
  auto path = tmp.path() / "results.csv";

  std::vector<ResultRow> rows = {
      make_row("0-4", 200, 0, 0.8),  make_row("0-1", 500, 1, 0.96),
      make_row("0-1", 200, 1, 0.91), make_row("0-1", 200, 0, 0.9512347),
      make_row("0-9", 200, 0, 0.5),
  };
  rows[3].seed = 18446744073709551615ull;  // u64 max survives the trip
  write_results_csv(rows, path);

  std::string text = read_text(path);
  REQUIRE(text.rfind(kCsvHeader, 0) == 0);
  REQUIRE(text.find("0.951235") != std::string::npos);  // %.6f rounding
  REQUIRE(text.find("18446744073709551615") != std::string::npos);
  REQUIRE(text.find("1.250000") != std::string::npos);  // wall_s column

  std::vector<ResultRow> back = read_results_csv(path);
  REQUIRE(back.size() == rows.size());
  // sorted by task, then n_train, then repeat
  REQUIRE(back[0].task == "0-1");
  REQUIRE(back[0].n_train == 200);
  REQUIRE(back[0].repeat == 0);
  REQUIRE(back[1].repeat == 1);
  REQUIRE(back[2].n_train == 500);
  REQUIRE(back[3].task == "0-4");
  REQUIRE(back[4].task == "0-9");
  REQUIRE(back[0].seed == 18446744073709551615ull);
  REQUIRE(back[0].accuracy == Catch::Approx(0.951235).margin(1e-9));
  REQUIRE(back[1].classifier == "knn");
  REQUIRE(back[1].accuracy == Catch::Approx(0.91).margin(5e-7));
}

TEST_CASE("csv reading rejects malformed inputs") {
  testutil::TempDir tmp("csv_bad");
  auto write_file = [&](const std::string& name, const std::string& text) {
    auto p = tmp.path() / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
  };

  auto kind_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
  };

  REQUIRE(kind_of([&] { read_results_csv(tmp.path() / "missing.csv"); }) == ErrorKind::Io);
  REQUIRE(kind_of([&] { read_results_csv(write_file("empty.csv", "")); }) ==
          ErrorKind::Truncation);
  REQUIRE(kind_of([&] { read_results_csv(write_file("hdr.csv", "task,stuff\n")); }) ==
          ErrorKind::Format);

  std::string header = std::string(kCsvHeader) + "\n";
  REQUIRE(kind_of([&] {
            read_results_csv(write_file("short.csv", header + "0-1,2,200,0,7,knn,0.9\n"));
          }) == ErrorKind::Format);
  REQUIRE(kind_of([&] {
            read_results_csv(write_file(
                "value.csv", header + "0-1,2,200,0,7,knn,high,0.9,0.9,0.9,1.0\n"));
          }) == ErrorKind::Format);

  REQUIRE(kind_of([&] { write_results_csv({}, tmp.path() / "out.csv"); }) ==
          ErrorKind::Domain);
}

TEST_CASE("repeat-averaged means and trend notes") {
  std::vector<ResultRow> rows = {
      make_row("0-1", 100, 0, 0.8),  make_row("0-1", 100, 1, 0.9),
      make_row("0-1", 200, 0, 0.95), make_row("0-4", 100, 0, 0.6),
  };
  auto means = mean_accuracies(rows);
  REQUIRE(means[{"0-1", 100}] == Catch::Approx(0.85));
  REQUIRE(means[{"0-1", 200}] == Catch::Approx(0.95));
  REQUIRE(means[{"0-4", 100}] == Catch::Approx(0.6));

  REQUIRE(trend_report(rows).empty());

  rows.push_back(make_row("0-1", 400, 0, 0.7));  // a real dip
  std::vector<std::string> notes = trend_report(rows);
  REQUIRE(notes.size() == 1);
  REQUIRE(notes[0].find("task 0-1") != std::string::npos);
  REQUIRE(notes[0].find("400") != std::string::npos);

  // dips inside the tolerance band stay quiet
  std::vector<ResultRow> mild = {make_row("0-1", 100, 0, 0.90),
                                 make_row("0-1", 200, 0, 0.89)};
  REQUIRE(trend_report(mild, 0.02).empty());
}

TEST_CASE("the svg plot contains a polyline per task and all the furniture") {
  testutil::TempDir tmp("plot");
  auto path = tmp.path() / "accuracy.svg";
  std::vector<ResultRow> rows = {
      make_row("0-1", 100, 0, 0.8), make_row("0-1", 200, 0, 0.9),
      make_row("0-4", 100, 0, 0.5), make_row("0-4", 200, 0, 0.6),
  };
  plot_results(rows, path);

  std::string svg = read_text(path);
  REQUIRE(svg.rfind("<?xml", 0) == 0);
  REQUIRE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
  REQUIRE(count_occurrences(svg, "<polyline") == 2);
  REQUIRE(count_occurrences(svg, "<circle") == 4);
  REQUIRE(svg.find("digits 0-1") != std::string::npos);
  REQUIRE(svg.find("digits 0-4") != std::string::npos);
  REQUIRE(svg.find(">100<") != std::string::npos);
  REQUIRE(svg.find(">200<") != std::string::npos);
  REQUIRE(svg.find("Number of training images") != std::string::npos);
  REQUIRE(svg.find("Classification accuracy") != std::string::npos);
  REQUIRE(svg.find("</svg>") != std::string::npos);

  try {
    plot_results({}, tmp.path() / "none.svg");
    FAIL("expected domain error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Domain);
  }
}
