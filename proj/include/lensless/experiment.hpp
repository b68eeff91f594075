#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lensless/bovw.hpp"
#include "lensless/classifiers.hpp"
#include "lensless/config.hpp"
#include "lensless/errors.hpp"
#include "lensless/mnist.hpp"
#include "lensless/optics.hpp"
#include "lensless/parallel.hpp"
#include "lensless/rng.hpp"
#include "lensless/surf.hpp"

namespace lensless {

struct ResultRow {
  std::string task;
  int n_classes = 0;
  size_t n_train = 0;
  int repeat = 0;
  uint64_t seed = 0;
  std::string classifier;  // selected roster entry
  double accuracy = 0.0;   // test accuracy of the selected model
  double val_accuracy_svm = 0.0;  // best SVM variant on validation
  double val_accuracy_knn = 0.0;
  double val_accuracy_tree = 0.0;
  double wall_s = 0.0;
  // Logged context that stays out of the CSV.
  size_t n_val = 0;
  size_t n_vocab_images = 0;
  double mean_descriptors = 0.0;
};

namespace detail {

inline void assert_disjoint(const std::vector<size_t>& a, const std::vector<size_t>& b,
                            const char* what) {
  std::set<size_t> sa(a.begin(), a.end());
  for (size_t i : b) {
    if (sa.count(i)) {
      throw std::logic_error(std::string("split leakage: ") + what);
    }
  }
}

// Class-balanced subset of the (already shuffled) training partition: each
// class gets an equal quota, remainders go to the lower class ids, and any
// shortfall from scarce classes is refilled from the remaining images in
// partition order.
inline std::vector<size_t> vocab_subset_rows(const LabeledDataset& train, size_t target,
                                             const std::vector<int>& class_subset) {
  target = std::min(target, train.size());
  size_t k = class_subset.size();
  std::map<int, size_t> quota;
  for (size_t i = 0; i < k; ++i) {
    quota[class_subset[i]] = target / k + (i < target % k ? 1 : 0);
  }
  std::vector<size_t> rows;
  std::vector<char> taken(train.size(), 0);
  std::map<int, size_t> have;
  for (size_t i = 0; i < train.size() && rows.size() < target; ++i) {
    int c = train.labels[i];
    if (have[c] < quota[c]) {
      ++have[c];
      taken[i] = 1;
      rows.push_back(i);
    }
  }
  for (size_t i = 0; i < train.size() && rows.size() < target; ++i) {
    if (!taken[i]) rows.push_back(i);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace detail

// Lazily simulates and describes pool images; descriptors are cached by pool
// index so cells reuse work. The capture seed is a pure function of the pool
// index, which is what makes the cache valid across cells.
class DescriptorCache {
 public:
  DescriptorCache(const LabeledDataset& pool, const SensorModel& model, const NoiseConfig& noise,
                  uint64_t capture_seed, const FeatureParams& features)
      : pool_(pool),
        model_(model),
        noise_(noise),
        capture_seed_(capture_seed),
        features_(features),
        cache_(pool.size()),
        ready_(pool.size(), 0) {}

  void ensure(const std::vector<size_t>& indices, unsigned threads) {
    std::vector<size_t> todo;
    for (size_t i : indices) {
      if (!ready_[i]) todo.push_back(i);
    }
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    parallel_for(todo.size(), threads, [&](size_t t) {
      size_t i = todo[t];
      GrayImage frame = capture_source_image(pool_.images[i], model_, noise_,
                                             image_capture_seed(capture_seed_, i));
      cache_[i] = extract_features(frame, features_).descriptors;
      ready_[i] = 1;
    });
  }

  const std::vector<Descriptor>& descriptors(size_t index) const {
    if (!ready_[index]) throw std::logic_error("descriptor cache miss");
    return cache_[index];
  }

  size_t computed() const {
    size_t n = 0;
    for (char r : ready_) n += size_t(r);
    return n;
  }

 private:
  const LabeledDataset& pool_;
  const SensorModel& model_;
  NoiseConfig noise_;
  uint64_t capture_seed_;
  FeatureParams features_;
  std::vector<std::vector<Descriptor>> cache_;
  std::vector<char> ready_;
};

inline uint64_t cell_seed(uint64_t master_seed, size_t task_index, size_t size_index,
                          int repeat) {
  return mix64(master_seed, uint64_t(task_index),
               (uint64_t(size_index) << 32) | uint64_t(uint32_t(repeat)));
}

// Splits honoring the optional MNIST train/test boundary: in pooled mode one
// seeded shuffle over the class-filtered pool; in boundary mode train/val
// draw from below the boundary and test from above it, independently
// shuffled. Indices refer to the pooled dataset either way.
inline Split make_experiment_split(const LabeledDataset& pool, size_t boundary,
                                   bool preserve_boundary, const std::vector<int>& classes,
                                   size_t n_train, size_t n_val, size_t n_test, uint64_t seed) {
  if (!preserve_boundary) {
    return make_split(pool, classes, n_train, n_val, n_test, seed);
  }
  auto filter = [&](size_t lo, size_t hi) {
    std::vector<size_t> out;
    for (size_t i = lo; i < hi; ++i) {
      if (std::find(classes.begin(), classes.end(), pool.labels[i]) != classes.end()) {
        out.push_back(i);
      }
    }
    return out;
  };
  std::vector<size_t> train_pool = filter(0, boundary);
  std::vector<size_t> test_pool = filter(boundary, pool.size());
  if (train_pool.size() < n_train + n_val) {
    fail(ErrorKind::Capacity, "boundary split needs " + std::to_string(n_train + n_val) +
                                  " train-side items, have " + std::to_string(train_pool.size()));
  }
  if (test_pool.size() < n_test) {
    fail(ErrorKind::Capacity, "boundary split needs " + std::to_string(n_test) +
                                  " test-side items, have " + std::to_string(test_pool.size()));
  }
  Rng rng_train(mix64(seed, 1));
  Rng rng_test(mix64(seed, 2));
  rng_train.shuffle(train_pool);
  rng_test.shuffle(test_pool);

  Split split;
  split.seed = seed;
  split.class_subset = classes;
  auto take = [&](const std::vector<size_t>& src, size_t begin, size_t count,
                  LabeledDataset& part, std::vector<size_t>& idx) {
    for (size_t i = begin; i < begin + count; ++i) {
      part.images.push_back(pool.images[src[i]]);
      part.labels.push_back(pool.labels[src[i]]);
      idx.push_back(src[i]);
    }
    part.rebuild_class_set();
  };
  take(train_pool, 0, n_train, split.train, split.train_indices);
  take(train_pool, n_train, n_val, split.validation, split.val_indices);
  take(test_pool, 0, n_test, split.test, split.test_indices);
  return split;
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, unsigned threads = 0,
                                             std::ostream* log = nullptr) {
  validate_experiment_config(cfg);
  MnistDir mnist = load_mnist_dir(cfg.resolved_dataset_dir());
  size_t boundary = mnist.train.size();
  LabeledDataset pool = mnist.pooled();
  if (log) {
    *log << "pool: " << pool.size() << " images, boundary at " << boundary << "\n";
  }

  SensorModel model = build_sensor_model(cfg.capture);
  DescriptorCache cache(pool, model, cfg.noise, cfg.capture_seed, cfg.features);

  std::vector<ResultRow> rows;
  for (size_t t = 0; t < cfg.tasks.size(); ++t) {
    const std::vector<int>& classes = cfg.tasks[t];
    std::string label = task_label(classes);
    for (size_t s = 0; s < cfg.train_sizes.size(); ++s) {
      size_t n_train = cfg.train_sizes[s];
      size_t n_val = cfg.n_val_fixed > 0
                         ? cfg.n_val_fixed
                         : size_t(std::lround(cfg.val_fraction * double(n_train)));
      for (int r = 0; r < cfg.n_repeats; ++r) {
        auto started = std::chrono::steady_clock::now();
        uint64_t seed = cell_seed(cfg.master_seed, t, s, r);

        Split split;
        try {
          split = make_experiment_split(pool, boundary, cfg.preserve_boundary, classes, n_train,
                                        n_val, cfg.n_test, seed);
        } catch (const Error& e) {
          fail(e.kind(), "task " + label + ", n_train " + std::to_string(n_train) + ": " +
                             e.what());
        }
        detail::assert_disjoint(split.train_indices, split.test_indices, "train vs test");
        detail::assert_disjoint(split.val_indices, split.test_indices, "validation vs test");
        detail::assert_disjoint(split.train_indices, split.val_indices, "train vs validation");

        std::vector<size_t> needed = split.train_indices;
        needed.insert(needed.end(), split.val_indices.begin(), split.val_indices.end());
        needed.insert(needed.end(), split.test_indices.begin(), split.test_indices.end());
        cache.ensure(needed, threads);

        // Vocabulary from a class-balanced subset of the training partition.
        std::vector<size_t> vocab_rows =
            detail::vocab_subset_rows(split.train, cfg.vocab_subset, classes);
        std::vector<Descriptor> vocab_desc;
        size_t desc_total = 0;
        for (size_t row : vocab_rows) {
          const auto& d = cache.descriptors(split.train_indices[row]);
          vocab_desc.insert(vocab_desc.end(), d.begin(), d.end());
        }
        Vocabulary vocab;
        try {
          vocab = kmeans_fit(vocab_desc, cfg.vocab_k, mix64(seed, 0x766f6361), // "voca"
                             cfg.vocab_max_iters, cfg.vocab_rel_tol);
        } catch (const Error& e) {
          fail(e.kind(), "task " + label + ", n_train " + std::to_string(n_train) +
                             ": vocabulary: " + e.what());
        }
        vocab.meta.n_images_used = vocab_rows.size();

        auto encode_set = [&](const std::vector<size_t>& indices) {
          std::vector<std::vector<double>> bows(indices.size());
          parallel_for(indices.size(), threads, [&](size_t i) {
            bows[i] = encode(vocab, cache.descriptors(indices[i]));
          });
          for (size_t i = 0; i < indices.size(); ++i) {
            desc_total += cache.descriptors(indices[i]).size();
          }
          return FeatureMatrix::from_rows(bows);
        };
        FeatureMatrix X_train = encode_set(split.train_indices);
        FeatureMatrix X_val = encode_set(split.val_indices);
        FeatureMatrix X_test = encode_set(split.test_indices);

        std::vector<TrainedModel> roster =
            train_roster(X_train, split.train.labels, cfg.roster, threads);
        size_t best = select_best(roster, X_val, split.validation.labels);

        ResultRow row;
        row.task = label;
        row.n_classes = int(classes.size());
        row.n_train = n_train;
        row.repeat = r;
        row.seed = seed;
        row.classifier = roster[best].name;
        row.accuracy = evaluate_accuracy(roster[best], X_test, split.test.labels);
        for (const TrainedModel& m : roster) {
          if (m.kind == ModelKind::SvmOvo) {
            row.val_accuracy_svm = std::max(row.val_accuracy_svm, m.val_accuracy);
          } else if (m.kind == ModelKind::Knn) {
            row.val_accuracy_knn = m.val_accuracy;
          } else {
            row.val_accuracy_tree = m.val_accuracy;
          }
        }
        row.n_val = n_val;
        row.n_vocab_images = vocab_rows.size();
        size_t encoded = split.train_indices.size() + split.val_indices.size() +
                         split.test_indices.size();
        row.mean_descriptors = encoded > 0 ? double(desc_total) / double(encoded) : 0.0;
        row.wall_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (log) {
          *log << "cell task=" << label << " n_train=" << n_train << " repeat=" << r << " -> "
               << row.classifier << " test_acc=" << row.accuracy << " (val svm/knn/tree "
               << row.val_accuracy_svm << "/" << row.val_accuracy_knn << "/"
               << row.val_accuracy_tree << ") " << row.wall_s << "s\n";
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// -------------------------------------------------------------------------
// CSV output (deterministic bytes) and input
// -------------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "task,n_classes,n_train,repeat,seed,classifier,accuracy,val_accuracy_svm,"
    "val_accuracy_knn,val_accuracy_tree,wall_s";

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.task != b.task) return a.task < b.task;
    if (a.n_train != b.n_train) return a.n_train < b.n_train;
    return a.repeat < b.repeat;
  });
}

inline void write_results_csv(std::vector<ResultRow> rows, const std::filesystem::path& path) {
  if (rows.empty()) fail(ErrorKind::Domain, "no result rows to write");
  sort_rows(rows);
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes everywhere
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out << kCsvHeader << "\n";
  char buf[512];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%d,%llu,%s,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.task.c_str(), r.n_classes, r.n_train, r.repeat,
                  (unsigned long long)r.seed, r.classifier.c_str(), r.accuracy,
                  r.val_accuracy_svm, r.val_accuracy_knn, r.val_accuracy_tree, r.wall_s);
    out << buf;
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

inline std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Truncation, "empty results file");
  if (line != kCsvHeader) fail(ErrorKind::Format, "unexpected CSV header in " + path.string());
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 11) fail(ErrorKind::Format, "bad CSV row: " + line);
    ResultRow r;
    try {
      r.task = f[0];
      r.n_classes = std::stoi(f[1]);
      r.n_train = size_t(std::stoull(f[2]));
      r.repeat = std::stoi(f[3]);
      r.seed = std::stoull(f[4]);
      r.classifier = f[5];
      r.accuracy = std::stod(f[6]);
      r.val_accuracy_svm = std::stod(f[7]);
      r.val_accuracy_knn = std::stod(f[8]);
      r.val_accuracy_tree = std::stod(f[9]);
      r.wall_s = std::stod(f[10]);
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "bad CSV value in row: " + line);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// Mean accuracy per (task, n_train), repeat-averaged, e.g. for plotting and
// trend checks.
inline std::map<std::pair<std::string, size_t>, double> mean_accuracies(
    const std::vector<ResultRow>& rows) {
  std::map<std::pair<std::string, size_t>, std::pair<double, size_t>> acc;
  for (const ResultRow& r : rows) {
    auto& slot = acc[{r.task, r.n_train}];
    slot.first += r.accuracy;
    slot.second += 1;
  }
  std::map<std::pair<std::string, size_t>, double> out;
  for (const auto& [key, sum_count] : acc) {
    out[key] = sum_count.first / double(sum_count.second);
  }
  return out;
}

// Soft qualitative checks mirroring the expected curve shape; returns one
// message per deviation rather than failing.
inline std::vector<std::string> trend_report(const std::vector<ResultRow>& rows,
                                             double tolerance = 0.02) {
  auto means = mean_accuracies(rows);
  std::map<std::string, std::vector<std::pair<size_t, double>>> curves;
  for (const auto& [key, mean] : means) curves[key.first].emplace_back(key.second, mean);
  std::vector<std::string> notes;
  char buf[256];
  for (auto& [task, curve] : curves) {
    std::sort(curve.begin(), curve.end());
    for (size_t i = 1; i < curve.size(); ++i) {
      if (curve[i].second < curve[i - 1].second - tolerance) {
        std::snprintf(buf, sizeof(buf),
                      "task %s: mean accuracy drops %.4f -> %.4f between n_train %zu and %zu",
                      task.c_str(), curve[i - 1].second, curve[i].second, curve[i - 1].first,
                      curve[i].first);
        notes.push_back(buf);
      }
    }
  }
  return notes;
}

}  // namespace lensless
