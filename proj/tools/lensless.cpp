// Command-line front end for the lensless classification pipeline.
//
// Exit codes: 0 success, 2 configuration/usage errors, 3 data errors
// (unreadable/corrupt files, capacity shortfalls, shape mismatches).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lensless/bovw.hpp"
#include "lensless/bundle.hpp"
#include "lensless/classifiers.hpp"
#include "lensless/config.hpp"
#include "lensless/errors.hpp"
#include "lensless/experiment.hpp"
#include "lensless/mnist.hpp"
#include "lensless/optics.hpp"
#include "lensless/plot.hpp"
#include "lensless/surf.hpp"
#include "lensless/synthdigits.hpp"

namespace fs = std::filesystem;
using namespace lensless;

namespace {

FeatureMatrix encode_images(const LabeledDataset& frames, const Vocabulary& vocab,
                            const FeatureParams& features, unsigned threads) {
  std::vector<std::vector<double>> rows(frames.size());
  parallel_for(frames.size(), threads, [&](size_t i) {
    rows[i] = encode(vocab, extract_features(frames.images[i], features).descriptors);
  });
  return FeatureMatrix::from_rows(rows);
}

int cmd_synth(const ExperimentConfig& cfg, const std::string& dir, size_t n_train, size_t n_test,
              uint64_t seed, bool force) {
  fs::path target = dir.empty() ? fs::path(cfg.resolved_dataset_dir()) : fs::path(dir);
  if (force) {
    for (const char* name : {"train-images", "train-labels", "t10k-images", "t10k-labels"}) {
      fs::remove(target / name);
    }
  }
  ensure_synth_dataset_dir(target, seed, n_train, n_test);
  std::cout << "dataset at " << target.string() << " (" << n_train << " train + " << n_test
            << " test)\n";
  return 0;
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, const std::string& source,
                 size_t start, size_t count, unsigned threads) {
  MnistDir mnist = load_mnist_dir(cfg.resolved_dataset_dir());
  LabeledDataset pool = source == "train"  ? std::move(mnist.train)
                        : source == "test" ? std::move(mnist.test)
                                           : mnist.pooled();
  if (start >= pool.size() || count == 0) {
    fail(ErrorKind::Capacity, "simulate: requested range [" + std::to_string(start) + ", " +
                                  std::to_string(start + count) + ") exceeds " +
                                  std::to_string(pool.size()) + " images");
  }
  count = std::min(count, pool.size() - start);
  LabeledDataset slice;
  for (size_t i = 0; i < count; ++i) {
    slice.images.push_back(pool.images[start + i]);
    slice.labels.push_back(pool.labels[start + i]);
  }
  slice.rebuild_class_set();

  SensorModel model = build_sensor_model(cfg.capture);
  // Seeds follow pooled positions so frames match experiment captures.
  LabeledDataset frames;
  frames.labels = slice.labels;
  frames.class_set = slice.class_set;
  frames.images.resize(count);
  parallel_for(count, threads, [&](size_t i) {
    frames.images[i] = capture_source_image(slice.images[i], model, cfg.noise,
                                            image_capture_seed(cfg.capture_seed, start + i));
  });
  fs::create_directories(out_dir);
  write_frames_dir(frames, out_dir);
  std::cout << "wrote " << count << " frames (" << model.config.sensor_width << "x"
            << model.config.sensor_height << ") to " << out_dir.string() << "\n";
  return 0;
}

int cmd_features(const ExperimentConfig& cfg, const fs::path& out_dir, const fs::path& frames_dir,
                 unsigned threads) {
  LabeledDataset frames = read_frames_dir(frames_dir);
  std::vector<std::vector<Descriptor>> per_image(frames.size());
  parallel_for(frames.size(), threads, [&](size_t i) {
    per_image[i] = extract_features(frames.images[i], cfg.features).descriptors;
  });
  std::vector<Descriptor> all;
  for (const auto& d : per_image) all.insert(all.end(), d.begin(), d.end());
  fs::create_directories(out_dir);
  write_descriptors(all, out_dir / "descriptors.bin");
  std::cout << "extracted " << all.size() << " descriptors from " << frames.size()
            << " frames -> " << (out_dir / "descriptors.bin").string() << "\n";
  return 0;
}

int cmd_vocab(const ExperimentConfig& cfg, const fs::path& out_dir, const fs::path& desc_path,
              size_t k) {
  std::vector<Descriptor> descriptors = read_descriptors(desc_path);
  Vocabulary vocab = kmeans_fit(descriptors, k, mix64(cfg.master_seed, 0x766f6361),
                                cfg.vocab_max_iters, cfg.vocab_rel_tol);
  fs::create_directories(out_dir);
  write_vocabulary(vocab, out_dir / "vocabulary");
  std::cout << "k-means: " << vocab.k() << " centroids from " << descriptors.size()
            << " descriptors, inertia " << vocab.meta.final_inertia << " after "
            << vocab.meta.iterations_run << " iterations\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const fs::path& out_dir, const std::string& task,
              size_t n_train, size_t n_val, size_t n_test, unsigned threads) {
  std::vector<int> classes = detail::parse_tasks(task, "task").at(0);
  if (n_val == 0) n_val = size_t(std::lround(cfg.val_fraction * double(n_train)));

  MnistDir mnist = load_mnist_dir(cfg.resolved_dataset_dir());
  size_t boundary = mnist.train.size();
  LabeledDataset pool = mnist.pooled();
  Split split = make_experiment_split(pool, boundary, cfg.preserve_boundary, classes, n_train,
                                      n_val, n_test, cfg.master_seed);

  SensorModel model = build_sensor_model(cfg.capture);
  auto simulate_part = [&](const LabeledDataset& part, const std::vector<size_t>& indices) {
    LabeledDataset frames;
    frames.labels = part.labels;
    frames.class_set = part.class_set;
    frames.images.resize(part.size());
    parallel_for(part.size(), threads, [&](size_t i) {
      frames.images[i] = capture_source_image(part.images[i], model, cfg.noise,
                                              image_capture_seed(cfg.capture_seed, indices[i]));
    });
    return frames;
  };
  LabeledDataset train_frames = simulate_part(split.train, split.train_indices);
  LabeledDataset val_frames = simulate_part(split.validation, split.val_indices);

  std::vector<size_t> vocab_rows = detail::vocab_subset_rows(split.train, cfg.vocab_subset,
                                                             classes);
  std::vector<std::vector<Descriptor>> train_desc(train_frames.size());
  parallel_for(train_frames.size(), threads, [&](size_t i) {
    train_desc[i] = extract_features(train_frames.images[i], cfg.features).descriptors;
  });
  std::vector<Descriptor> vocab_pool;
  for (size_t row : vocab_rows) {
    vocab_pool.insert(vocab_pool.end(), train_desc[row].begin(), train_desc[row].end());
  }
  Vocabulary vocab = kmeans_fit(vocab_pool, cfg.vocab_k, mix64(cfg.master_seed, 0x766f6361),
                                cfg.vocab_max_iters, cfg.vocab_rel_tol);
  vocab.meta.n_images_used = vocab_rows.size();

  std::vector<std::vector<double>> train_rows(train_frames.size());
  parallel_for(train_frames.size(), threads,
               [&](size_t i) { train_rows[i] = encode(vocab, train_desc[i]); });
  FeatureMatrix train_X = FeatureMatrix::from_rows(train_rows);
  FeatureMatrix val_X = encode_images(val_frames, vocab, cfg.features, threads);

  std::vector<TrainedModel> roster = train_roster(train_X, split.train.labels, cfg.roster,
                                                  threads);
  size_t best = select_best(roster, val_X, split.validation.labels);
  for (const TrainedModel& m : roster) {
    std::printf("%-12s val accuracy %.4f%s\n", m.name.c_str(), m.val_accuracy,
                &m == &roster[best] ? "  (selected)" : "");
  }
  if (n_test > 0) {
    LabeledDataset test_frames = simulate_part(split.test, split.test_indices);
    FeatureMatrix test_X = encode_images(test_frames, vocab, cfg.features, threads);
    std::printf("%-12s test accuracy %.4f\n", roster[best].name.c_str(),
                evaluate_accuracy(roster[best], test_X, split.test.labels));
  }
  fs::path bundle_dir = out_dir / "bundle";
  save_bundle(roster[best], vocab, bundle_dir);
  std::cout << "bundle saved to " << bundle_dir.string() << "\n";
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const fs::path& bundle_dir, const fs::path& frames_dir,
             unsigned threads) {
  auto [model, vocab] = load_bundle(bundle_dir);
  LabeledDataset frames = read_frames_dir(frames_dir);
  FeatureMatrix X = encode_images(frames, vocab, cfg.features, threads);
  size_t correct = 0;
  for (size_t i = 0; i < X.rows; ++i) {
    if (predict(model, X.row(i), X.dim) == frames.labels[i]) ++correct;
  }
  std::printf("%s: %zu/%zu correct, accuracy %.4f\n", model.name.c_str(), correct, X.rows,
              X.rows ? double(correct) / double(X.rows) : 0.0);
  return 0;
}

int cmd_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, unsigned threads,
                   bool quiet) {
  std::vector<ResultRow> rows = run_experiment(cfg, threads, quiet ? nullptr : &std::cerr);
  fs::create_directories(out_dir);
  fs::path csv = out_dir / "results.csv";
  write_results_csv(rows, csv);
  std::cout << "wrote " << rows.size() << " rows to " << csv.string() << "\n";
  for (const std::string& note : trend_report(rows)) {
    std::cout << "note: " << note << "\n";
  }
  return 0;
}

int cmd_plot(const fs::path& out_dir, const fs::path& csv_path) {
  std::vector<ResultRow> rows = read_results_csv(csv_path);
  fs::create_directories(out_dir);
  fs::path svg = out_dir / "accuracy.svg";
  plot_results(rows, svg);
  std::cout << "wrote " << svg.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lensless-sensor digit classification pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  int threads_flag = 0;
  app.add_option("--config", config_path, "key=value config file");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override experiment.master_seed");
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--threads", threads_flag, "worker threads, 0 = all cores");

  auto* synth = app.add_subcommand("synth", "generate a synthetic digit dataset (IDX files)");
  std::string synth_dir;
  size_t synth_train = 60000, synth_test = 10000;
  bool synth_force = false;
  synth->add_option("--dir", synth_dir, "target directory (default: dataset dir)");
  synth->add_option("--train", synth_train, "training images to generate");
  synth->add_option("--test", synth_test, "test images to generate");
  synth->add_flag("--force", synth_force, "regenerate even if files exist");

  auto* simulate = app.add_subcommand("simulate", "capture dataset images as sensor frames (PGM)");
  std::string sim_source = "pooled";
  size_t sim_start = 0, sim_count = 100;
  simulate->add_option("--source", sim_source, "pooled|train|test (default: pooled)")
      ->check(CLI::IsMember({"pooled", "train", "test"}));
  simulate->add_option("--start", sim_start, "first image index");
  simulate->add_option("--count", sim_count, "number of images");

  auto* features = app.add_subcommand("features", "extract descriptors from a frames directory");
  std::string feat_frames;
  features->add_option("--frames", feat_frames, "directory of PGM frames + labels.txt")
      ->required();

  auto* vocab = app.add_subcommand("vocab", "cluster a descriptor dump into a vocabulary");
  std::string vocab_desc;
  size_t vocab_k = 0;
  vocab->add_option("--descriptors", vocab_desc, "descriptor dump file")->required();
  vocab->add_option("--k", vocab_k, "vocabulary size (default: vocab.k from config)");

  auto* train = app.add_subcommand("train", "train classifiers for one task and save a bundle");
  std::string train_task = "0-1";
  size_t train_n = 1000, train_nval = 0, train_ntest = 500;
  train->add_option("--task", train_task, "class range, e.g. 0-1 or 0-9");
  train->add_option("--n-train", train_n, "training images");
  train->add_option("--n-val", train_nval, "validation images (0 = val_fraction of n-train)");
  train->add_option("--n-test", train_ntest, "test images (0 = skip test evaluation)");

  auto* eval = app.add_subcommand("eval", "classify a frames directory with a saved bundle");
  std::string eval_bundle, eval_frames;
  eval->add_option("--bundle", eval_bundle, "bundle directory")->required();
  eval->add_option("--frames", eval_frames, "directory of PGM frames + labels.txt")->required();

  auto* experiment = app.add_subcommand("experiment", "run the full accuracy-vs-size experiment");
  bool exp_quiet = false;
  experiment->add_flag("--quiet", exp_quiet, "suppress per-cell progress on stderr");

  auto* plot = app.add_subcommand("plot", "render an accuracy.svg from a results CSV");
  std::string plot_csv;
  plot->add_option("--csv", plot_csv, "results CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (seed_opt->count() > 0) cfg.master_seed = seed;
    unsigned threads = threads_flag > 0 ? unsigned(threads_flag) : 0;

    if (synth->parsed()) {
      uint64_t synth_seed = seed_opt->count() > 0 ? seed : 987654321;
      return cmd_synth(cfg, synth_dir, synth_train, synth_test, synth_seed, synth_force);
    }
    if (simulate->parsed())
      return cmd_simulate(cfg, out_dir, sim_source, sim_start, sim_count, threads);
    if (features->parsed()) return cmd_features(cfg, out_dir, feat_frames, threads);
    if (vocab->parsed())
      return cmd_vocab(cfg, out_dir, vocab_desc, vocab_k ? vocab_k : cfg.vocab_k);
    if (train->parsed()) {
      validate_experiment_config(cfg);
      return cmd_train(cfg, out_dir, train_task, train_n, train_nval, train_ntest, threads);
    }
    if (eval->parsed()) return cmd_eval(cfg, eval_bundle, eval_frames, threads);
    if (experiment->parsed()) {
      validate_experiment_config(cfg);
      return cmd_experiment(cfg, out_dir, threads, exp_quiet);
    }
    if (plot->parsed()) return cmd_plot(out_dir, plot_csv);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
