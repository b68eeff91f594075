#pragma once

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lensless/bovw.hpp"
#include "lensless/classifiers.hpp"
#include "lensless/errors.hpp"
#include "lensless/leio.hpp"

namespace lensless {

// Model bundle: a directory holding a text `manifest` (key=value lines), the
// vocabulary in its own format, and one little-endian f32 array file per
// model component, with all dimensions in the manifest. Every numeric field
// round-trips exactly (floats are stored as f32 bits, doubles printed with 17
// significant digits), so a reloaded model predicts identically.

inline constexpr int kBundleFormatVersion = 1;

namespace detail {

inline void write_f32_file(const std::filesystem::path& path, const float* data, size_t count) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  write_le_f32_array(out, data, count);
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

inline std::vector<float> read_f32_file(const std::filesystem::path& path, size_t expect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  in.seekg(0, std::ios::end);
  auto bytes = size_t(in.tellg());
  in.seekg(0);
  if (bytes != expect * 4) {
    fail(ErrorKind::Format, path.filename().string() + ": expected " + std::to_string(expect) +
                                " f32 values, file holds " + std::to_string(bytes / 4));
  }
  std::vector<float> data(expect);
  read_le_f32_array(in, data.data(), expect, path.filename().string());
  return data;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Manifest {
  std::map<std::string, std::string> kv;

  const std::string& get(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorKind::Format, "manifest missing key: " + key);
    return it->second;
  }
  long long get_int(const std::string& key) const {
    try {
      return std::stoll(get(key));
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "manifest key not an integer: " + key);
    }
  }
  double get_double(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "manifest key not a number: " + key);
    }
  }
};

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Format, "manifest line without '=': " + line);
    m.kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "bad integer list entry: " + tok);
    }
  }
  return out;
}

}  // namespace detail

inline void save_bundle(const TrainedModel& model, const Vocabulary& vocab,
                        const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_vocabulary(vocab, dir / "vocabulary");

  std::ostringstream man;
  man << "format_version=" << kBundleFormatVersion << "\n";
  man << "kind=" << kind_name(model.kind) << "\n";
  man << "name=" << model.name << "\n";
  man << "classes=" << detail::join_ints(model.class_set) << "\n";
  man << "val_accuracy=" << detail::fmt_double(model.val_accuracy) << "\n";
  man << "vocabulary=vocabulary\n";

  if (model.kind == ModelKind::SvmOvo) {
    const OvoModel& ovo = std::get<OvoModel>(model.payload);
    man << "dim=" << ovo.dim << "\n";
    man << "svm_pairs=" << ovo.models.size() << "\n";
    for (size_t p = 0; p < ovo.models.size(); ++p) {
      const SvmBinaryModel& b = ovo.models[p];
      std::string tag = "svm_" + std::to_string(p);
      man << tag << "_ns=" << b.n_support() << "\n";
      man << tag << "_kernel=" << (b.kernel.type == KernelSpec::Type::Linear ? "linear" : "rbf")
          << "\n";
      man << tag << "_gamma=" << detail::fmt_double(b.kernel.gamma) << "\n";
      man << tag << "_c=" << detail::fmt_double(b.C) << "\n";
      // Array layout: [ns*dim support vectors][ns alphas][ns signs][1 bias]
      std::vector<float> arr;
      arr.reserve(b.n_support() * (ovo.dim + 2) + 1);
      arr.insert(arr.end(), b.support_vectors.begin(), b.support_vectors.end());
      arr.insert(arr.end(), b.alphas.begin(), b.alphas.end());
      for (int8_t s : b.signs) arr.push_back(float(s));
      arr.push_back(b.bias);
      detail::write_f32_file(dir / (tag + ".bin"), arr.data(), arr.size());
    }
  } else if (model.kind == ModelKind::Knn) {
    const KnnModel& knn = std::get<KnnModel>(model.payload);
    man << "dim=" << knn.train.dim << "\n";
    man << "knn_n=" << knn.train.rows << "\n";
    man << "knn_k=" << knn.k << "\n";
    detail::write_f32_file(dir / "knn_train.bin", knn.train.data.data(), knn.train.data.size());
    std::vector<float> labels(knn.labels.begin(), knn.labels.end());
    detail::write_f32_file(dir / "knn_labels.bin", labels.data(), labels.size());
  } else {
    const TreeModel& tree = std::get<TreeModel>(model.payload);
    man << "dim=0\n";
    man << "tree_nodes=" << tree.nodes.size() << "\n";
    man << "tree_max_depth=" << tree.max_depth << "\n";
    man << "tree_min_leaf=" << tree.min_leaf << "\n";
    // 6 values per node: leaf flag, label, feature, threshold, left, right.
    // Integer fields fit exactly in f32 (node and feature counts << 2^24).
    std::vector<float> arr;
    arr.reserve(tree.nodes.size() * 6);
    for (const TreeNode& n : tree.nodes) {
      arr.push_back(n.leaf ? 1.0f : 0.0f);
      arr.push_back(float(n.label));
      arr.push_back(float(n.feature));
      arr.push_back(n.threshold);
      arr.push_back(float(n.left));
      arr.push_back(float(n.right));
    }
    detail::write_f32_file(dir / "tree_nodes.bin", arr.data(), arr.size());
  }

  std::ofstream out(dir / "manifest");
  if (!out) fail(ErrorKind::Io, "cannot write manifest in " + dir.string());
  out << man.str();
  if (!out) fail(ErrorKind::Io, "manifest write failed in " + dir.string());
}

inline std::pair<TrainedModel, Vocabulary> load_bundle(const std::filesystem::path& dir) {
  detail::Manifest man = detail::read_manifest(dir / "manifest");
  long long version = man.get_int("format_version");
  if (version != kBundleFormatVersion) {
    fail(ErrorKind::Version, "unsupported bundle format_version " + std::to_string(version) +
                                 " (expected " + std::to_string(kBundleFormatVersion) + ")");
  }
  Vocabulary vocab = read_vocabulary(dir / man.get("vocabulary"));

  TrainedModel model;
  model.name = man.get("name");
  model.class_set = detail::split_ints(man.get("classes"));
  model.val_accuracy = man.get_double("val_accuracy");
  std::string kind = man.get("kind");
  if (kind == "svm-ovo") {
    model.kind = ModelKind::SvmOvo;
    OvoModel ovo;
    ovo.dim = size_t(man.get_int("dim"));
    ovo.class_set = model.class_set;
    size_t pairs = size_t(man.get_int("svm_pairs"));
    for (size_t p = 0; p < pairs; ++p) {
      std::string tag = "svm_" + std::to_string(p);
      SvmBinaryModel b;
      b.dim = ovo.dim;
      size_t ns = size_t(man.get_int(tag + "_ns"));
      std::string ker = man.get(tag + "_kernel");
      if (ker == "linear") b.kernel.type = KernelSpec::Type::Linear;
      else if (ker == "rbf") b.kernel.type = KernelSpec::Type::Rbf;
      else fail(ErrorKind::Format, "unknown kernel in manifest: " + ker);
      b.kernel.gamma = man.get_double(tag + "_gamma");
      b.C = man.get_double(tag + "_c");
      std::vector<float> arr =
          detail::read_f32_file(dir / (tag + ".bin"), ns * ovo.dim + ns + ns + 1);
      b.support_vectors.assign(arr.begin(), arr.begin() + ns * ovo.dim);
      b.alphas.assign(arr.begin() + ns * ovo.dim, arr.begin() + ns * ovo.dim + ns);
      b.signs.reserve(ns);
      for (size_t i = 0; i < ns; ++i) {
        float s = arr[ns * ovo.dim + ns + i];
        if (s != 1.0f && s != -1.0f) fail(ErrorKind::Format, tag + ".bin: bad sign entry");
        b.signs.push_back(int8_t(s));
      }
      b.bias = arr.back();
      b.converged = true;
      ovo.models.push_back(std::move(b));
    }
    model.payload = std::move(ovo);
  } else if (kind == "knn") {
    model.kind = ModelKind::Knn;
    KnnModel knn;
    size_t n = size_t(man.get_int("knn_n"));
    knn.train.rows = n;
    knn.train.dim = size_t(man.get_int("dim"));
    knn.k = int(man.get_int("knn_k"));
    knn.train.data = detail::read_f32_file(dir / "knn_train.bin", n * knn.train.dim);
    std::vector<float> labels = detail::read_f32_file(dir / "knn_labels.bin", n);
    knn.labels.assign(labels.begin(), labels.end());
    model.payload = std::move(knn);
  } else if (kind == "tree") {
    model.kind = ModelKind::Tree;
    TreeModel tree;
    size_t count = size_t(man.get_int("tree_nodes"));
    tree.max_depth = int(man.get_int("tree_max_depth"));
    tree.min_leaf = int(man.get_int("tree_min_leaf"));
    std::vector<float> arr = detail::read_f32_file(dir / "tree_nodes.bin", count * 6);
    tree.nodes.resize(count);
    for (size_t i = 0; i < count; ++i) {
      TreeNode& n = tree.nodes[i];
      n.leaf = arr[i * 6] != 0.0f;
      n.label = int(arr[i * 6 + 1]);
      n.feature = int(arr[i * 6 + 2]);
      n.threshold = arr[i * 6 + 3];
      n.left = int(arr[i * 6 + 4]);
      n.right = int(arr[i * 6 + 5]);
      if (!n.leaf && (n.left < 0 || n.right < 0 || n.left >= int(count) || n.right >= int(count))) {
        fail(ErrorKind::Format, "tree_nodes.bin: child index out of range");
      }
    }
    model.payload = std::move(tree);
  } else {
    fail(ErrorKind::Format, "unknown model kind in manifest: " + kind);
  }
  return {std::move(model), std::move(vocab)};
}

}  // namespace lensless
