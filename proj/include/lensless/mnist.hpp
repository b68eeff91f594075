#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image.hpp"
#include "lensless/rng.hpp"

namespace lensless {

struct LabeledDataset {
  std::vector<GrayImage> images;
  std::vector<int> labels;
  std::vector<int> class_set;  // distinct labels present, ascending

  size_t size() const { return images.size(); }

  void rebuild_class_set() {
    std::set<int> s(labels.begin(), labels.end());
    class_set.assign(s.begin(), s.end());
  }
};

struct Split {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
  uint64_t seed = 0;
  std::vector<int> class_subset;
  // Source indices into the dataset the split was drawn from, in partition
  // order; kept so callers can trace any item back to its origin.
  std::vector<size_t> train_indices, val_indices, test_indices;
};

// -------------------------------------------------------------------------
// IDX container (big-endian magic + dims, unsigned-byte payload)
// -------------------------------------------------------------------------

namespace detail {

inline uint32_t read_be32(const std::vector<uint8_t>& b, size_t off) {
  if (off + 4 > b.size()) fail(ErrorKind::Truncation, "IDX header shorter than 4-byte field");
  return (uint32_t(b[off]) << 24) | (uint32_t(b[off + 1]) << 16) |
         (uint32_t(b[off + 2]) << 8) | uint32_t(b[off + 3]);
}

inline void put_be32(std::vector<uint8_t>& b, uint32_t v) {
  b.push_back(uint8_t(v >> 24));
  b.push_back(uint8_t(v >> 16));
  b.push_back(uint8_t(v >> 8));
  b.push_back(uint8_t(v));
}

}  // namespace detail

inline std::vector<GrayImage> parse_idx_images(const std::vector<uint8_t>& bytes) {
  uint32_t magic = detail::read_be32(bytes, 0);
  if (magic != 0x00000803u) {
    fail(ErrorKind::Format, "bad IDX image magic (expected 0x00000803)");
  }
  uint32_t count = detail::read_be32(bytes, 4);
  uint32_t rows = detail::read_be32(bytes, 8);
  uint32_t cols = detail::read_be32(bytes, 12);
  uint64_t need = uint64_t(count) * rows * cols;
  if (bytes.size() < 16 + need) {
    fail(ErrorKind::Truncation, "IDX image payload shorter than header declares");
  }
  std::vector<GrayImage> out;
  out.reserve(count);
  size_t off = 16;
  for (uint32_t i = 0; i < count; ++i) {
    GrayImage img{int(cols), int(rows)};
    for (size_t p = 0; p < img.pixel_count(); ++p) {
      img.data[p] = float(bytes[off + p]) / 255.0f;
    }
    off += img.pixel_count();
    out.push_back(std::move(img));
  }
  return out;
}

inline std::vector<int> parse_idx_labels(const std::vector<uint8_t>& bytes) {
  uint32_t magic = detail::read_be32(bytes, 0);
  if (magic != 0x00000801u) {
    fail(ErrorKind::Format, "bad IDX label magic (expected 0x00000801)");
  }
  uint32_t count = detail::read_be32(bytes, 4);
  if (bytes.size() < 8 + uint64_t(count)) {
    fail(ErrorKind::Truncation, "IDX label payload shorter than header declares");
  }
  std::vector<int> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint8_t v = bytes[8 + i];
    if (v > 9) fail(ErrorKind::Domain, "label byte " + std::to_string(int(v)) + " outside [0,9]");
    out.push_back(int(v));
  }
  return out;
}

inline std::vector<uint8_t> serialize_idx_images(const std::vector<GrayImage>& images) {
  std::vector<uint8_t> out;
  detail::put_be32(out, 0x00000803u);
  detail::put_be32(out, uint32_t(images.size()));
  uint32_t rows = images.empty() ? 0 : uint32_t(images[0].height);
  uint32_t cols = images.empty() ? 0 : uint32_t(images[0].width);
  detail::put_be32(out, rows);
  detail::put_be32(out, cols);
  for (const GrayImage& img : images) {
    if (uint32_t(img.height) != rows || uint32_t(img.width) != cols) {
      fail(ErrorKind::Shape, "IDX serialization requires uniform image dimensions");
    }
    for (float v : img.data) {
      out.push_back(uint8_t(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
    }
  }
  return out;
}

inline std::vector<uint8_t> serialize_idx_labels(const std::vector<int>& labels) {
  std::vector<uint8_t> out;
  detail::put_be32(out, 0x00000801u);
  detail::put_be32(out, uint32_t(labels.size()));
  for (int v : labels) {
    if (v < 0 || v > 9) fail(ErrorKind::Domain, "label outside [0,9]");
    out.push_back(uint8_t(v));
  }
  return out;
}

// -------------------------------------------------------------------------
// File loading with transparent gzip inflation
// -------------------------------------------------------------------------

inline std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

inline std::vector<uint8_t> gunzip(const std::vector<uint8_t>& compressed) {
  z_stream strm{};
  if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK) {
    fail(ErrorKind::Io, "zlib init failed");
  }
  std::vector<uint8_t> out;
  std::vector<uint8_t> buf(1 << 16);
  strm.next_in = const_cast<Bytef*>(compressed.data());
  strm.avail_in = uInt(compressed.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    strm.next_out = buf.data();
    strm.avail_out = uInt(buf.size());
    rc = inflate(&strm, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&strm);
      fail(ErrorKind::Format, "gzip stream is corrupt");
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - strm.avail_out));
    if (rc == Z_OK && strm.avail_in == 0 && strm.avail_out != 0) {
      inflateEnd(&strm);
      fail(ErrorKind::Truncation, "gzip stream ends prematurely");
    }
  }
  inflateEnd(&strm);
  return out;
}

// Reads a file that may or may not be gzip-compressed (sniffed by magic bytes,
// so both `train-images` and `train-images.gz` work).
inline std::vector<uint8_t> read_maybe_gzipped(const std::filesystem::path& path) {
  std::vector<uint8_t> bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    return gunzip(bytes);
  }
  return bytes;
}

// Resolves a dataset file by convention: `<base>` plus gzip and the official
// distribution's `-idx?-ubyte` suffixes.
inline std::filesystem::path find_dataset_file(const std::filesystem::path& dir,
                                               const std::string& base, bool is_images) {
  const std::string idx_suffix = is_images ? "-idx3-ubyte" : "-idx1-ubyte";
  const std::string candidates[] = {base, base + ".gz", base + idx_suffix,
                                    base + idx_suffix + ".gz"};
  for (const std::string& name : candidates) {
    std::filesystem::path p = dir / name;
    if (std::filesystem::exists(p)) return p;
  }
  fail(ErrorKind::Io, "no dataset file for '" + base + "' under " + dir.string());
}

inline LabeledDataset load_idx_pair(const std::filesystem::path& images_path,
                                    const std::filesystem::path& labels_path) {
  LabeledDataset ds;
  ds.images = parse_idx_images(read_maybe_gzipped(images_path));
  ds.labels = parse_idx_labels(read_maybe_gzipped(labels_path));
  if (ds.images.size() != ds.labels.size()) {
    fail(ErrorKind::Shape, "image/label counts differ: " + std::to_string(ds.images.size()) +
                               " vs " + std::to_string(ds.labels.size()));
  }
  ds.rebuild_class_set();
  return ds;
}

struct MnistDir {
  LabeledDataset train;
  LabeledDataset test;

  // The experiment default pools the two partitions into one 70k dataset and
  // re-splits from there.
  LabeledDataset pooled() const {
    LabeledDataset all;
    all.images = train.images;
    all.images.insert(all.images.end(), test.images.begin(), test.images.end());
    all.labels = train.labels;
    all.labels.insert(all.labels.end(), test.labels.begin(), test.labels.end());
    all.rebuild_class_set();
    return all;
  }
};

inline MnistDir load_mnist_dir(const std::filesystem::path& dir) {
  MnistDir out;
  out.train = load_idx_pair(find_dataset_file(dir, "train-images", true),
                            find_dataset_file(dir, "train-labels", false));
  out.test = load_idx_pair(find_dataset_file(dir, "t10k-images", true),
                           find_dataset_file(dir, "t10k-labels", false));
  return out;
}

// -------------------------------------------------------------------------
// Split construction
// -------------------------------------------------------------------------

inline Split make_split(const LabeledDataset& dataset, const std::vector<int>& class_subset,
                        size_t n_train, size_t n_val, size_t n_test, uint64_t seed) {
  std::vector<size_t> pool;
  for (size_t i = 0; i < dataset.labels.size(); ++i) {
    if (std::find(class_subset.begin(), class_subset.end(), dataset.labels[i]) !=
        class_subset.end()) {
      pool.push_back(i);
    }
  }
  size_t need = n_train + n_val + n_test;
  if (pool.size() < need) {
    fail(ErrorKind::Capacity, "split needs " + std::to_string(need) + " items but only " +
                                  std::to_string(pool.size()) + " match the class subset");
  }
  Rng rng(seed);
  rng.shuffle(pool);

  Split split;
  split.seed = seed;
  split.class_subset = class_subset;
  auto take = [&](size_t begin, size_t count, LabeledDataset& part, std::vector<size_t>& idx) {
    part.images.reserve(count);
    part.labels.reserve(count);
    idx.reserve(count);
    for (size_t i = begin; i < begin + count; ++i) {
      part.images.push_back(dataset.images[pool[i]]);
      part.labels.push_back(dataset.labels[pool[i]]);
      idx.push_back(pool[i]);
    }
    part.rebuild_class_set();
  };
  take(0, n_train, split.train, split.train_indices);
  take(n_train, n_val, split.validation, split.val_indices);
  take(n_train + n_val, n_test, split.test, split.test_indices);
  return split;
}

// -------------------------------------------------------------------------
// PGM directory export/import (frames + labels sidecar)
// -------------------------------------------------------------------------

inline void write_frames_dir(const LabeledDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (size_t i = 0; i < ds.images.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%06zu.pgm", i);
    write_pgm(ds.images[i], dir / name);
  }
  std::ofstream labels(dir / "labels.txt");
  if (!labels) fail(ErrorKind::Io, "cannot write labels sidecar in " + dir.string());
  for (int v : ds.labels) labels << v << "\n";
}

inline LabeledDataset read_frames_dir(const std::filesystem::path& dir) {
  std::ifstream labels_in(dir / "labels.txt");
  if (!labels_in) fail(ErrorKind::Io, "missing labels sidecar in " + dir.string());
  LabeledDataset ds;
  int v;
  while (labels_in >> v) {
    if (v < 0 || v > 9) fail(ErrorKind::Domain, "sidecar label outside [0,9]");
    ds.labels.push_back(v);
  }
  char name[32];
  ds.images.reserve(ds.labels.size());
  for (size_t i = 0; i < ds.labels.size(); ++i) {
    std::snprintf(name, sizeof(name), "frame_%06zu.pgm", i);
    ds.images.push_back(read_pgm(dir / name));
  }
  ds.rebuild_class_set();
  return ds;
}

}  // namespace lensless
