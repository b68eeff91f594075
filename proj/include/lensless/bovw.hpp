#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/leio.hpp"
#include "lensless/rng.hpp"
#include "lensless/surf.hpp"

namespace lensless {

struct VocabularyMeta {
  size_t n_images_used = 0;
  uint64_t seed = 0;
  int iterations_run = 0;
  double final_inertia = 0.0;
  std::vector<double> inertia_trace;  // per-iteration, for monotonicity checks
};

struct Vocabulary {
  std::vector<Descriptor> centroids;
  VocabularyMeta meta;

  size_t k() const { return centroids.size(); }
};

using BoWVector = std::vector<double>;

namespace detail {

inline double sqdist64(const Descriptor& a, const double* b) {
  double acc = 0.0;
  for (size_t i = 0; i < 64; ++i) {
    double d = double(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

inline double sqdist64f(const Descriptor& a, const Descriptor& b) {
  double acc = 0.0;
  for (size_t i = 0; i < 64; ++i) {
    double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc;
}

inline size_t count_distinct(const std::vector<Descriptor>& points) {
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), size_t(0));
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::lexicographical_compare(points[a].begin(), points[a].end(),
                                        points[b].begin(), points[b].end());
  });
  size_t distinct = 0;
  for (size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || points[order[i]] != points[order[i - 1]]) ++distinct;
  }
  return distinct;
}

}  // namespace detail

// Lloyd's algorithm with greedy k-means++ seeding: each new center is the
// best of a few D^2-weighted candidate draws (the one that lowers the total
// potential most), which keeps lone outliers from hogging a center. All
// arithmetic is double; the final centroids are rounded to f32 once (the
// storage and file precision). Ties in every argmin go to the lowest index
// so runs are reproducible.
inline Vocabulary kmeans_fit(const std::vector<Descriptor>& points, size_t k, uint64_t seed,
                             int max_iters = 100, double rel_tol = 1e-3) {
  size_t n = points.size();
  if (k < 1) fail(ErrorKind::Config, "k must be >= 1");
  if (detail::count_distinct(points) < k) {
    fail(ErrorKind::Capacity, "k-means needs at least " + std::to_string(k) +
                                  " distinct points, got fewer");
  }

  Rng rng(seed);
  std::vector<std::array<double, 64>> centers(k);
  auto set_center = [&](size_t c, const Descriptor& p) {
    for (size_t i = 0; i < 64; ++i) centers[c][i] = double(p[i]);
  };

  // First center uniform, the rest greedy D^2-weighted over the points.
  set_center(0, points[rng.below(n)]);
  std::vector<double> best_d2(n);
  for (size_t i = 0; i < n; ++i) best_d2[i] = detail::sqdist64(points[i], centers[0].data());
  size_t trials = 2 + size_t(std::log(double(k)));
  std::vector<double> cand_d2(n), pick_d2(n);
  for (size_t c = 1; c < k; ++c) {
    double total = std::accumulate(best_d2.begin(), best_d2.end(), 0.0);
    if (total <= 0.0) throw std::logic_error("kmeans++: ran out of distinct points");
    size_t best_pick = n;
    double best_potential = std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < trials; ++t) {
      double r = rng.uniform() * total;
      double cum = 0.0;
      size_t pick = n;  // falls back to the last positive-weight point
      for (size_t i = 0; i < n; ++i) {
        cum += best_d2[i];
        if (best_d2[i] > 0.0) {
          pick = i;
          if (cum > r) break;
        }
      }
      if (pick == n) {
        throw std::logic_error("kmeans++: no candidate despite positive total");
      }
      double potential = 0.0;
      for (size_t i = 0; i < n; ++i) {
        cand_d2[i] = std::min(best_d2[i], detail::sqdist64f(points[i], points[pick]));
        potential += cand_d2[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best_pick = pick;
        std::swap(pick_d2, cand_d2);
      }
    }
    set_center(c, points[best_pick]);
    std::swap(best_d2, pick_d2);
  }

  std::vector<size_t> assign_idx(n, 0);
  VocabularyMeta meta;
  meta.seed = seed;
  double prev_inertia = -1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment step.
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double best = detail::sqdist64(points[i], centers[0].data());
      size_t arg = 0;
      for (size_t c = 1; c < k; ++c) {
        double d = detail::sqdist64(points[i], centers[c].data());
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      assign_idx[i] = arg;
      inertia += best;
    }
    meta.inertia_trace.push_back(inertia);
    meta.iterations_run = iter + 1;
    meta.final_inertia = inertia;
    if (prev_inertia >= 0.0 && inertia > prev_inertia * (1.0 + 1e-9) + 1e-12) {
      throw std::logic_error("kmeans: inertia increased across iterations");
    }
    bool converged =
        prev_inertia >= 0.0 &&
        (prev_inertia == 0.0 || (prev_inertia - inertia) / prev_inertia < rel_tol);
    prev_inertia = inertia;

    // Update step: means in fixed point order. Runs even on the converged
    // iteration because the single-point refinement below needs exact means.
    std::vector<std::array<double, 64>> sums(k, std::array<double, 64>{});
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      size_t c = assign_idx[i];
      ++counts[c];
      for (size_t d = 0; d < 64; ++d) sums[c][d] += double(points[i][d]);
    }
    bool had_empty = false;
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        had_empty = true;
        continue;
      }
      for (size_t d = 0; d < 64; ++d) centers[c][d] = sums[c][d] / double(counts[c]);
    }
    // Empty clusters grab the point farthest from its own centroid; claimed
    // points are excluded so two empty clusters never collide.
    std::vector<bool> claimed(n, false);
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      double far_d = -1.0;
      size_t far_i = n;
      for (size_t i = 0; i < n; ++i) {
        if (claimed[i]) continue;
        double d = detail::sqdist64(points[i], centers[assign_idx[i]].data());
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      if (far_i == n) throw std::logic_error("kmeans: no point available for empty cluster");
      set_center(c, points[far_i]);
      claimed[far_i] = true;
    }
    if (!converged) continue;
    if (had_empty) continue;  // let the reseed settle before refining

    // Lloyd has stalled. Single-point refinement (Hartigan-style): moving a
    // point between clusters can lower the total inertia even at a Lloyd
    // fixed point, because the move shifts both means. Deltas are exact, so
    // the assignment inertia stays monotone. Stop when a full sweep gains
    // less than the convergence tolerance.
    double swept = 0.0;
    double eps = 1e-12 * std::max(1.0, inertia);
    for (size_t i = 0; i < n; ++i) {
      size_t a = assign_idx[i];
      if (counts[a] <= 1) continue;
      double da = detail::sqdist64(points[i], centers[a].data());
      double remove_gain = da * double(counts[a]) / double(counts[a] - 1);
      double best_delta = -eps;
      size_t best_b = k;
      for (size_t b = 0; b < k; ++b) {
        if (b == a) continue;
        double db = detail::sqdist64(points[i], centers[b].data());
        double delta = db * double(counts[b]) / double(counts[b] + 1) - remove_gain;
        if (delta < best_delta) {
          best_delta = delta;
          best_b = b;
        }
      }
      if (best_b == k) continue;
      for (size_t d = 0; d < 64; ++d) {
        double p = double(points[i][d]);
        centers[a][d] = (centers[a][d] * double(counts[a]) - p) / double(counts[a] - 1);
        centers[best_b][d] = (centers[best_b][d] * double(counts[best_b]) + p) /
                             double(counts[best_b] + 1);
      }
      --counts[a];
      ++counts[best_b];
      assign_idx[i] = best_b;
      swept -= best_delta;
    }
    if (swept <= rel_tol * inertia) break;
  }

  Vocabulary vocab;
  vocab.meta = meta;
  vocab.centroids.resize(k);
  for (size_t c = 0; c < k; ++c) {
    for (size_t d = 0; d < 64; ++d) vocab.centroids[c][d] = float(centers[c][d]);
  }
  for (size_t a = 0; a + 1 < k; ++a) {
    for (size_t b = a + 1; b < k; ++b) {
      if (vocab.centroids[a] == vocab.centroids[b]) {
        throw std::logic_error("kmeans: identical centroids after fit");
      }
    }
  }
  return vocab;
}

// Nearest centroid by squared Euclidean distance; ties to the lowest index.
inline size_t assign(const Vocabulary& vocab, const Descriptor& d) {
  size_t arg = 0;
  double best = detail::sqdist64f(d, vocab.centroids[0]);
  for (size_t c = 1; c < vocab.centroids.size(); ++c) {
    double dist = detail::sqdist64f(d, vocab.centroids[c]);
    if (dist < best) {
      best = dist;
      arg = c;
    }
  }
  return arg;
}

// L1-normalized word histogram; an image with no descriptors encodes as the
// all-zero vector.
inline BoWVector encode(const Vocabulary& vocab, const std::vector<Descriptor>& descriptors) {
  BoWVector v(vocab.k(), 0.0);
  if (descriptors.empty()) return v;
  for (const Descriptor& d : descriptors) v[assign(vocab, d)] += 1.0;
  double inv = 1.0 / double(descriptors.size());
  for (double& w : v) w *= inv;
  return v;
}

// -------------------------------------------------------------------------
// Vocabulary file: `K=<int> dim=64 seed=<int>` + K x 64 little-endian floats
// -------------------------------------------------------------------------

inline void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out << "K=" << vocab.k() << " dim=64 seed=" << vocab.meta.seed << "\n";
  for (const Descriptor& c : vocab.centroids) write_le_f32_array(out, c.data(), 64);
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

inline Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Truncation, "empty vocabulary file");
  long long k_val = -1, dim = -1;
  unsigned long long seed_val = 0;  // full u64 range, unlike K and dim
  std::istringstream ls(line);
  std::string tok;
  while (ls >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Format, "bad vocabulary manifest token: " + tok);
    std::string key = tok.substr(0, eq);
    if (key != "K" && key != "dim" && key != "seed") {
      fail(ErrorKind::Format, "unknown vocabulary manifest key: " + key);
    }
    try {
      std::string raw = tok.substr(eq + 1);
      if (key == "K") k_val = std::stoll(raw);
      else if (key == "dim") dim = std::stoll(raw);
      else seed_val = std::stoull(raw);
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "bad vocabulary manifest value: " + tok);
    }
  }
  if (k_val < 1 || dim != 64) fail(ErrorKind::Format, "vocabulary manifest needs K>=1 and dim=64");
  Vocabulary vocab;
  vocab.meta.seed = uint64_t(seed_val);
  vocab.centroids.resize(size_t(k_val));
  for (Descriptor& c : vocab.centroids) {
    read_le_f32_array(in, c.data(), 64, "vocabulary centroids");
  }
  return vocab;
}

// -------------------------------------------------------------------------
// Descriptor dump: little-endian u32 count + count x 64 little-endian floats
// -------------------------------------------------------------------------

inline void write_descriptors(const std::vector<Descriptor>& descriptors,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  write_le_u32(out, uint32_t(descriptors.size()));
  for (const Descriptor& d : descriptors) write_le_f32_array(out, d.data(), 64);
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

inline std::vector<Descriptor> read_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());
  uint32_t count = read_le_u32(in, "descriptor dump header");
  std::vector<Descriptor> out(count);
  for (Descriptor& d : out) read_le_f32_array(in, d.data(), 64, "descriptor dump payload");
  return out;
}

}  // namespace lensless
