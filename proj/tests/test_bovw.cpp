#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "lensless/bovw.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace lensless;

namespace {

Descriptor axis_point(double value) {
  Descriptor d{};
  d[0] = float(value);
  return d;
}

// Coordinates on the 1/8 grid so every squared distance is exact in double
// regardless of summation order (keeps tie checks meaningful).
Descriptor grid_random(Rng& rng) {
  Descriptor d;
  for (float& v : d) v = float(rng.below(9)) / 8.0f;
  return d;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("k = 1 converges to the mean") {
  std::vector<Descriptor> pts;
  Rng rng(5);
  for (int i = 0; i < 17; ++i) pts.push_back(grid_random(rng));
  Vocabulary vocab = kmeans_fit(pts, 1, 99);
  REQUIRE(vocab.k() == 1);
  for (size_t d = 0; d < 64; ++d) {
    double sum = 0.0;
    for (const Descriptor& p : pts) sum += double(p[d]);
    REQUIRE(vocab.centroids[0][d] == float(sum / double(pts.size())));
  }
  REQUIRE(vocab.meta.seed == 99);
  REQUIRE(vocab.meta.iterations_run == int(vocab.meta.inertia_trace.size()));
}

TEST_CASE("n = k pins every point with zero inertia") {
  std::vector<Descriptor> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(axis_point(double(i)));
  Vocabulary vocab = kmeans_fit(pts, 5, 7);
  REQUIRE(vocab.meta.final_inertia == 0.0);
  std::vector<float> got, want;
  for (const Descriptor& c : vocab.centroids) got.push_back(c[0]);
  for (const Descriptor& p : pts) want.push_back(p[0]);
  std::sort(got.begin(), got.end());
  REQUIRE(got == want);
}

TEST_CASE("two well-separated groups split optimally from any seed") {
  std::vector<Descriptor> pts = {axis_point(0),  axis_point(1),  axis_point(2),
                                 axis_point(10), axis_point(11), axis_point(12)};
  std::vector<std::vector<double>> pts_d;
  for (const Descriptor& p : pts) pts_d.emplace_back(p.begin(), p.end());
  double optimum = oracles::brute_kmeans2_inertia(pts_d);
  REQUIRE(optimum == Catch::Approx(4.0).margin(1e-12));

  for (uint64_t seed : {0ull, 1ull, 42ull, 1234567ull}) {
    Vocabulary vocab = kmeans_fit(pts, 2, seed);
    REQUIRE(vocab.meta.final_inertia == Catch::Approx(4.0).margin(1e-9));
    std::vector<float> centers = {vocab.centroids[0][0], vocab.centroids[1][0]};
    std::sort(centers.begin(), centers.end());
    REQUIRE(centers[0] == 1.0f);
    REQUIRE(centers[1] == 11.0f);
  }
}

TEST_CASE("best of a few seeds comes close to the exhaustive 2-means optimum") {
  Rng rng(31);
  std::vector<Descriptor> pts;
  std::vector<std::vector<double>> pts_d;
  for (int i = 0; i < 16; ++i) {
    Descriptor d{};
    double base = i < 8 ? 0.0 : 0.75;
    for (size_t j = 0; j < 64; ++j) d[j] = float(base + double(rng.below(17)) / 128.0);
    pts.push_back(d);
    pts_d.emplace_back(d.begin(), d.end());
  }
  double optimum = oracles::brute_kmeans2_inertia(pts_d);
  double best = std::numeric_limits<double>::infinity();
  for (uint64_t seed = 0; seed < 10; ++seed) {
    best = std::min(best, kmeans_fit(pts, 2, seed).meta.final_inertia);
  }
  REQUIRE(best >= optimum - 1e-9);
  REQUIRE(best <= optimum * 1.05);
}

TEST_CASE("single-point refinement escapes Lloyd-stable splits") {
  // An outlier plus two loose pairs: most seed choices drive plain Lloyd into
  // a fixed point 18-67% above the optimum, and no amount of iterating gets
  // out. The post-stall refinement pass must reach the optimum from any seed.
  std::vector<std::vector<double>> coords = {{0.113, 0.067},
                                             {0.317, 0.060},
                                             {0.965, 0.161},
                                             {0.355, 0.744},
                                             {0.724, 0.580}};
  std::vector<Descriptor> pts(coords.size());
  for (size_t i = 0; i < coords.size(); ++i) {
    pts[i].fill(0.0f);
    pts[i][0] = float(coords[i][0]);
    pts[i][1] = float(coords[i][1]);
  }
  double optimum = oracles::brute_kmeans2_inertia(coords);
  for (uint64_t seed = 0; seed < 12; ++seed) {
    Vocabulary vocab = kmeans_fit(pts, 2, seed, 200, 1e-9);
    REQUIRE(vocab.meta.final_inertia == Catch::Approx(optimum).margin(1e-6));
  }
}

TEST_CASE("capacity and config guards on k") {
  std::vector<Descriptor> pts = {axis_point(0), axis_point(1), axis_point(0),
                                 axis_point(1), axis_point(0)};
  REQUIRE(kind_of([&] { kmeans_fit(pts, 3, 1); }) == ErrorKind::Capacity);
  try {
    kmeans_fit(pts, 3, 1);
  } catch (const Error& e) {
    REQUIRE(std::string(e.what()).find("3") != std::string::npos);
  }
  REQUIRE(kind_of([&] { kmeans_fit(pts, 0, 1); }) == ErrorKind::Config);
  REQUIRE_NOTHROW(kmeans_fit(pts, 2, 1));
}

TEST_CASE("assignment ties go to the lowest centroid index") {
  Vocabulary vocab;
  vocab.centroids = {axis_point(0.0), axis_point(1.0)};
  REQUIRE(assign(vocab, axis_point(0.5)) == 0);
  REQUIRE(assign(vocab, axis_point(0.4)) == 0);
  REQUIRE(assign(vocab, axis_point(0.6)) == 1);

  Rng rng(77);
  std::vector<Descriptor> centroids;
  for (int c = 0; c < 8; ++c) centroids.push_back(grid_random(rng));
  Vocabulary big;
  big.centroids = centroids;
  for (int trial = 0; trial < 1000; ++trial) {
    Descriptor q = grid_random(rng);
    size_t want = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < centroids.size(); ++c) {
      double acc = 0.0;
      for (size_t j = 0; j < 64; ++j) {
        double diff = double(q[j]) - double(centroids[c][j]);
        acc += diff * diff;
      }
      if (acc < best) {
        best = acc;
        want = c;
      }
    }
    REQUIRE(assign(big, q) == want);
  }
}

TEST_CASE("histograms are L1-normalized word counts") {
  Vocabulary vocab;
  vocab.centroids = {axis_point(0.0), axis_point(1.0)};
  std::vector<Descriptor> ds = {axis_point(0.1), axis_point(0.2), axis_point(0.05),
                                axis_point(0.9)};
  BoWVector v = encode(vocab, ds);
  REQUIRE(v.size() == 2);
  REQUIRE(v[0] == 0.75);
  REQUIRE(v[1] == 0.25);

  BoWVector empty = encode(vocab, {});
  REQUIRE(empty == BoWVector{0.0, 0.0});
}

TEST_CASE("encoding commutes with centroid permutation") {
  Rng rng(13);
  Vocabulary vocab;
  for (int c = 0; c < 4; ++c) vocab.centroids.push_back(grid_random(rng));
  std::vector<Descriptor> ds;
  for (int i = 0; i < 40; ++i) ds.push_back(grid_random(rng));

  Vocabulary swapped = vocab;
  std::swap(swapped.centroids[1], swapped.centroids[3]);
  BoWVector a = encode(vocab, ds);
  BoWVector b = encode(swapped, ds);
  // With ties broken by index the permuted vocabulary may only differ where a
  // descriptor ties between the swapped words; this grid has none.
  REQUIRE(a[0] == b[0]);
  REQUIRE(a[2] == b[2]);
  REQUIRE(a[1] == b[3]);
  REQUIRE(a[3] == b[1]);
}

TEST_CASE("inertia never increases across iterations") {
  Rng rng(999);
  std::vector<Descriptor> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(grid_random(rng));
  Vocabulary vocab = kmeans_fit(pts, 4, 3);
  const auto& trace = vocab.meta.inertia_trace;
  REQUIRE(trace.size() >= 2);
  for (size_t i = 1; i < trace.size(); ++i) {
    REQUIRE(trace[i] <= trace[i - 1] + 1e-9);
  }
  REQUIRE(vocab.meta.final_inertia == trace.back());
}

TEST_CASE("fits are reproducible from the seed") {
  Rng rng(2024);
  std::vector<Descriptor> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(grid_random(rng));
  Vocabulary a = kmeans_fit(pts, 6, 17);
  Vocabulary b = kmeans_fit(pts, 6, 17);
  REQUIRE(a.centroids == b.centroids);
  REQUIRE(a.meta.inertia_trace == b.meta.inertia_trace);
}

TEST_CASE("vocabulary files round trip exactly") {
  testutil::TempDir tmp("vocab");
  Rng rng(8);
  std::vector<Descriptor> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(grid_random(rng));
  Vocabulary vocab = kmeans_fit(pts, 3, 55);

  auto path = tmp.path() / "vocab.bin";
  write_vocabulary(vocab, path);
  Vocabulary back = read_vocabulary(path);
  REQUIRE(back.k() == 3);
  REQUIRE(back.meta.seed == 55);
  REQUIRE(back.centroids == vocab.centroids);
}

TEST_CASE("vocabulary reader rejects malformed files") {
  testutil::TempDir tmp("vocab_bad");
  auto write_text = [&](const std::string& name, const std::string& text) {
    std::ofstream out(tmp.path() / name, std::ios::binary);
    out << text;
    return tmp.path() / name;
  };

  REQUIRE(kind_of([&] { read_vocabulary(tmp.path() / "missing.bin"); }) == ErrorKind::Io);
  REQUIRE(kind_of([&] { read_vocabulary(write_text("empty.bin", "")); }) ==
          ErrorKind::Truncation);
  REQUIRE(kind_of([&] { read_vocabulary(write_text("tok.bin", "banana\n")); }) ==
          ErrorKind::Format);
  REQUIRE(kind_of([&] { read_vocabulary(write_text("key.bin", "K=1 dim=64 color=3\n")); }) ==
          ErrorKind::Format);
  REQUIRE(kind_of([&] { read_vocabulary(write_text("val.bin", "K=abc dim=64\n")); }) ==
          ErrorKind::Format);
  REQUIRE(kind_of([&] { read_vocabulary(write_text("k0.bin", "K=0 dim=64 seed=1\n")); }) ==
          ErrorKind::Format);
  REQUIRE(kind_of([&] { read_vocabulary(write_text("dim.bin", "K=2 dim=32 seed=1\n")); }) ==
          ErrorKind::Format);

  // header promises two centroids, payload carries one
  auto short_path = tmp.path() / "short.bin";
  {
    std::ofstream out(short_path, std::ios::binary);
    out << "K=2 dim=64 seed=9\n";
    Descriptor only{};
    write_le_f32_array(out, only.data(), 64);
  }
  try {
    read_vocabulary(short_path);
    FAIL("expected truncation");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Truncation);
    REQUIRE(std::string(e.what()).find("centroid") != std::string::npos);
  }
}

TEST_CASE("descriptor dumps round trip and name their truncation point") {
  testutil::TempDir tmp("desc");
  Rng rng(4);
  std::vector<Descriptor> ds;
  for (int i = 0; i < 9; ++i) ds.push_back(grid_random(rng));

  auto path = tmp.path() / "descriptors.bin";
  write_descriptors(ds, path);
  REQUIRE(read_descriptors(path) == ds);
  write_descriptors({}, path);
  REQUIRE(read_descriptors(path).empty());

  REQUIRE(kind_of([&] { read_descriptors(tmp.path() / "nope.bin"); }) == ErrorKind::Io);

  auto empty_path = tmp.path() / "empty.bin";
  std::ofstream(empty_path, std::ios::binary).flush();
  try {
    read_descriptors(empty_path);
    FAIL("expected truncation");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Truncation);
    REQUIRE(std::string(e.what()).find("header") != std::string::npos);
  }

  auto cut_path = tmp.path() / "cut.bin";
  {
    std::ofstream out(cut_path, std::ios::binary);
    write_le_u32(out, 2);
    write_le_f32_array(out, ds[0].data(), 64);
  }
  try {
    read_descriptors(cut_path);
    FAIL("expected truncation");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Truncation);
    REQUIRE(std::string(e.what()).find("payload") != std::string::npos);
  }
}
