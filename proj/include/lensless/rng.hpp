#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lensless {

// splitmix64 finalizer; decorrelates nearby seeds (e.g. seed ^ image_index).
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }

inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

// Seeded generator with distributions implemented in-house. std::mt19937_64
// has a standard-pinned bit stream but the std:: distributions do not, and
// reproducibility here must not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(mix64(seed)) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, n) by masked rejection.
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    uint64_t mask = ~uint64_t{0} >> __builtin_clzll(n - 1 | 1);
    for (;;) {
      uint64_t v = next_u64() & mask;
      if (v < n) return v;
    }
  }

  // Standard normal via the Marsaglia-Tsang ziggurat (128 layers). This is
  // the hot path of the sensor simulation; the common case costs one engine
  // call and a multiply.
  double normal() {
    for (;;) {
      int64_t hz = int64_t(int32_t(uint32_t(next_u64())));
      int iz = int(hz & 127);
      if (uint64_t(hz < 0 ? -hz : hz) < tables().kn[iz]) return double(hz) * tables().wn[iz];
      double x = nfix(hz, iz);
      if (!std::isnan(x)) return x;
    }
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  struct Tables {
    uint32_t kn[128];
    double wn[128];
    double fn[128];
  };

  static const Tables& tables() {
    static const Tables t = [] {
      Tables t{};
      const double m1 = 2147483648.0;
      double dn = 3.442619855899, tn = dn;
      const double vn = 9.91256303526217e-3;
      double q = vn / std::exp(-0.5 * dn * dn);
      t.kn[0] = uint32_t((dn / q) * m1);
      t.kn[1] = 0;
      t.wn[0] = q / m1;
      t.wn[127] = dn / m1;
      t.fn[0] = 1.0;
      t.fn[127] = std::exp(-0.5 * dn * dn);
      for (int i = 126; i >= 1; i--) {
        dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
        t.kn[i + 1] = uint32_t((dn / tn) * m1);
        tn = dn;
        t.fn[i] = std::exp(-0.5 * dn * dn);
        t.wn[i] = dn / m1;
      }
      return t;
    }();
    return t;
  }

  // Rejection path for the base strip and tails. Returns NaN to request a
  // fresh draw.
  double nfix(int64_t hz, int iz) {
    const double r = 3.442619855899;
    double x = double(hz) * tables().wn[iz];
    if (iz == 0) {
      double y;
      do {
        x = -std::log(uniform_nonzero()) / r;
        y = -std::log(uniform_nonzero());
      } while (y + y < x * x);
      return hz > 0 ? r + x : -r - x;
    }
    if (tables().fn[iz] + uniform() * (tables().fn[iz - 1] - tables().fn[iz]) <
        std::exp(-0.5 * x * x)) {
      return x;
    }
    return std::nan("");
  }

  double uniform_nonzero() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  std::mt19937_64 eng_;
};

}  // namespace lensless
