#pragma once

#include <cstdint>
#include <vector>

#include "lensless/errors.hpp"

namespace lensless {

// Dense row-major feature matrix. Values are float32 on purpose: this is the
// precision models are serialized at, so keeping it in memory too makes a
// saved-and-reloaded model predict identically to the one just trained.
struct FeatureMatrix {
  size_t rows = 0;
  size_t dim = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(size_t r, size_t d) : rows(r), dim(d), data(r * d, 0.0f) {}

  float* row(size_t i) { return data.data() + i * dim; }
  const float* row(size_t i) const { return data.data() + i * dim; }

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows_in) {
    FeatureMatrix m;
    m.rows = rows_in.size();
    m.dim = rows_in.empty() ? 0 : rows_in[0].size();
    m.data.reserve(m.rows * m.dim);
    for (const auto& r : rows_in) {
      if (r.size() != m.dim) fail(ErrorKind::Shape, "ragged feature rows");
      for (double v : r) m.data.push_back(float(v));
    }
    return m;
  }
};

inline double dot_f(const float* a, const float* b, size_t dim) {
  double acc = 0.0;
  for (size_t i = 0; i < dim; ++i) acc += double(a[i]) * double(b[i]);
  return acc;
}

inline double sqdist_f(const float* a, const float* b, size_t dim) {
  double acc = 0.0;
  for (size_t i = 0; i < dim; ++i) {
    double d = double(a[i]) - double(b[i]);
    acc += d * d;
  }
  return acc;
}

}  // namespace lensless
