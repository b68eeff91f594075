#pragma once

#include <algorithm>
#include <vector>

#include "lensless/image.hpp"

namespace lensless {

// Summed-area table with a zero guard row/column: table entry (x, y) is the
// sum of all pixels with coordinates strictly less than (x, y), so the table
// is (width+1) x (height+1) and box sums need four lookups.
struct IntegralImage {
  int width = 0;   // source image width
  int height = 0;  // source image height
  std::vector<double> table;

  double at(int x, int y) const { return table[size_t(y) * (width + 1) + x]; }
};

inline IntegralImage integral_image(const GrayImage& img) {
  IntegralImage ii;
  ii.width = img.width;
  ii.height = img.height;
  ii.table.assign(size_t(img.width + 1) * (img.height + 1), 0.0);
  for (int y = 0; y < img.height; ++y) {
    double row_sum = 0.0;
    for (int x = 0; x < img.width; ++x) {
      row_sum += img.at(x, y);
      ii.table[size_t(y + 1) * (img.width + 1) + (x + 1)] =
          ii.table[size_t(y) * (img.width + 1) + (x + 1)] + row_sum;
    }
  }
  return ii;
}

// Sum over the rectangle [x0, x0+w) x [y0, y0+h), clamped to the image.
// Degenerate or fully-outside rectangles sum to zero.
inline double box_sum(const IntegralImage& ii, int x0, int y0, int w, int h) {
  int x1 = std::min(x0 + w, ii.width);
  int y1 = std::min(y0 + h, ii.height);
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  if (x0 >= x1 || y0 >= y1) return 0.0;
  return ii.at(x1, y1) - ii.at(x0, y1) - ii.at(x1, y0) + ii.at(x0, y0);
}

}  // namespace lensless
