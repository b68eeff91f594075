#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image.hpp"
#include "lensless/integral.hpp"

namespace lensless {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.2;         // 1.2 * filter_size / 9
  double orientation = 0.0;   // radians in [0, 2pi)
  double response = 0.0;      // interpolated Hessian determinant
  int laplacian_sign = 1;
};

using Descriptor = std::array<float, 64>;

struct DetectorParams {
  double threshold = 1e-4;  // on the area-normalized determinant
  int octaves = 4;
};

namespace detail {

// Box-filter size ladder: octave o contributes four sizes starting where the
// previous octave's second size sits, with doubled spacing (9,15,21,27 /
// 15,27,39,51 / ...). Detection runs over the deduplicated union so adjacent
// octaves share border layers instead of re-detecting them.
inline std::vector<int> filter_ladder(int octaves) {
  std::vector<int> sizes;
  int start = 9, step = 6;
  for (int o = 0; o < octaves; ++o) {
    for (int i = 0; i < 4; ++i) sizes.push_back(start + i * step);
    start += step;
    step *= 2;
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

struct HessianLayer {
  int size = 0;    // box filter side length L
  int border = 0;  // (L-1)/2; responses valid for x,y in [border, dim-1-border]
  std::vector<double> response;  // width x height, zero outside the valid region
  std::vector<int8_t> lap_sign;

  bool valid(int x, int y, int w, int h) const {
    return x >= border && y >= border && x <= w - 1 - border && y <= h - 1 - border;
  }
};

inline HessianLayer build_layer(const IntegralImage& ii, int size) {
  HessianLayer layer;
  layer.size = size;
  layer.border = (size - 1) / 2;
  int w = ii.width, h = ii.height;
  layer.response.assign(size_t(w) * h, 0.0);
  layer.lap_sign.assign(size_t(w) * h, 0);
  int b = layer.border;
  int l = size / 3;                   // lobe length (odd)
  double inv_area = 1.0 / (double(size) * size);
  for (int y = b; y <= h - 1 - b; ++y) {
    for (int x = b; x <= w - 1 - b; ++x) {
      // Second-order box filters of the Fast-Hessian (Dxx/Dyy: full band
      // minus three times the middle third; Dxy: four diagonal quadrants).
      double dxx = box_sum(ii, x - b, y - l + 1, size, 2 * l - 1) -
                   3.0 * box_sum(ii, x - l / 2, y - l + 1, l, 2 * l - 1);
      double dyy = box_sum(ii, x - l + 1, y - b, 2 * l - 1, size) -
                   3.0 * box_sum(ii, x - l + 1, y - l / 2, 2 * l - 1, l);
      double dxy = box_sum(ii, x + 1, y - l, l, l) + box_sum(ii, x - l, y + 1, l, l) -
                   box_sum(ii, x - l, y - l, l, l) - box_sum(ii, x + 1, y + 1, l, l);
      dxx *= inv_area;
      dyy *= inv_area;
      dxy *= inv_area;
      size_t idx = size_t(y) * w + x;
      layer.response[idx] = dxx * dyy - 0.81 * dxy * dxy;
      layer.lap_sign[idx] = (dxx + dyy) >= 0.0 ? int8_t(1) : int8_t(-1);
    }
  }
  return layer;
}

// Solves the 3x3 system H * offset = -g by Cramer's rule; returns false when
// the Hessian is numerically singular.
inline bool solve3(const double H[3][3], const double g[3], double out[3]) {
  double det = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
               H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
               H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
  if (std::abs(det) < 1e-15) return false;
  double b[3] = {-g[0], -g[1], -g[2]};
  for (int col = 0; col < 3; ++col) {
    double M[3][3];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) M[r][c] = (c == col) ? b[r] : H[r][c];
    }
    double d = M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
               M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
               M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    out[col] = d / det;
  }
  return true;
}

}  // namespace detail

inline std::vector<Keypoint> detect_keypoints(const IntegralImage& ii,
                                              const DetectorParams& params = {}) {
  int w = ii.width, h = ii.height;
  std::vector<Keypoint> out;
  if (w < 9 || h < 9) return out;

  std::vector<int> sizes = detail::filter_ladder(params.octaves);
  std::vector<detail::HessianLayer> layers;
  layers.reserve(sizes.size());
  for (int size : sizes) {
    if ((size - 1) / 2 > (std::min(w, h) - 1) / 2) break;  // filter no longer fits
    layers.push_back(detail::build_layer(ii, size));
  }

  for (size_t m = 1; m + 1 < layers.size(); ++m) {
    const auto& lo = layers[m - 1];
    const auto& mid = layers[m];
    const auto& hi = layers[m + 1];
    // The whole 3x3x3 neighborhood must lie in every layer's valid region;
    // the coarsest layer has the tightest border.
    int b = hi.border + 1;
    for (int y = b; y <= h - 1 - b; ++y) {
      for (int x = b; x <= w - 1 - b; ++x) {
        double r0 = mid.response[size_t(y) * w + x];
        if (!(r0 > params.threshold)) continue;
        bool is_max = true;
        for (int dy = -1; dy <= 1 && is_max; ++dy) {
          for (int dx = -1; dx <= 1 && is_max; ++dx) {
            size_t n = size_t(y + dy) * w + (x + dx);
            if (lo.response[n] >= r0 || hi.response[n] >= r0) is_max = false;
            if ((dx != 0 || dy != 0) && mid.response[n] >= r0) is_max = false;
          }
        }
        if (!is_max) continue;

        // Quadratic interpolation over (x, y, layer index).
        auto R = [&](const detail::HessianLayer& L, int xx, int yy) {
          return L.response[size_t(yy) * w + xx];
        };
        double g[3] = {(R(mid, x + 1, y) - R(mid, x - 1, y)) / 2.0,
                       (R(mid, x, y + 1) - R(mid, x, y - 1)) / 2.0,
                       (R(hi, x, y) - R(lo, x, y)) / 2.0};
        double H[3][3];
        H[0][0] = R(mid, x + 1, y) - 2.0 * r0 + R(mid, x - 1, y);
        H[1][1] = R(mid, x, y + 1) - 2.0 * r0 + R(mid, x, y - 1);
        H[2][2] = R(hi, x, y) - 2.0 * r0 + R(lo, x, y);
        H[0][1] = H[1][0] = (R(mid, x + 1, y + 1) - R(mid, x - 1, y + 1) -
                             R(mid, x + 1, y - 1) + R(mid, x - 1, y - 1)) /
                            4.0;
        H[0][2] = H[2][0] =
            (R(hi, x + 1, y) - R(hi, x - 1, y) - R(lo, x + 1, y) + R(lo, x - 1, y)) / 4.0;
        H[1][2] = H[2][1] =
            (R(hi, x, y + 1) - R(hi, x, y - 1) - R(lo, x, y + 1) + R(lo, x, y - 1)) / 4.0;
        double off[3];
        if (!detail::solve3(H, g, off)) continue;
        if (std::abs(off[0]) >= 0.5 || std::abs(off[1]) >= 0.5 || std::abs(off[2]) >= 0.5) {
          continue;
        }

        Keypoint kp;
        kp.x = x + off[0];
        kp.y = y + off[1];
        double size_step = (hi.size - lo.size) / 2.0;
        kp.scale = 1.2 * (mid.size + off[2] * size_step) / 9.0;
        kp.response =
            r0 + 0.5 * (g[0] * off[0] + g[1] * off[1] + g[2] * off[2]);
        kp.laplacian_sign = mid.lap_sign[size_t(y) * w + x];
        out.push_back(kp);
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return out;
}

// Dense sampling for smooth frames: fixed nodes, upright orientation, zero
// response. The margin uses the smallest scale so every scale shares one node
// set (coarser descriptor windows just clamp at the borders).
inline std::vector<Keypoint> grid_keypoints(int width, int height, int step,
                                            const std::vector<double>& scales) {
  if (step < 1) fail(ErrorKind::Config, "grid step must be >= 1");
  if (scales.empty()) fail(ErrorKind::Config, "grid needs at least one scale");
  double min_scale = *std::min_element(scales.begin(), scales.end());
  if (min_scale <= 0.0) fail(ErrorKind::Config, "grid scales must be > 0");
  int margin = int(std::lround(10.0 * min_scale));
  // Nodes live on the absolute step lattice, restricted to the margin, so
  // a step exceeding the image yields no nodes at all.
  int first = ((margin + step - 1) / step) * step;
  std::vector<Keypoint> out;
  for (double scale : scales) {
    for (int y = first; y <= height - 1 - margin; y += step) {
      for (int x = first; x <= width - 1 - margin; x += step) {
        Keypoint kp;
        kp.x = x;
        kp.y = y;
        kp.scale = scale;
        out.push_back(kp);
      }
    }
  }
  return out;
}

namespace detail {

inline double gaussian2(double x, double y, double sigma) {
  return std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
}

// Haar wavelet responses over a square of side 2*half centered at (x, y):
// right-minus-left for the horizontal response, bottom-minus-top for the
// vertical one. Boundary overhang is handled by the clamped box sums.
inline double haar_x(const IntegralImage& ii, int x, int y, int half) {
  return box_sum(ii, x, y - half, half, 2 * half) -
         box_sum(ii, x - half, y - half, half, 2 * half);
}

inline double haar_y(const IntegralImage& ii, int x, int y, int half) {
  return box_sum(ii, x - half, y, 2 * half, half) -
         box_sum(ii, x - half, y - half, 2 * half, half);
}

inline double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  return a < 0.0 ? a + two_pi : a;
}

}  // namespace detail

// Dominant orientation: Gaussian-weighted Haar responses on a radius-6s disc,
// scanned by a pi/3 window in 0.15 rad steps; the window with the largest
// summed response wins (first such window on ties, i.e. the smaller angle).
inline double compute_orientation(const IntegralImage& ii, const Keypoint& kp) {
  const double pi = std::numbers::pi;
  int s = std::max(1, int(std::lround(kp.scale)));
  int cx = int(std::lround(kp.x));
  int cy = int(std::lround(kp.y));
  std::vector<double> res_x, res_y, ang;
  res_x.reserve(109);
  res_y.reserve(109);
  ang.reserve(109);
  for (int j = -6; j <= 6; ++j) {
    for (int i = -6; i <= 6; ++i) {
      if (i * i + j * j >= 36) continue;
      double g = detail::gaussian2(i, j, 2.5);
      double rx = g * detail::haar_x(ii, cx + i * s, cy + j * s, 2 * s);
      double ry = g * detail::haar_y(ii, cx + i * s, cy + j * s, 2 * s);
      if (rx == 0.0 && ry == 0.0) continue;
      res_x.push_back(rx);
      res_y.push_back(ry);
      ang.push_back(detail::wrap_angle(std::atan2(ry, rx)));
    }
  }
  double best_mag = 0.0, best_ori = 0.0;
  for (double a0 = 0.0; a0 < 2.0 * pi; a0 += 0.15) {
    double a1 = a0 + pi / 3.0;
    double sum_x = 0.0, sum_y = 0.0;
    for (size_t k = 0; k < ang.size(); ++k) {
      double a = ang[k];
      bool inside = a1 <= 2.0 * pi ? (a >= a0 && a < a1)
                                   : (a >= a0 || a < a1 - 2.0 * pi);
      if (inside) {
        sum_x += res_x[k];
        sum_y += res_y[k];
      }
    }
    double mag = sum_x * sum_x + sum_y * sum_y;
    if (mag > best_mag) {
      best_mag = mag;
      best_ori = detail::wrap_angle(std::atan2(sum_y, sum_x));
    }
  }
  return best_ori;
}

// 64-D descriptor: 4x4 subregions of a 20s window, 5x5 Haar samples each,
// Gaussian sigma 3.3s, (sum dx, sum|dx|, sum dy, sum|dy|) per subregion,
// L2-normalized. A flat patch keeps the all-zero vector.
inline Descriptor describe(const IntegralImage& ii, Keypoint& kp, bool upright) {
  if (kp.x < 0.0 || kp.y < 0.0 || kp.x >= ii.width || kp.y >= ii.height) {
    fail(ErrorKind::Domain, "keypoint outside image bounds");
  }
  if (!upright) kp.orientation = compute_orientation(ii, kp);
  double co = std::cos(kp.orientation);
  double si = std::sin(kp.orientation);
  double s = kp.scale;
  int half = std::max(1, int(std::lround(s)));  // half-size of the 2s Haar window

  std::array<double, 64> acc{};
  for (int sub_y = 0; sub_y < 4; ++sub_y) {
    for (int sub_x = 0; sub_x < 4; ++sub_x) {
      double sum_dx = 0.0, sum_adx = 0.0, sum_dy = 0.0, sum_ady = 0.0;
      for (int ky = 0; ky < 5; ++ky) {
        for (int kx = 0; kx < 5; ++kx) {
          // Sample offsets in scale units, spanning [-10, 10).
          double u = sub_x * 5 + kx - 9.5;
          double v = sub_y * 5 + ky - 9.5;
          double ox = upright ? u : (u * co - v * si);
          double oy = upright ? v : (u * si + v * co);
          int px = int(std::lround(kp.x + ox * s));
          int py = int(std::lround(kp.y + oy * s));
          double dx = detail::haar_x(ii, px, py, half);
          double dy = detail::haar_y(ii, px, py, half);
          double g = detail::gaussian2(u, v, 3.3);
          double rdx = upright ? g * dx : g * (dx * co + dy * si);
          double rdy = upright ? g * dy : g * (-dx * si + dy * co);
          sum_dx += rdx;
          sum_adx += std::abs(rdx);
          sum_dy += rdy;
          sum_ady += std::abs(rdy);
        }
      }
      size_t base = (size_t(sub_y) * 4 + sub_x) * 4;
      acc[base] = sum_dx;
      acc[base + 1] = sum_adx;
      acc[base + 2] = sum_dy;
      acc[base + 3] = sum_ady;
    }
  }

  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  Descriptor desc{};
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (size_t i = 0; i < 64; ++i) desc[i] = float(acc[i] * inv);
  }
  return desc;
}

// -------------------------------------------------------------------------
// Per-image extraction front-end
// -------------------------------------------------------------------------

struct FeatureParams {
  enum class Mode { Grid, Detector };
  Mode mode = Mode::Grid;
  int grid_step = 8;
  std::vector<double> grid_scales = {1.6, 3.2};
  bool upright = true;
  DetectorParams detector;
};

struct ImageFeatures {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
};

inline ImageFeatures extract_features(const GrayImage& image, const FeatureParams& params) {
  IntegralImage ii = integral_image(image);
  ImageFeatures out;
  out.keypoints = params.mode == FeatureParams::Mode::Grid
                      ? grid_keypoints(image.width, image.height, params.grid_step,
                                       params.grid_scales)
                      : detect_keypoints(ii, params.detector);
  out.descriptors.reserve(out.keypoints.size());
  for (Keypoint& kp : out.keypoints) {
    out.descriptors.push_back(describe(ii, kp, params.upright));
  }
  return out;
}

}  // namespace lensless
