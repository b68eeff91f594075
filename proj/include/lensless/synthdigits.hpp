#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "lensless/image.hpp"
#include "lensless/mnist.hpp"
#include "lensless/rng.hpp"

namespace lensless {

// Procedural handwritten-style digits: stroke skeletons warped by a seeded
// random affine and rasterized with a soft round pen. A stand-in corpus for
// environments without the real digit files — same 28x28 format, same IDX
// container, deterministic down to the byte for a given seed.

namespace synth {

struct Seg {
  double x0, y0, x1, y1;
};

// Skeletons in a unit box, y growing downward.
inline const std::vector<Seg>& skeleton(int digit) {
  static const std::vector<std::vector<Seg>> all = [] {
    std::vector<std::vector<Seg>> s(10);
    auto poly = [](std::vector<Seg>& out, std::initializer_list<std::pair<double, double>> pts) {
      const std::pair<double, double>* prev = nullptr;
      for (const auto& p : pts) {
        if (prev) out.push_back({prev->first, prev->second, p.first, p.second});
        prev = &p;
      }
    };
    auto ellipse = [](std::vector<Seg>& out, double cx, double cy, double rx, double ry) {
      const int n = 14;
      for (int i = 0; i < n; ++i) {
        double a0 = 2.0 * 3.14159265358979323846 * i / n;
        double a1 = 2.0 * 3.14159265358979323846 * (i + 1) / n;
        out.push_back({cx + rx * std::cos(a0), cy + ry * std::sin(a0),
                       cx + rx * std::cos(a1), cy + ry * std::sin(a1)});
      }
    };
    ellipse(s[0], 0.50, 0.50, 0.22, 0.32);
    poly(s[1], {{0.40, 0.28}, {0.52, 0.18}, {0.52, 0.82}});
    poly(s[2], {{0.30, 0.34}, {0.34, 0.22}, {0.50, 0.17}, {0.66, 0.23}, {0.69, 0.36},
                {0.30, 0.80}, {0.72, 0.80}});
    poly(s[3], {{0.32, 0.22}, {0.48, 0.16}, {0.64, 0.24}, {0.62, 0.40}, {0.48, 0.47}});
    poly(s[3], {{0.48, 0.47}, {0.66, 0.56}, {0.68, 0.72}, {0.52, 0.82}, {0.33, 0.77}});
    poly(s[4], {{0.60, 0.18}, {0.28, 0.60}, {0.76, 0.60}});
    poly(s[4], {{0.62, 0.40}, {0.62, 0.84}});
    poly(s[5], {{0.68, 0.18}, {0.35, 0.18}, {0.33, 0.47}, {0.52, 0.43}, {0.67, 0.53},
                {0.66, 0.72}, {0.50, 0.81}, {0.33, 0.76}});
    poly(s[6], {{0.62, 0.19}, {0.44, 0.30}, {0.35, 0.50}, {0.36, 0.70}, {0.50, 0.81},
                {0.64, 0.71}, {0.62, 0.55}, {0.47, 0.50}, {0.37, 0.58}});
    poly(s[7], {{0.28, 0.20}, {0.72, 0.20}, {0.44, 0.82}});
    ellipse(s[8], 0.50, 0.33, 0.17, 0.15);
    ellipse(s[8], 0.50, 0.65, 0.20, 0.17);
    ellipse(s[9], 0.54, 0.34, 0.18, 0.16);
    poly(s[9], {{0.72, 0.36}, {0.64, 0.82}});
    return s;
  }();
  return all[digit];
}

inline double seg_dist2(const Seg& s, double px, double py) {
  double vx = s.x1 - s.x0, vy = s.y1 - s.y0;
  double wx = px - s.x0, wy = py - s.y0;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
  double dx = wx - t * vx, dy = wy - t * vy;
  return dx * dx + dy * dy;
}

// Split long segments so the elastic field can bend strokes, not just move them.
inline std::vector<Seg> subdivide(const std::vector<Seg>& segs, double max_len) {
  std::vector<Seg> out;
  for (const Seg& s : segs) {
    double len = std::hypot(s.x1 - s.x0, s.y1 - s.y0);
    int pieces = std::max(1, int(std::ceil(len / max_len)));
    for (int i = 0; i < pieces; ++i) {
      double t0 = double(i) / pieces, t1 = double(i + 1) / pieces;
      out.push_back({s.x0 + (s.x1 - s.x0) * t0, s.y0 + (s.y1 - s.y0) * t0,
                     s.x0 + (s.x1 - s.x0) * t1, s.y0 + (s.y1 - s.y0) * t1});
    }
  }
  return out;
}

// Smooth low-frequency displacement field: a few random plane waves per axis.
struct Wave {
  double amp, fx, fy, phase;
};

}  // namespace synth

// One 28x28 digit image; the style seed controls the affine warp, the elastic
// wobble, the pen, and the ink level.
inline GrayImage synth_digit(int digit, uint64_t style_seed) {
  Rng rng(style_seed);
  double angle = (rng.uniform() - 0.5) * 0.55;          // radians
  double shear = (rng.uniform() - 0.5) * 0.45;
  double scale_x = 0.62 + rng.uniform() * 0.55;
  double scale_y = 0.72 + rng.uniform() * 0.45;
  double dx = (rng.uniform() - 0.5) * 0.16;
  double dy = (rng.uniform() - 0.5) * 0.16;
  double thickness = 0.035 + rng.uniform() * 0.050;     // pen radius, unit box
  double u_ink = rng.uniform();
  double ink = 1.0 - 0.55 * u_ink * u_ink;              // mostly dark, faint tail
  double u_wob = rng.uniform();
  double wobble = u_wob * u_wob * 0.045;                // mostly gentle, wild tail
  double ca = std::cos(angle), sa = std::sin(angle);

  std::array<synth::Wave, 2> waves_x, waves_y;
  for (auto* waves : {&waves_x, &waves_y}) {
    for (synth::Wave& w : *waves) {
      w.amp = wobble * (0.5 + 0.5 * rng.uniform());
      double freq = 1.0 + rng.uniform() * 1.8;          // cycles per unit box
      double dir = rng.uniform() * 2.0 * 3.14159265358979323846;
      w.fx = freq * std::cos(dir);
      w.fy = freq * std::sin(dir);
      w.phase = rng.uniform() * 2.0 * 3.14159265358979323846;
    }
  }
  auto field = [](const std::array<synth::Wave, 2>& waves, double x, double y) {
    double d = 0.0;
    for (const synth::Wave& w : waves) {
      d += w.amp * std::sin(2.0 * 3.14159265358979323846 * (w.fx * x + w.fy * y) + w.phase);
    }
    return d;
  };

  // Transform the subdivided skeleton around the box center, then wobble it.
  std::vector<synth::Seg> segs = synth::subdivide(synth::skeleton(digit), 0.07);
  auto warp_x = [&](double x, double y) {
    double u = (x - 0.5) * scale_x + shear * (y - 0.5);
    double v = (y - 0.5) * scale_y;
    return 0.5 + dx + ca * u - sa * v + field(waves_x, x, y);
  };
  auto warp_y = [&](double x, double y) {
    double u = (x - 0.5) * scale_x + shear * (y - 0.5);
    double v = (y - 0.5) * scale_y;
    return 0.5 + dy + sa * u + ca * v + field(waves_y, x, y);
  };
  for (synth::Seg& s : segs) {
    double nx0 = warp_x(s.x0, s.y0), ny0 = warp_y(s.x0, s.y0);
    double nx1 = warp_x(s.x1, s.y1), ny1 = warp_y(s.x1, s.y1);
    s = {nx0, ny0, nx1, ny1};
  }

  // Stray background marks: faint straight strokes the classifier has to
  // learn to ignore (smudges, stuck pixels, backlight streaks).
  struct Layer {
    std::vector<synth::Seg> segs;
    double thickness, gain;
  };
  std::vector<Layer> layers;
  layers.push_back({std::move(segs), thickness, ink});
  size_t n_clutter = 1 + rng.below(3);
  for (size_t c = 0; c < n_clutter; ++c) {
    double x0 = 0.05 + rng.uniform() * 0.90;
    double y0 = 0.05 + rng.uniform() * 0.90;
    double dir = rng.uniform() * 2.0 * 3.14159265358979323846;
    double len = 0.15 + rng.uniform() * 0.30;
    double pen = 0.020 + rng.uniform() * 0.025;
    double gain = 0.10 + rng.uniform() * 0.25;
    layers.push_back({{{x0, y0, x0 + len * std::cos(dir), y0 + len * std::sin(dir)}},
                      pen, gain});
  }

  GrayImage img(28, 28);
  for (int py = 0; py < 28; ++py) {
    for (int px = 0; px < 28; ++px) {
      double x = (px + 0.5) / 28.0, y = (py + 0.5) / 28.0;
      double acc = 0.0;
      for (const Layer& layer : layers) {
        double reach = layer.thickness * 1.6;
        double best2 = 1e9;
        for (const synth::Seg& s : layer.segs) {
          if (x < std::min(s.x0, s.x1) - reach || x > std::max(s.x0, s.x1) + reach ||
              y < std::min(s.y0, s.y1) - reach || y > std::max(s.y0, s.y1) + reach) {
            continue;
          }
          best2 = std::min(best2, synth::seg_dist2(s, x, y));
        }
        // Soft pen: full ink inside half the radius, smooth falloff to 1.6x.
        double d = std::sqrt(best2);
        double v = (reach - d) / (reach - layer.thickness * 0.5);
        v = std::clamp(v, 0.0, 1.0);
        acc += v * v * (3.0 - 2.0 * v) * layer.gain;
      }
      img.at(px, py) = float(std::lround(std::min(acc, 1.0) * 255.0)) / 255.0f;
    }
  }
  return img;
}

inline LabeledDataset synth_digit_dataset(size_t count, uint64_t seed) {
  LabeledDataset ds;
  ds.images.reserve(count);
  ds.labels.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    uint64_t item_seed = mix64(seed, uint64_t(i));
    int digit = int(item_seed % 10);  // roughly uniform classes
    ds.images.push_back(synth_digit(digit, mix64(item_seed, 0x7a57e)));
    ds.labels.push_back(digit);
  }
  ds.rebuild_class_set();
  return ds;
}

// Writes a full train/test IDX quartet under dir unless already present.
inline void ensure_synth_dataset_dir(const std::filesystem::path& dir, uint64_t seed = 987654321,
                                     size_t n_train = 60000, size_t n_test = 10000) {
  namespace fs = std::filesystem;
  bool complete = fs::exists(dir / "train-images") && fs::exists(dir / "train-labels") &&
                  fs::exists(dir / "t10k-images") && fs::exists(dir / "t10k-labels");
  if (complete) return;
  fs::create_directories(dir);
  auto write_pair = [&](const LabeledDataset& ds, const std::string& img_name,
                        const std::string& lbl_name) {
    auto dump = [&](const std::vector<uint8_t>& bytes, const fs::path& p) {
      std::ofstream out(p, std::ios::binary);
      out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
      if (!out) fail(ErrorKind::Io, "write failed: " + p.string());
    };
    dump(serialize_idx_images(ds.images), dir / img_name);
    dump(serialize_idx_labels(ds.labels), dir / lbl_name);
  };
  write_pair(synth_digit_dataset(n_train, mix64(seed, 1)), "train-images", "train-labels");
  write_pair(synth_digit_dataset(n_test, mix64(seed, 2)), "t10k-images", "t10k-labels");
}

}  // namespace lensless
