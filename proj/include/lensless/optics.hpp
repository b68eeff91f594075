#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lensless/errors.hpp"
#include "lensless/image.hpp"
#include "lensless/mnist.hpp"
#include "lensless/parallel.hpp"
#include "lensless/rng.hpp"

namespace lensless {

enum class SensorMode { Geometric, CodedMask };

struct CaptureConfig {
  int scene_width = 28;
  int scene_height = 28;
  int sensor_width = 64;
  int sensor_height = 48;
  double distance = 250.0;      // mm, scene plane to sensor plane
  double lcd_pitch = 3.0;       // mm per scene pixel
  double sensor_pitch = 0.06;   // mm per sensor pixel
  int n_avg = 100;
  // Dimensionless gain standing in for exposure time. When exposure_auto is
  // set the gain is resolved at model-build time so that an all-ones scene
  // peaks at exactly 1.0 on the brightest sensor pixel (no clipping, full
  // dynamic range); an explicit exposure_scale turns that off.
  double exposure_scale = 1.0;
  bool exposure_auto = true;
  int bit_depth = 8;
  SensorMode mode = SensorMode::CodedMask;
  uint64_t mask_seed = 1;
  double mask_open_fraction = 0.5;
  // Scene embedding: source images that do not match the scene raster are
  // rescaled (nearest-neighbor) so their limiting side covers this fraction
  // of the scene, then centered.
  double fill_fraction = 1.0;
  // Transfer matrices larger than this are refused rather than thrashing.
  size_t memory_budget_bytes = size_t(2) << 30;

  size_t scene_pixels() const { return size_t(scene_width) * scene_height; }
  size_t sensor_pixels() const { return size_t(sensor_width) * sensor_height; }
};

inline void validate_config(const CaptureConfig& c) {
  if (c.scene_width <= 0 || c.scene_height <= 0 || c.sensor_width <= 0 || c.sensor_height <= 0) {
    fail(ErrorKind::Config, "scene and sensor dimensions must be positive");
  }
  if (!(c.distance > 0.0)) fail(ErrorKind::Config, "distance must be > 0");
  if (c.n_avg < 1) fail(ErrorKind::Config, "n_avg must be >= 1");
  if (c.bit_depth < 1 || c.bit_depth > 16) fail(ErrorKind::Config, "bit_depth must be in [1,16]");
  if (!(c.lcd_pitch > 0.0) || !(c.sensor_pitch > 0.0)) {
    fail(ErrorKind::Config, "pixel pitches must be > 0");
  }
  if (!(c.mask_open_fraction > 0.0 && c.mask_open_fraction <= 1.0)) {
    fail(ErrorKind::Config, "mask_open_fraction must be in (0,1]");
  }
  if (!(c.fill_fraction > 0.0 && c.fill_fraction <= 1.0)) {
    fail(ErrorKind::Config, "fill_fraction must be in (0,1]");
  }
  if (!c.exposure_auto && !(c.exposure_scale > 0.0)) {
    fail(ErrorKind::Config, "exposure_scale must be > 0");
  }
}

struct NoiseConfig {
  double read_sigma = 0.01;   // Gaussian read-noise std per raw frame
  double shot_scale = 10000;  // photons per unit intensity
  bool enabled = true;
};

inline void validate_noise(const NoiseConfig& n) {
  if (n.read_sigma < 0.0) fail(ErrorKind::Config, "read_sigma must be >= 0");
  if (n.enabled && !(n.shot_scale > 0.0)) {
    fail(ErrorKind::Config, "shot_scale must be > 0 when noise is enabled");
  }
}

// Dense scene->sensor transfer matrix, row-major: transfer[s * scene_pixels + p].
struct SensorModel {
  CaptureConfig config;  // exposure_scale holds the resolved gain
  std::vector<float> transfer;

  float entry(size_t s, size_t p) const { return transfer[s * config.scene_pixels() + p]; }
};

// Geometric weight between scene pixel p and sensor pixel s: a small emitter
// seen from distance r at obliquity theta contributes cos^4(theta)/r^2, which
// with cos(theta) = d/r collapses to d^4/r^6. Both pixel grids are centered
// on the optical axis.
inline SensorModel build_sensor_model(const CaptureConfig& config_in) {
  CaptureConfig config = config_in;
  validate_config(config);
  size_t np = config.scene_pixels();
  size_t ns = config.sensor_pixels();
  size_t bytes = ns * np * sizeof(float);
  if (bytes > config.memory_budget_bytes) {
    fail(ErrorKind::Capacity,
         "transfer matrix needs " + std::to_string(bytes) + " bytes (budget " +
             std::to_string(config.memory_budget_bytes) +
             "); reduce sensor or scene resolution");
  }

  double d = config.distance;
  double d4 = d * d * d * d;
  std::vector<double> scene_x(np), scene_y(np);
  for (int sy = 0; sy < config.scene_height; ++sy) {
    for (int sx = 0; sx < config.scene_width; ++sx) {
      size_t p = size_t(sy) * config.scene_width + sx;
      scene_x[p] = (sx - (config.scene_width - 1) / 2.0) * config.lcd_pitch;
      scene_y[p] = (sy - (config.scene_height - 1) / 2.0) * config.lcd_pitch;
    }
  }

  std::vector<double> geo(ns * np);
  double max_row_sum = 0.0;
  for (int ty = 0; ty < config.sensor_height; ++ty) {
    for (int tx = 0; tx < config.sensor_width; ++tx) {
      size_t s = size_t(ty) * config.sensor_width + tx;
      double px = (tx - (config.sensor_width - 1) / 2.0) * config.sensor_pitch;
      double py = (ty - (config.sensor_height - 1) / 2.0) * config.sensor_pitch;
      double row_sum = 0.0;
      for (size_t p = 0; p < np; ++p) {
        double dx = scene_x[p] - px;
        double dy = scene_y[p] - py;
        double r2 = dx * dx + dy * dy + d * d;
        double w = d4 / (r2 * r2 * r2);
        geo[s * np + p] = w;
        row_sum += w;
      }
      max_row_sum = std::max(max_row_sum, row_sum);
    }
  }

  if (config.exposure_auto) {
    config.exposure_scale = 1.0 / max_row_sum;
  }

  SensorModel model;
  model.transfer.resize(ns * np);
  if (config.mode == SensorMode::CodedMask) {
    Rng mask_rng(config.mask_seed);
    for (size_t i = 0; i < geo.size(); ++i) {
      double m = mask_rng.uniform() < config.mask_open_fraction ? 1.0 : 0.0;
      model.transfer[i] = float(geo[i] * m * config.exposure_scale);
    }
  } else {
    for (size_t i = 0; i < geo.size(); ++i) {
      model.transfer[i] = float(geo[i] * config.exposure_scale);
    }
  }
  model.config = config;
  return model;
}

// Raw linear response y = A * vec(scene), double precision, no clipping.
inline std::vector<double> sensor_forward(const GrayImage& scene, const SensorModel& model) {
  const CaptureConfig& c = model.config;
  if (scene.width != c.scene_width || scene.height != c.scene_height) {
    fail(ErrorKind::Shape, "scene is " + std::to_string(scene.width) + "x" +
                               std::to_string(scene.height) + " but model expects " +
                               std::to_string(c.scene_width) + "x" +
                               std::to_string(c.scene_height));
  }
  size_t np = c.scene_pixels();
  size_t ns = c.sensor_pixels();
  std::vector<double> y(ns, 0.0);
  for (size_t s = 0; s < ns; ++s) {
    const float* row = model.transfer.data() + s * np;
    double acc = 0.0;
    for (size_t p = 0; p < np; ++p) {
      acc += double(row[p]) * double(scene.data[p]);
    }
    y[s] = acc;
  }
  return y;
}

struct NoiselessOptions {
  bool clip = true;           // clamp to [0,1] (default path)
  bool max_normalize = false; // divide by the frame max instead
};

inline GrayImage capture_noiseless(const GrayImage& scene, const SensorModel& model,
                                   NoiselessOptions opts = {}) {
  std::vector<double> y = sensor_forward(scene, model);
  GrayImage frame(model.config.sensor_width, model.config.sensor_height);
  if (opts.max_normalize) {
    double peak = 0.0;
    for (double v : y) peak = std::max(peak, v);
    double inv = peak > 0.0 ? 1.0 / peak : 0.0;
    for (size_t i = 0; i < y.size(); ++i) frame.data[i] = float(y[i] * inv);
  } else if (opts.clip) {
    for (size_t i = 0; i < y.size(); ++i) frame.data[i] = float(std::clamp(y[i], 0.0, 1.0));
  } else {
    for (size_t i = 0; i < y.size(); ++i) frame.data[i] = float(y[i]);
  }
  return frame;
}

// Full capture: per raw frame add noise, clip, quantize; then average the
// n_avg quantized frames. Shot noise (variance y/shot_scale, Gaussian
// approximation) and read noise (std read_sigma) are independent Gaussians,
// so they are drawn as a single normal with the combined variance.
inline GrayImage capture(const GrayImage& scene, const SensorModel& model,
                         const NoiseConfig& noise, uint64_t seed) {
  validate_noise(noise);
  std::vector<double> y = sensor_forward(scene, model);
  const CaptureConfig& c = model.config;
  size_t ns = y.size();
  double maxq = double((uint32_t(1) << c.bit_depth) - 1);
  std::vector<double> acc(ns, 0.0);
  Rng rng(seed);
  for (int f = 0; f < c.n_avg; ++f) {
    for (size_t i = 0; i < ns; ++i) {
      double v = y[i];
      if (noise.enabled) {
        double var = std::max(0.0, v) / noise.shot_scale + noise.read_sigma * noise.read_sigma;
        v += std::sqrt(var) * rng.normal();
      }
      v = std::clamp(v, 0.0, 1.0);
      v = std::floor(v * maxq + 0.5) / maxq;
      acc[i] += v;
    }
  }
  GrayImage frame(c.sensor_width, c.sensor_height);
  for (size_t i = 0; i < ns; ++i) frame.data[i] = float(acc[i] / c.n_avg);
  return frame;
}

// Embeds a source image into the model's scene raster if needed, honoring the
// configured fill fraction, then captures it with the per-image seed.
inline GrayImage capture_source_image(const GrayImage& src, const SensorModel& model,
                                      const NoiseConfig& noise, uint64_t image_seed) {
  const CaptureConfig& c = model.config;
  if (src.width == c.scene_width && src.height == c.scene_height && c.fill_fraction == 1.0) {
    return capture(src, model, noise, image_seed);
  }
  GrayImage scene = embed_centered(src, c.scene_width, c.scene_height, c.fill_fraction);
  return capture(scene, model, noise, image_seed);
}

// Per-image seeds are seed ^ index so any subset regenerates independently.
inline uint64_t image_capture_seed(uint64_t dataset_seed, size_t index) {
  return dataset_seed ^ uint64_t(index);
}

inline LabeledDataset simulate_dataset(const LabeledDataset& dataset, const SensorModel& model,
                                       const NoiseConfig& noise, uint64_t seed,
                                       unsigned threads = 0) {
  LabeledDataset out;
  out.images.resize(dataset.images.size());
  out.labels = dataset.labels;
  out.class_set = dataset.class_set;
  parallel_for(dataset.images.size(), threads, [&](size_t i) {
    try {
      out.images[i] =
          capture_source_image(dataset.images[i], model, noise, image_capture_seed(seed, i));
    } catch (const Error& e) {
      fail(e.kind(), "image " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace lensless
