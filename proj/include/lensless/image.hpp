#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lensless/errors.hpp"

namespace lensless {

// 2-D grayscale raster with row-major intensities in [0, 1]. Used for both
// scene images (e.g. 28x28 digits) and sensor frames.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(size_t(w) * size_t(h), fill) {}

  float& at(int x, int y) { return data[size_t(y) * width + x]; }
  float at(int x, int y) const { return data[size_t(y) * width + x]; }
  size_t pixel_count() const { return data.size(); }
};

inline void validate_image(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.data.size() != size_t(img.width) * size_t(img.height)) {
    fail(ErrorKind::Shape, "image dimensions do not match payload size");
  }
  for (float v : img.data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      fail(ErrorKind::Domain, "image intensity outside [0,1]");
    }
  }
}

// Nearest-neighbor resample of `src` to target_w x target_h.
inline GrayImage resize_nearest(const GrayImage& src, int target_w, int target_h) {
  GrayImage out(target_w, target_h);
  for (int y = 0; y < target_h; ++y) {
    int sy = std::min(src.height - 1, int(double(y) * src.height / target_h));
    for (int x = 0; x < target_w; ++x) {
      int sx = std::min(src.width - 1, int(double(x) * src.width / target_w));
      out.at(x, y) = src.at(sx, sy);
    }
  }
  return out;
}

// Embeds `src` centered in a scene_w x scene_h raster, first rescaling it by
// nearest-neighbor so its larger side covers `fill_fraction` of the limiting
// scene dimension. Background is zero emission.
inline GrayImage embed_centered(const GrayImage& src, int scene_w, int scene_h,
                                double fill_fraction) {
  if (fill_fraction <= 0.0 || fill_fraction > 1.0) {
    fail(ErrorKind::Config, "fill_fraction must be in (0,1]");
  }
  if (src.width == scene_w && src.height == scene_h && fill_fraction == 1.0) {
    return src;
  }
  double scale = fill_fraction *
                 std::min(double(scene_w) / src.width, double(scene_h) / src.height);
  int tw = std::max(1, int(std::lround(src.width * scale)));
  int th = std::max(1, int(std::lround(src.height * scale)));
  GrayImage scaled = (tw == src.width && th == src.height)
                         ? src
                         : resize_nearest(src, tw, th);
  GrayImage out(scene_w, scene_h);
  int ox = (scene_w - tw) / 2;
  int oy = (scene_h - th) / 2;
  for (int y = 0; y < th; ++y) {
    for (int x = 0; x < tw; ++x) {
      out.at(ox + x, oy + y) = scaled.at(x, y);
    }
  }
  return out;
}

// -------------------------------------------------------------------------
// Binary PGM (P5, maxval 255), the frame export/import format.
// -------------------------------------------------------------------------

inline void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open for writing: " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> bytes(img.pixel_count());
  for (size_t i = 0; i < bytes.size(); ++i) {
    float v = std::clamp(img.data[i], 0.0f, 1.0f);
    bytes[i] = uint8_t(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open: " + path.string());

  auto next_token = [&]() -> std::string {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {  // comment to end of line
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(char(c));
    }
    return tok;
  };

  if (next_token() != "P5") fail(ErrorKind::Format, "not a binary PGM (P5): " + path.string());
  std::string ws = next_token(), hs = next_token(), ms = next_token();
  if (ws.empty() || hs.empty() || ms.empty()) {
    fail(ErrorKind::Truncation, "incomplete PGM header: " + path.string());
  }
  int w = std::stoi(ws), h = std::stoi(hs), maxval = std::stoi(ms);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    fail(ErrorKind::Format, "unsupported PGM geometry in " + path.string());
  }
  GrayImage img(w, h);
  std::vector<uint8_t> bytes(img.pixel_count());
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  if (in.gcount() != std::streamsize(bytes.size())) {
    fail(ErrorKind::Truncation, "PGM payload shorter than header declares: " + path.string());
  }
  for (size_t i = 0; i < bytes.size(); ++i) {
    img.data[i] = float(bytes[i]) / float(maxval);
  }
  return img;
}

}  // namespace lensless
