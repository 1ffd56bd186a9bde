#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ife/tensor.hpp"

namespace ife {

struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // 3 * width * height, row-major RGB
};

struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // width * height, row-major
};

FloatImage float_image_from(const Tensor& hw);  // from an H x W (or 1 x H x W) tensor

enum class MaskNorm { Max, Sum };
enum class Colormap { Grayscale, Heat };

struct OverlayConfig {
  double darken = 0.25;  // brightness floor for zero-attention regions
  MaskNorm norm = MaskNorm::Max;
  Colormap colormap = Colormap::Grayscale;
};

// Nearest-neighbor block replication of an H_f x W_f mask to out_h x out_w;
// block edges follow the same rounding rule as the audit module's naive
// upsample map.
FloatImage upsample_nearest(const Tensor& mask, int out_h, int out_w);

// frame in [0, 1] darkened to `darken` where attention is zero, full
// brightness where the normalized mask reaches 1. An all-zero mask falls back
// to the fully darkened frame (with a warning on stderr).
ImageRGB overlay(const FloatImage& frame, const FloatImage& up_mask, const OverlayConfig& cfg = {});

// Two images side by side, separated by a black gap column.
ImageRGB hstack(const ImageRGB& left, const ImageRGB& right, int gap = 2);

// Binary P6: "P6\n<w> <h>\n255\n" + raw RGB bytes.
void write_ppm(const ImageRGB& img, const std::string& path);
ImageRGB read_ppm(const std::string& path);

}  // namespace ife
