#include "ife/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "ife/audit.hpp"

namespace ife {

FloatImage float_image_from(const Tensor& t) {
  Shape s = t.shape();
  if (s.size() == 3 && s[0] == 1) s = {s[1], s[2]};
  if (s.size() != 2)
    throw ShapeError("float_image_from: expected H x W tensor, got " + shape_str(t.shape()));
  return FloatImage{s[1], s[0], t.values()};
}

FloatImage upsample_nearest(const Tensor& mask, int out_h, int out_w) {
  if (mask.shape().size() != 2)
    throw ShapeError("upsample_nearest: mask must be 2-D, got " + shape_str(mask.shape()));
  int mh = mask.dim(0), mw = mask.dim(1);
  if (out_h < mh || out_w < mw)
    throw ShapeError("upsample_nearest: output " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " smaller than mask " + std::to_string(mh) + "x" + std::to_string(mw));
  FloatImage img{out_w, out_h, std::vector<double>(static_cast<size_t>(out_w) * out_h, 0.0)};
  for (int my = 0; my < mh; ++my) {
    audit::PixelInterval ys = audit::naive_upsample_interval(mh, out_h, my);
    for (int mx = 0; mx < mw; ++mx) {
      audit::PixelInterval xs = audit::naive_upsample_interval(mw, out_w, mx);
      double v = mask[my * mw + mx];
      for (int y = ys.begin; y < ys.end; ++y)
        for (int x = xs.begin; x < xs.end; ++x)
          img.values[static_cast<size_t>(y) * out_w + x] = v;
    }
  }
  return img;
}

namespace {
uint8_t quant8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 1.0) return 255;
  return static_cast<uint8_t>(std::floor(v * 255.0 + 0.5));
}

void heat_color(double m, double lum, uint8_t* rgb) {
  // Black-red-yellow-white ramp scaled onto the darkened frame.
  double r = std::min(1.0, 3.0 * m);
  double g = std::clamp(3.0 * m - 1.0, 0.0, 1.0);
  double b = std::clamp(3.0 * m - 2.0, 0.0, 1.0);
  rgb[0] = quant8(lum * r + lum * (1.0 - m));
  rgb[1] = quant8(lum * g + lum * (1.0 - m));
  rgb[2] = quant8(lum * b + lum * (1.0 - m));
}
}  // namespace

ImageRGB overlay(const FloatImage& frame, const FloatImage& up_mask, const OverlayConfig& cfg) {
  if (frame.width != up_mask.width || frame.height != up_mask.height)
    throw ShapeError("overlay: frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                     " and mask " + std::to_string(up_mask.width) + "x" + std::to_string(up_mask.height) +
                     " dims differ");
  if (cfg.darken < 0.0 || cfg.darken > 1.0) throw ValueError("overlay: darken factor must be in [0, 1]");

  double denom = 0.0;
  if (cfg.norm == MaskNorm::Max)
    denom = *std::max_element(up_mask.values.begin(), up_mask.values.end());
  else
    for (double v : up_mask.values) denom += v;
  if (denom <= 0.0) {
    std::cerr << "overlay: all-zero attention mask, emitting fully darkened frame\n";
    denom = 1.0;  // normalized mask becomes 0 everywhere
  }

  ImageRGB img;
  img.width = frame.width;
  img.height = frame.height;
  img.pixels.resize(3 * static_cast<size_t>(frame.width) * frame.height);
  for (size_t i = 0; i < frame.values.size(); ++i) {
    double m = up_mask.values[i] / denom;
    double lum = frame.values[i] * (cfg.darken + (1.0 - cfg.darken) * m);
    uint8_t* px = img.pixels.data() + 3 * i;
    if (cfg.colormap == Colormap::Grayscale) {
      px[0] = px[1] = px[2] = quant8(lum);
    } else {
      heat_color(m, lum, px);
    }
  }
  return img;
}

ImageRGB hstack(const ImageRGB& left, const ImageRGB& right, int gap) {
  if (left.height != right.height) throw ShapeError("hstack: image heights differ");
  ImageRGB out;
  out.height = left.height;
  out.width = left.width + gap + right.width;
  out.pixels.assign(3 * static_cast<size_t>(out.width) * out.height, 0);
  for (int y = 0; y < out.height; ++y) {
    std::copy_n(left.pixels.data() + 3 * static_cast<size_t>(y) * left.width, 3 * static_cast<size_t>(left.width),
                out.pixels.data() + 3 * static_cast<size_t>(y) * out.width);
    std::copy_n(right.pixels.data() + 3 * static_cast<size_t>(y) * right.width,
                3 * static_cast<size_t>(right.width),
                out.pixels.data() + 3 * (static_cast<size_t>(y) * out.width + left.width + gap));
  }
  return out;
}

void write_ppm(const ImageRGB& img, const std::string& path) {
  if (img.pixels.size() != 3 * static_cast<size_t>(img.width) * img.height)
    throw ShapeError("write_ppm: pixel buffer size does not match dimensions");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValueError("write_ppm: cannot open '" + path + "'");
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!f) throw ValueError("write_ppm: write failed for '" + path + "'");
}

namespace {
int read_ppm_token(std::istream& in) {
  // Skips whitespace and # comments, then reads one nonnegative integer.
  int c = in.get();
  for (;;) {
    while (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = in.get();
    if (c == '#') {
      while (c != '\n' && c != EOF) c = in.get();
      continue;
    }
    break;
  }
  int v = 0;
  bool any = false;
  while (c >= '0' && c <= '9') {
    v = v * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw ValueError("read_ppm: malformed header");
  return v;
}
}  // namespace

ImageRGB read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValueError("read_ppm: cannot open '" + path + "'");
  char m0 = static_cast<char>(f.get()), m1 = static_cast<char>(f.get());
  if (m0 != 'P' || m1 != '6') throw ValueError("read_ppm: '" + path + "' is not a binary P6 file");
  ImageRGB img;
  img.width = read_ppm_token(f);
  img.height = read_ppm_token(f);
  int maxval = read_ppm_token(f);
  if (maxval != 255) throw ValueError("read_ppm: unsupported maxval " + std::to_string(maxval));
  // The token reader consumed exactly one whitespace byte after maxval.
  img.pixels.resize(3 * static_cast<size_t>(img.width) * img.height);
  f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw ValueError("read_ppm: truncated pixel data in '" + path + "'");
  return img;
}

}  // namespace ife
