#pragma once

#include <map>
#include <string>
#include <vector>

#include "ife/tensor.hpp"

// Spatial-preservation analysis for convolutional front-ends: where does a
// feature's receptive field actually sit, and how far does naive
// nearest-neighbor upsampling displace its attention weight?
namespace ife::audit {

struct ConvLayer {
  int kernel = 1;
  int stride = 1;
};

struct ConvStackSpec {
  std::vector<ConvLayer> layers;
  int input_w = 0;
  int input_h = 0;

  // Feature-map extent along one axis after applying all layers.
  int feature_extent(int input_extent) const;
  int feature_w() const { return feature_extent(input_w); }
  int feature_h() const { return feature_extent(input_h); }
  void validate() const;
  bool non_overlapping() const;
};

// Collapses a stack into the equivalent single layer: stride = product of
// strides, kernel = composed receptive-field extent.
ConvLayer effective_single_layer(const ConvStackSpec& spec);

struct DisplacementResult {
  int m = 0, n = 0;    // feature coordinates
  int l_x = 0, l_y = 0;  // pixel offset within the feature's input window
  double d_x = 0.0, d_y = 0.0;  // pixels
};

// Displacement between a feature's upsampled mask position and its true
// input window, for a single-layer spec:
//   d = m*S*(1 - 1/(1 + (S-L)/W)) + l*(1 - (S/L) * 1/(1 + (S-L)/W))
// evaluated per axis. Exactly zero when S == L.
DisplacementResult displacement(const ConvStackSpec& spec, int m, int n, int l_x, int l_y);

struct PixelInterval {
  int begin = 0;
  int end = 0;  // half-open
};

struct ReceptiveField {
  PixelInterval x;
  PixelInterval y;
};

// Exact half-open pixel intervals feeding feature (m, n) at the stack output.
ReceptiveField receptive_field(const ConvStackSpec& spec, int m, int n);

// Pixel block that nearest-neighbor upsampling assigns to feature m:
// [round(m*W_I/W_F), round((m+1)*W_I/W_F)), round half up.
PixelInterval naive_upsample_interval(int feature_w, int input_w, int m);

// count[p] = number of feature windows [m*S, m*S+L) containing pixel p,
// along the x axis of a single-layer spec.
std::vector<int> overlap_counts(const ConvStackSpec& spec);

struct AuditReport {
  bool preserving = false;
  double max_dx = 0.0;
  double mean_dx = 0.0;  // mean of |d_x| over all (m, l_x)
  std::map<int, long> overlap_histogram;  // overlap count -> number of pixels

  std::string to_json() const;
};

// Sweeps the effective single layer over all (m, l_x) and aggregates
// displacement and overlap statistics. Deterministic for a fixed spec.
AuditReport audit_report(const ConvStackSpec& spec);

}  // namespace ife::audit
