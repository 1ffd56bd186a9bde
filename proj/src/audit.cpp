#include "ife/audit.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace ife::audit {

int ConvStackSpec::feature_extent(int input_extent) const {
  int extent = input_extent;
  for (const ConvLayer& l : layers) {
    if (l.kernel > extent)
      throw ValueError("conv stack: kernel " + std::to_string(l.kernel) + " exceeds extent " +
                       std::to_string(extent));
    extent = (extent - l.kernel) / l.stride + 1;
  }
  return extent;
}

void ConvStackSpec::validate() const {
  if (layers.empty()) throw ValueError("conv stack: no layers");
  if (input_w < 1 || input_h < 1)
    throw ValueError("conv stack: input dims must be positive, got " + std::to_string(input_w) + "x" +
                     std::to_string(input_h));
  for (const ConvLayer& l : layers) {
    if (l.kernel < 1) throw ValueError("conv stack: kernel must be >= 1");
    if (l.stride < 1) throw ValueError("conv stack: stride must be >= 1");
  }
  feature_extent(input_w);
  feature_extent(input_h);
}

bool ConvStackSpec::non_overlapping() const {
  for (const ConvLayer& l : layers)
    if (l.stride != l.kernel) return false;
  return true;
}

ConvLayer effective_single_layer(const ConvStackSpec& spec) {
  spec.validate();
  // Map a unit output window back through the stack.
  int stride = 1;
  int extent = 1;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    extent = (extent - 1) * it->stride + it->kernel;
    stride *= it->stride;
  }
  return ConvLayer{extent, stride};
}

namespace {
double axis_displacement(int m, int l, int kernel, int stride, int input_extent) {
  double w = static_cast<double>(input_extent);
  double s = static_cast<double>(stride);
  double k = static_cast<double>(kernel);
  double denom = 1.0 + (s - k) / w;
  if (!(denom > 0.0))
    throw ValueError("displacement: degenerate divisor, input_extent + stride - kernel <= 0 (" +
                     std::to_string(input_extent) + " + " + std::to_string(stride) + " - " +
                     std::to_string(kernel) + ")");
  double inv = 1.0 / denom;
  return m * s * (1.0 - inv) + l * (1.0 - (s / k) * inv);
}
}  // namespace

DisplacementResult displacement(const ConvStackSpec& spec, int m, int n, int l_x, int l_y) {
  spec.validate();
  if (spec.layers.size() != 1)
    throw ValueError("displacement: expects a single-layer spec; compose with effective_single_layer first");
  const ConvLayer& layer = spec.layers[0];
  int fw = spec.feature_w();
  int fh = spec.feature_h();
  if (m < 0 || m >= fw || n < 0 || n >= fh)
    throw ValueError("displacement: feature coordinate (" + std::to_string(m) + ", " + std::to_string(n) +
                     ") outside feature grid " + std::to_string(fw) + "x" + std::to_string(fh));
  if (l_x < 0 || l_x >= layer.kernel || l_y < 0 || l_y >= layer.kernel)
    throw ValueError("displacement: window offset (" + std::to_string(l_x) + ", " + std::to_string(l_y) +
                     ") outside kernel " + std::to_string(layer.kernel));
  DisplacementResult r;
  r.m = m;
  r.n = n;
  r.l_x = l_x;
  r.l_y = l_y;
  r.d_x = axis_displacement(m, l_x, layer.kernel, layer.stride, spec.input_w);
  r.d_y = axis_displacement(n, l_y, layer.kernel, layer.stride, spec.input_h);
  return r;
}

ReceptiveField receptive_field(const ConvStackSpec& spec, int m, int n) {
  spec.validate();
  int fw = spec.feature_w();
  int fh = spec.feature_h();
  if (m < 0 || m >= fw || n < 0 || n >= fh)
    throw ValueError("receptive_field: feature coordinate (" + std::to_string(m) + ", " +
                     std::to_string(n) + ") outside feature grid " + std::to_string(fw) + "x" +
                     std::to_string(fh));
  int x_start = m, y_start = n;
  int x_extent = 1, y_extent = 1;
  for (auto it = spec.layers.rbegin(); it != spec.layers.rend(); ++it) {
    x_start *= it->stride;
    y_start *= it->stride;
    x_extent = (x_extent - 1) * it->stride + it->kernel;
    y_extent = (y_extent - 1) * it->stride + it->kernel;
  }
  return ReceptiveField{{x_start, x_start + x_extent}, {y_start, y_start + y_extent}};
}

PixelInterval naive_upsample_interval(int feature_w, int input_w, int m) {
  if (feature_w < 1 || input_w < feature_w)
    throw ValueError("naive_upsample_interval: need 1 <= feature_w <= input_w, got " +
                     std::to_string(feature_w) + ", " + std::to_string(input_w));
  if (m < 0 || m >= feature_w)
    throw ValueError("naive_upsample_interval: feature index " + std::to_string(m) +
                     " outside [0, " + std::to_string(feature_w) + ")");
  // round half up of a*W/F == floor((2*a*W + F) / (2*F))
  auto edge = [&](long a) {
    return static_cast<int>((2L * a * input_w + feature_w) / (2L * feature_w));
  };
  return PixelInterval{edge(m), edge(m + 1)};
}

std::vector<int> overlap_counts(const ConvStackSpec& spec) {
  spec.validate();
  if (spec.layers.size() != 1)
    throw ValueError("overlap_counts: expects a single-layer spec");
  const ConvLayer& layer = spec.layers[0];
  int fw = spec.feature_w();
  std::vector<int> counts(static_cast<size_t>(spec.input_w), 0);
  for (int m = 0; m < fw; ++m)
    for (int p = m * layer.stride; p < m * layer.stride + layer.kernel; ++p)
      counts[static_cast<size_t>(p)] += 1;
  return counts;
}

AuditReport audit_report(const ConvStackSpec& spec) {
  spec.validate();
  ConvLayer eff = effective_single_layer(spec);
  ConvStackSpec single{{eff}, spec.input_w, spec.input_h};

  AuditReport rep;
  rep.preserving = spec.non_overlapping();

  int fw = single.feature_w();
  double sum_abs = 0.0;
  long count = 0;
  for (int m = 0; m < fw; ++m) {
    for (int lx = 0; lx < eff.kernel; ++lx) {
      double dx = displacement(single, m, 0, lx, 0).d_x;
      double a = std::abs(dx);
      if (a > rep.max_dx) rep.max_dx = a;
      sum_abs += a;
      ++count;
    }
  }
  rep.mean_dx = count ? sum_abs / static_cast<double>(count) : 0.0;

  for (int c : overlap_counts(single))
    if (c > 0) rep.overlap_histogram[c] += 1;
  return rep;
}

std::string AuditReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = preserving ? "preserving" : "non-preserving";
  j["max_dx"] = max_dx;
  j["mean_dx"] = mean_dx;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : overlap_histogram) hist[std::to_string(k)] = v;
  j["overlap_histogram"] = hist;
  return j.dump(2);
}

}  // namespace ife::audit
