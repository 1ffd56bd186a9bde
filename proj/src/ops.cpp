#include "ife/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace ife {

namespace {

using Impl = std::shared_ptr<detail::TensorImpl>;

bool recording(std::initializer_list<const Tensor*> ins) {
  if (!Tape::active()) return false;
  for (const Tensor* t : ins)
    if (t->requires_grad()) return true;
  return false;
}

void record(Tensor& out, std::function<void()> fn) {
  Tape* tape = Tape::active();
  out.impl()->requires_grad = true;
  out.impl()->tape = tape;
  out.impl()->node = tape->add_node(out.impl(), std::move(fn));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name, double sign_b) {
  check_same_shape(a, b, name);
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a[static_cast<int>(i)] + sign_b * b[static_cast<int>(i)];
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a, &b})) {
    Impl oi = o.impl(), ai = a.impl(), bi = b.impl();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    record(o, [oi, ai, bi, ga, gb, sign_b] {
      const auto& g = oi->grad;
      if (ga) {
        ai->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) ai->grad[i] += g[i];
      }
      if (gb) {
        bi->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) bi->grad[i] += sign_b * g[i];
      }
    });
  }
  return o;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, "add", 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise_binary(a, b, "sub", -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.values()[i] * b.values()[i];
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a, &b})) {
    Impl oi = o.impl(), ai = a.impl(), bi = b.impl();
    bool ga = a.requires_grad(), gb = b.requires_grad();
    record(o, [oi, ai, bi, ga, gb] {
      const auto& g = oi->grad;
      if (ga) {
        ai->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) ai->grad[i] += g[i] * bi->data[i];
      }
      if (gb) {
        bi->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) bi->grad[i] += g[i] * ai->data[i];
      }
    });
  }
  return o;
}

Tensor square(const Tensor& a) {
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.values()[i] * a.values()[i];
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += 2.0 * ai->data[i] * oi->grad[i];
    });
  }
  return o;
}

Tensor scale(const Tensor& a, double c) {
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = c * a.values()[i];
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai, c] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += c * oi->grad[i];
    });
  }
  return o;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i)
        if (ai->data[i] > 0.0) ai->grad[i] += oi->grad[i];
    });
  }
  return o;
}

Tensor tanh(const Tensor& a) {
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::tanh(a.values()[i]);
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i)
        ai->grad[i] += (1.0 - oi->data[i] * oi->data[i]) * oi->grad[i];
    });
  }
  return o;
}

Tensor exp(const Tensor& a) {
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::exp(a.values()[i]);
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->data[i] * oi->grad[i];
    });
  }
  return o;
}

Tensor log(const Tensor& a) {
  size_t n = a.values().size();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(a.values()[i] > 0.0))
      throw ValueError("log: non-positive input " + std::to_string(a.values()[i]) + " at index " +
                       std::to_string(i));
    out[i] = std::log(a.values()[i]);
  }
  Tensor o = Tensor::from(a.shape(), std::move(out));
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] / ai->data[i];
    });
  }
  return o;
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.shape().size() != 1)
    throw ShapeError("linear: input must be a vector, got " + shape_str(input.shape()));
  if (weight.shape().size() != 2)
    throw ShapeError("linear: weight must be 2-D, got " + shape_str(weight.shape()));
  int m = weight.dim(0), n = weight.dim(1);
  if (input.dim(0) != n)
    throw ShapeError("linear: input length " + std::to_string(input.dim(0)) +
                     " != weight inner dim " + std::to_string(n));
  if (bias.shape().size() != 1 || bias.dim(0) != m)
    throw ShapeError("linear: bias shape " + shape_str(bias.shape()) + " != weight rows " +
                     std::to_string(m));
  std::vector<double> out(static_cast<size_t>(m));
  const double* x = input.data();
  const double* w = weight.data();
  for (int i = 0; i < m; ++i) {
    double acc = bias[i];
    const double* wrow = w + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += wrow[j] * x[j];
    out[static_cast<size_t>(i)] = acc;
  }
  Tensor o = Tensor::from({m}, std::move(out));
  if (recording({&input, &weight, &bias})) {
    Impl oi = o.impl(), xi = input.impl(), wi = weight.impl(), bi = bias.impl();
    bool gx = input.requires_grad(), gw = weight.requires_grad(), gb = bias.requires_grad();
    record(o, [oi, xi, wi, bi, gx, gw, gb, m, n] {
      const auto& g = oi->grad;
      if (gx) {
        xi->ensure_grad();
        for (int i = 0; i < m; ++i) {
          const double* wrow = wi->data.data() + static_cast<size_t>(i) * n;
          for (int j = 0; j < n; ++j) xi->grad[static_cast<size_t>(j)] += g[static_cast<size_t>(i)] * wrow[j];
        }
      }
      if (gw) {
        wi->ensure_grad();
        for (int i = 0; i < m; ++i) {
          double gi = g[static_cast<size_t>(i)];
          double* wrow = wi->grad.data() + static_cast<size_t>(i) * n;
          for (int j = 0; j < n; ++j) wrow[j] += gi * xi->data[static_cast<size_t>(j)];
        }
      }
      if (gb) {
        bi->ensure_grad();
        for (int i = 0; i < m; ++i) bi->grad[static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
      }
    });
  }
  return o;
}

Tensor linear_rows(const Tensor& rows, const Tensor& weight, const Tensor& bias) {
  if (rows.shape().size() != 2)
    throw ShapeError("linear_rows: input must be 2-D, got " + shape_str(rows.shape()));
  int l = rows.dim(0), n = rows.dim(1);
  int m = weight.dim(0);
  if (weight.shape().size() != 2 || weight.dim(1) != n)
    throw ShapeError("linear_rows: weight " + shape_str(weight.shape()) + " incompatible with row length " +
                     std::to_string(n));
  if (bias.shape().size() != 1 || bias.dim(0) != m)
    throw ShapeError("linear_rows: bias shape " + shape_str(bias.shape()) + " != weight rows " +
                     std::to_string(m));
  std::vector<double> out(static_cast<size_t>(l) * m);
  for (int r = 0; r < l; ++r) {
    const double* x = rows.data() + static_cast<size_t>(r) * n;
    double* orow = out.data() + static_cast<size_t>(r) * m;
    for (int i = 0; i < m; ++i) {
      double acc = bias[i];
      const double* wrow = weight.data() + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) acc += wrow[j] * x[j];
      orow[i] = acc;
    }
  }
  Tensor o = Tensor::from({l, m}, std::move(out));
  if (recording({&rows, &weight, &bias})) {
    Impl oi = o.impl(), xi = rows.impl(), wi = weight.impl(), bi = bias.impl();
    bool gx = rows.requires_grad(), gw = weight.requires_grad(), gb = bias.requires_grad();
    record(o, [oi, xi, wi, bi, gx, gw, gb, l, m, n] {
      if (gx) xi->ensure_grad();
      if (gw) wi->ensure_grad();
      if (gb) bi->ensure_grad();
      for (int r = 0; r < l; ++r) {
        const double* g = oi->grad.data() + static_cast<size_t>(r) * m;
        const double* x = xi->data.data() + static_cast<size_t>(r) * n;
        for (int i = 0; i < m; ++i) {
          double gi = g[i];
          if (gi == 0.0) continue;
          const double* wrow = wi->data.data() + static_cast<size_t>(i) * n;
          if (gx) {
            double* xg = xi->grad.data() + static_cast<size_t>(r) * n;
            for (int j = 0; j < n; ++j) xg[j] += gi * wrow[j];
          }
          if (gw) {
            double* wg = wi->grad.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) wg[j] += gi * x[j];
          }
          if (gb) bi->grad[static_cast<size_t>(i)] += gi;
        }
      }
    });
  }
  return o;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride) {
  if (input.shape().size() != 3)
    throw ShapeError("conv2d: input must be C x H x W, got " + shape_str(input.shape()));
  if (weight.shape().size() != 4)
    throw ShapeError("conv2d: weight must be Cout x Cin x K x K, got " + shape_str(weight.shape()));
  if (stride < 1) throw ValueError("conv2d: stride must be positive, got " + std::to_string(stride));
  int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  int cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin)
    throw ShapeError("conv2d: weight in-channels " + std::to_string(weight.dim(1)) +
                     " != input channels " + std::to_string(cin));
  if (weight.dim(3) != k)
    throw ShapeError("conv2d: kernel must be square, got " + std::to_string(k) + "x" +
                     std::to_string(weight.dim(3)));
  if (k > h || k > w)
    throw ShapeError("conv2d: kernel " + std::to_string(k) + " exceeds input " + std::to_string(h) +
                     "x" + std::to_string(w));
  if (bias.shape().size() != 1 || bias.dim(0) != cout)
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) + " != out-channels " +
                     std::to_string(cout));
  int ho = (h - k) / stride + 1;
  int wo = (w - k) / stride + 1;

  // im2col layout (taps x output positions) keeps the hot loops long and
  // contiguous; the patch matrix is cheap to rebuild for the backward pass.
  const int taps = cin * k * k;
  const int opos = ho * wo;
  auto gather_cols = [=](const double* in, std::vector<double>& cols) {
    size_t t = 0;
    for (int ic = 0; ic < cin; ++ic)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx, ++t) {
          double* crow = cols.data() + t * opos;
          const double* iplane = in + (static_cast<size_t>(ic) * h + ky) * w + kx;
          for (int oy = 0; oy < ho; ++oy) {
            const double* irow = iplane + static_cast<size_t>(oy) * stride * w;
            for (int ox = 0; ox < wo; ++ox) crow[oy * wo + ox] = irow[static_cast<size_t>(ox) * stride];
          }
        }
  };

  std::vector<double> cols(static_cast<size_t>(taps) * opos);
  gather_cols(input.data(), cols);
  std::vector<double> out(static_cast<size_t>(cout) * opos);
  for (int oc = 0; oc < cout; ++oc) {
    double* orow = out.data() + static_cast<size_t>(oc) * opos;
    std::fill(orow, orow + opos, bias[oc]);
    const double* wrow = weight.data() + static_cast<size_t>(oc) * taps;
    for (int t = 0; t < taps; ++t) {
      double wv = wrow[t];
      const double* crow = cols.data() + static_cast<size_t>(t) * opos;
      for (int p = 0; p < opos; ++p) orow[p] += wv * crow[p];
    }
  }
  Tensor o = Tensor::from({cout, ho, wo}, std::move(out));
  if (recording({&input, &weight, &bias})) {
    Impl oi = o.impl(), xi = input.impl(), wi = weight.impl(), bi = bias.impl();
    bool gx = input.requires_grad(), gw = weight.requires_grad(), gb = bias.requires_grad();
    record(o, [oi, xi, wi, bi, gx, gw, gb, gather_cols, cin, cout, h, w, k, ho, wo, stride, taps, opos] {
      if (gb) {
        bi->ensure_grad();
        for (int oc = 0; oc < cout; ++oc) {
          const double* grow = oi->grad.data() + static_cast<size_t>(oc) * opos;
          double acc = 0.0;
          for (int p = 0; p < opos; ++p) acc += grow[p];
          bi->grad[static_cast<size_t>(oc)] += acc;
        }
      }
      if (gw) {
        wi->ensure_grad();
        std::vector<double> cols(static_cast<size_t>(taps) * opos);
        gather_cols(xi->data.data(), cols);
        for (int oc = 0; oc < cout; ++oc) {
          const double* grow = oi->grad.data() + static_cast<size_t>(oc) * opos;
          double* wgrow = wi->grad.data() + static_cast<size_t>(oc) * taps;
          for (int t = 0; t < taps; ++t) {
            const double* crow = cols.data() + static_cast<size_t>(t) * opos;
            double acc = 0.0;
            for (int p = 0; p < opos; ++p) acc += grow[p] * crow[p];
            wgrow[t] += acc;
          }
        }
      }
      if (gx) {
        xi->ensure_grad();
        std::vector<double> dcols(static_cast<size_t>(taps) * opos, 0.0);
        for (int oc = 0; oc < cout; ++oc) {
          const double* grow = oi->grad.data() + static_cast<size_t>(oc) * opos;
          const double* wrow = wi->data.data() + static_cast<size_t>(oc) * taps;
          for (int t = 0; t < taps; ++t) {
            double wv = wrow[t];
            double* drow = dcols.data() + static_cast<size_t>(t) * opos;
            for (int p = 0; p < opos; ++p) drow[p] += wv * grow[p];
          }
        }
        // Scatter the column gradients back through the gather pattern.
        size_t t = 0;
        for (int ic = 0; ic < cin; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx, ++t) {
              const double* drow = dcols.data() + t * opos;
              double* iplane = xi->grad.data() + (static_cast<size_t>(ic) * h + ky) * w + kx;
              for (int oy = 0; oy < ho; ++oy) {
                double* irow = iplane + static_cast<size_t>(oy) * stride * w;
                for (int ox = 0; ox < wo; ++ox) irow[static_cast<size_t>(ox) * stride] += drow[oy * wo + ox];
              }
            }
      }
    });
  }
  return o;
}

Tensor pad2d(const Tensor& input, int pad) {
  if (input.shape().size() != 3)
    throw ShapeError("pad2d: input must be C x H x W, got " + shape_str(input.shape()));
  if (pad < 0) throw ValueError("pad2d: negative pad");
  int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  int hp = h + 2 * pad, wp = w + 2 * pad;
  std::vector<double> out(static_cast<size_t>(c) * hp * wp, 0.0);
  for (int ic = 0; ic < c; ++ic)
    for (int y = 0; y < h; ++y) {
      const double* src = input.data() + (static_cast<size_t>(ic) * h + y) * w;
      double* dst = out.data() + (static_cast<size_t>(ic) * hp + y + pad) * wp + pad;
      std::copy(src, src + w, dst);
    }
  Tensor o = Tensor::from({c, hp, wp}, std::move(out));
  if (recording({&input})) {
    Impl oi = o.impl(), xi = input.impl();
    record(o, [oi, xi, c, h, w, hp, wp, pad] {
      xi->ensure_grad();
      for (int ic = 0; ic < c; ++ic)
        for (int y = 0; y < h; ++y) {
          const double* g = oi->grad.data() + (static_cast<size_t>(ic) * hp + y + pad) * wp + pad;
          double* dst = xi->grad.data() + (static_cast<size_t>(ic) * h + y) * w;
          for (int x = 0; x < w; ++x) dst[x] += g[x];
        }
    });
  }
  return o;
}

namespace {

Tensor pool_common(const Tensor& input, const char* name, int ho, int wo,
                   const std::function<std::pair<int, int>(int, int)>& ybounds,
                   const std::function<std::pair<int, int>(int, int)>& xbounds) {
  int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  std::vector<double> out(static_cast<size_t>(c) * ho * wo);
  std::vector<int> arg(out.size());
  for (int ic = 0; ic < c; ++ic) {
    const double* iplane = input.data() + static_cast<size_t>(ic) * h * w;
    for (int oy = 0; oy < ho; ++oy) {
      auto [y0, y1] = ybounds(oy, h);
      for (int ox = 0; ox < wo; ++ox) {
        auto [x0, x1] = xbounds(ox, w);
        double best = -std::numeric_limits<double>::infinity();
        int besti = -1;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) {
            double v = iplane[static_cast<size_t>(y) * w + x];
            if (v > best) {  // ties keep the earliest (lowest flat index)
              best = v;
              besti = y * w + x;
            }
          }
        size_t oidx = (static_cast<size_t>(ic) * ho + oy) * wo + ox;
        out[oidx] = best;
        arg[oidx] = ic * h * w + besti;
      }
    }
  }
  Tensor o = Tensor::from({c, ho, wo}, std::move(out));
  (void)name;
  if (recording({&input})) {
    Impl oi = o.impl(), xi = input.impl();
    record(o, [oi, xi, arg = std::move(arg)] {
      xi->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i) xi->grad[static_cast<size_t>(arg[i])] += oi->grad[i];
    });
  }
  return o;
}

}  // namespace

Tensor maxpool2d(const Tensor& input, int kernel, int stride) {
  if (input.shape().size() != 3)
    throw ShapeError("maxpool2d: input must be C x H x W, got " + shape_str(input.shape()));
  if (kernel < 1 || stride < 1) throw ValueError("maxpool2d: kernel and stride must be positive");
  int h = input.dim(1), w = input.dim(2);
  if (kernel > h || kernel > w)
    throw ShapeError("maxpool2d: kernel " + std::to_string(kernel) + " exceeds input " +
                     std::to_string(h) + "x" + std::to_string(w));
  int ho = (h - kernel) / stride + 1;
  int wo = (w - kernel) / stride + 1;
  auto yb = [kernel, stride](int oy, int) { return std::make_pair(oy * stride, oy * stride + kernel); };
  auto xb = [kernel, stride](int ox, int) { return std::make_pair(ox * stride, ox * stride + kernel); };
  return pool_common(input, "maxpool2d", ho, wo, yb, xb);
}

Tensor adaptive_maxpool(const Tensor& input, int out_h, int out_w) {
  if (input.shape().size() != 3)
    throw ShapeError("adaptive_maxpool: input must be C x H x W, got " + shape_str(input.shape()));
  int h = input.dim(1), w = input.dim(2);
  if (out_h < 1 || out_w < 1) throw ValueError("adaptive_maxpool: output dims must be positive");
  if (out_h > h || out_w > w)
    throw ShapeError("adaptive_maxpool: output " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " exceeds input " + std::to_string(h) + "x" + std::to_string(w));
  auto yb = [out_h](int oy, int hh) {
    return std::make_pair(oy * hh / out_h, (oy + 1) * hh / out_h);
  };
  auto xb = [out_w](int ox, int ww) {
    return std::make_pair(ox * ww / out_w, (ox + 1) * ww / out_w);
  };
  return pool_common(input, "adaptive_maxpool", out_h, out_w, yb, xb);
}

namespace {
void check_finite_vector(const Tensor& input, const char* op) {
  if (input.shape().size() != 1)
    throw ShapeError(std::string(op) + ": input must be a vector, got " + shape_str(input.shape()));
  for (double v : input.values())
    if (!std::isfinite(v)) throw ValueError(std::string(op) + ": non-finite input");
}
}  // namespace

Tensor softmax(const Tensor& input) {
  check_finite_vector(input, "softmax");
  size_t n = input.values().size();
  double mx = *std::max_element(input.values().begin(), input.values().end());
  std::vector<double> out(n);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::exp(input.values()[i] - mx);
    z += out[i];
  }
  for (size_t i = 0; i < n; ++i) out[i] /= z;
  Tensor o = Tensor::from(input.shape(), std::move(out));
  if (recording({&input})) {
    Impl oi = o.impl(), xi = input.impl();
    record(o, [oi, xi] {
      xi->ensure_grad();
      double dot = 0.0;
      for (size_t i = 0; i < oi->grad.size(); ++i) dot += oi->grad[i] * oi->data[i];
      for (size_t i = 0; i < oi->grad.size(); ++i)
        xi->grad[i] += oi->data[i] * (oi->grad[i] - dot);
    });
  }
  return o;
}

Tensor log_softmax(const Tensor& input) {
  check_finite_vector(input, "log_softmax");
  size_t n = input.values().size();
  double mx = *std::max_element(input.values().begin(), input.values().end());
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) z += std::exp(input.values()[i] - mx);
  double lse = mx + std::log(z);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = input.values()[i] - lse;
  Tensor o = Tensor::from(input.shape(), std::move(out));
  if (recording({&input})) {
    Impl oi = o.impl(), xi = input.impl();
    record(o, [oi, xi] {
      xi->ensure_grad();
      double gsum = 0.0;
      for (double g : oi->grad) gsum += g;
      for (size_t i = 0; i < oi->grad.size(); ++i)
        xi->grad[i] += oi->grad[i] - std::exp(oi->data[i]) * gsum;
    });
  }
  return o;
}

Tensor spatial_flatten(const Tensor& input) {
  if (input.shape().size() != 3)
    throw ShapeError("spatial_flatten: input must be C x H x W, got " + shape_str(input.shape()));
  int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  int l = h * w;
  std::vector<double> out(static_cast<size_t>(l) * c);
  for (int ic = 0; ic < c; ++ic)
    for (int p = 0; p < l; ++p)
      out[static_cast<size_t>(p) * c + ic] = input.values()[static_cast<size_t>(ic) * l + p];
  Tensor o = Tensor::from({l, c}, std::move(out));
  if (recording({&input})) {
    Impl oi = o.impl(), xi = input.impl();
    record(o, [oi, xi, c, l] {
      xi->ensure_grad();
      for (int ic = 0; ic < c; ++ic)
        for (int p = 0; p < l; ++p)
          xi->grad[static_cast<size_t>(ic) * l + p] += oi->grad[static_cast<size_t>(p) * c + ic];
    });
  }
  return o;
}

Tensor spatial_unflatten(const Tensor& rows, int channels, int h, int w) {
  if (rows.shape().size() != 2)
    throw ShapeError("spatial_unflatten: input must be L x C, got " + shape_str(rows.shape()));
  if (rows.dim(0) != h * w || rows.dim(1) != channels)
    throw ShapeError("spatial_unflatten: rows " + shape_str(rows.shape()) + " do not match " +
                     std::to_string(channels) + "x" + std::to_string(h) + "x" + std::to_string(w));
  int l = h * w, c = channels;
  std::vector<double> out(static_cast<size_t>(c) * l);
  for (int ic = 0; ic < c; ++ic)
    for (int p = 0; p < l; ++p)
      out[static_cast<size_t>(ic) * l + p] = rows.values()[static_cast<size_t>(p) * c + ic];
  Tensor o = Tensor::from({c, h, w}, std::move(out));
  if (recording({&rows})) {
    Impl oi = o.impl(), xi = rows.impl();
    record(o, [oi, xi, c, l] {
      xi->ensure_grad();
      for (int ic = 0; ic < c; ++ic)
        for (int p = 0; p < l; ++p)
          xi->grad[static_cast<size_t>(p) * c + ic] += oi->grad[static_cast<size_t>(ic) * l + p];
    });
  }
  return o;
}

Tensor scale_rows(const Tensor& rows, const Tensor& weights) {
  if (rows.shape().size() != 2)
    throw ShapeError("scale_rows: rows must be 2-D, got " + shape_str(rows.shape()));
  int l = rows.dim(0), c = rows.dim(1);
  if (weights.shape().size() != 1 || weights.dim(0) != l)
    throw ShapeError("scale_rows: weights " + shape_str(weights.shape()) + " != row count " +
                     std::to_string(l));
  std::vector<double> out(static_cast<size_t>(l) * c);
  for (int r = 0; r < l; ++r) {
    double wv = weights[r];
    const double* src = rows.data() + static_cast<size_t>(r) * c;
    double* dst = out.data() + static_cast<size_t>(r) * c;
    for (int j = 0; j < c; ++j) dst[j] = wv * src[j];
  }
  Tensor o = Tensor::from({l, c}, std::move(out));
  if (recording({&rows, &weights})) {
    Impl oi = o.impl(), xi = rows.impl(), wi = weights.impl();
    bool gx = rows.requires_grad(), gw = weights.requires_grad();
    record(o, [oi, xi, wi, gx, gw, l, c] {
      if (gx) xi->ensure_grad();
      if (gw) wi->ensure_grad();
      for (int r = 0; r < l; ++r) {
        const double* g = oi->grad.data() + static_cast<size_t>(r) * c;
        if (gx) {
          double wv = wi->data[static_cast<size_t>(r)];
          double* xg = xi->grad.data() + static_cast<size_t>(r) * c;
          for (int j = 0; j < c; ++j) xg[j] += wv * g[j];
        }
        if (gw) {
          const double* x = xi->data.data() + static_cast<size_t>(r) * c;
          double acc = 0.0;
          for (int j = 0; j < c; ++j) acc += g[j] * x[j];
          wi->grad[static_cast<size_t>(r)] += acc;
        }
      }
    });
  }
  return o;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size())
    throw ShapeError("reshape: cannot reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  Tensor o = Tensor::from(std::move(shape), a.values());
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
    });
  }
  return o;
}

Tensor flatten(const Tensor& a) { return reshape(a, {a.size()}); }

namespace {
Tensor broadcast_common(const Tensor& vec, const Tensor& scalar, double sign) {
  if (scalar.size() != 1)
    throw ShapeError("broadcast: scalar operand has shape " + shape_str(scalar.shape()));
  size_t n = vec.values().size();
  double s = scalar.value();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = vec.values()[i] + sign * s;
  Tensor o = Tensor::from(vec.shape(), std::move(out));
  if (recording({&vec, &scalar})) {
    Impl oi = o.impl(), vi = vec.impl(), si = scalar.impl();
    bool gv = vec.requires_grad(), gs = scalar.requires_grad();
    record(o, [oi, vi, si, gv, gs, sign] {
      const auto& g = oi->grad;
      if (gv) {
        vi->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) vi->grad[i] += g[i];
      }
      if (gs) {
        si->ensure_grad();
        double acc = 0.0;
        for (double x : g) acc += x;
        si->grad[0] += sign * acc;
      }
    });
  }
  return o;
}
}  // namespace

Tensor add_broadcast(const Tensor& vec, const Tensor& scalar) { return broadcast_common(vec, scalar, 1.0); }
Tensor sub_broadcast(const Tensor& vec, const Tensor& scalar) { return broadcast_common(vec, scalar, -1.0); }

Tensor pick(const Tensor& vec, int index) {
  if (vec.shape().size() != 1)
    throw ShapeError("pick: input must be a vector, got " + shape_str(vec.shape()));
  if (index < 0 || index >= vec.dim(0))
    throw ValueError("pick: index " + std::to_string(index) + " out of range [0, " +
                     std::to_string(vec.dim(0)) + ")");
  Tensor o = Tensor::scalar(vec[index]);
  if (recording({&vec})) {
    Impl oi = o.impl(), vi = vec.impl();
    record(o, [oi, vi, index] {
      vi->ensure_grad();
      vi->grad[static_cast<size_t>(index)] += oi->grad[0];
    });
  }
  return o;
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  Tensor o = Tensor::scalar(acc);
  if (recording({&a})) {
    Impl oi = o.impl(), ai = a.impl();
    record(o, [oi, ai] {
      ai->ensure_grad();
      for (size_t i = 0; i < ai->grad.size(); ++i) ai->grad[i] += oi->grad[0];
    });
  }
  return o;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / a.size()); }

Tensor huber_loss(const Tensor& pred, const Tensor& target, double delta) {
  check_same_shape(pred, target, "huber_loss");
  if (delta <= 0.0) throw ValueError("huber_loss: delta must be positive");
  size_t n = pred.values().size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = pred.values()[i] - target.values()[i];
    double ad = std::abs(d);
    acc += ad <= delta ? 0.5 * d * d : delta * (ad - 0.5 * delta);
  }
  Tensor o = Tensor::scalar(acc / static_cast<double>(n));
  if (recording({&pred, &target})) {
    Impl oi = o.impl(), pi = pred.impl(), ti = target.impl();
    bool gp = pred.requires_grad(), gt = target.requires_grad();
    record(o, [oi, pi, ti, gp, gt, delta, n] {
      double g = oi->grad[0] / static_cast<double>(n);
      if (gp) pi->ensure_grad();
      if (gt) ti->ensure_grad();
      for (size_t i = 0; i < n; ++i) {
        double d = pi->data[i] - ti->data[i];
        double dd = std::abs(d) <= delta ? d : (d > 0 ? delta : -delta);
        if (gp) pi->grad[i] += g * dd;
        if (gt) ti->grad[i] -= g * dd;
      }
    });
  }
  return o;
}

int argmax(const Tensor& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace ife
