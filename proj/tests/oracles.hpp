// Test-side reference implementations, independent of the library's compute
// paths. These stay deliberately naive: nested loops and exact rational
// arithmetic, no shared code with src/.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ife/rng.hpp"
#include "ife/tensor.hpp"

namespace oracle {

// Plain nested-loop valid convolution.
inline std::vector<double> conv2d_reference(const std::vector<double>& in, int cin, int h, int w,
                                            const std::vector<double>& weight, int cout, int k,
                                            const std::vector<double>& bias, int stride) {
  int ho = (h - k) / stride + 1;
  int wo = (w - k) / stride + 1;
  std::vector<double> out(static_cast<size_t>(cout) * ho * wo, 0.0);
  for (int oc = 0; oc < cout; ++oc)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = bias[static_cast<size_t>(oc)];
        for (int ic = 0; ic < cin; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += weight[((static_cast<size_t>(oc) * cin + ic) * k + ky) * k + kx] *
                     in[(static_cast<size_t>(ic) * h + oy * stride + ky) * w + ox * stride + kx];
        out[(static_cast<size_t>(oc) * ho + oy) * wo + ox] = acc;
      }
  return out;
}

// |a-b| relative to the larger magnitude, with an absolute floor under which
// the difference counts as zero.
inline double rel_err(double a, double b, double abs_floor = 1e-7) {
  double diff = std::abs(a - b);
  if (diff <= abs_floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(b));
}

// Central finite differences of `forward_value` against the gradients already
// accumulated in `params`. Returns the worst relative error.
inline double max_fd_rel_error(const std::function<double()>& forward_value,
                               std::vector<ife::Tensor>& params, double step = 1e-5,
                               double abs_floor = 1e-7) {
  double worst = 0.0;
  for (ife::Tensor& p : params) {
    for (int i = 0; i < p.size(); ++i) {
      double saved = p.values()[static_cast<size_t>(i)];
      p.values()[static_cast<size_t>(i)] = saved + step;
      double fp = forward_value();
      p.values()[static_cast<size_t>(i)] = saved - step;
      double fm = forward_value();
      p.values()[static_cast<size_t>(i)] = saved;
      double fd = (fp - fm) / (2.0 * step);
      double ad = p.has_grad() ? p.grad()[static_cast<size_t>(i)] : 0.0;
      worst = std::max(worst, rel_err(ad, fd, abs_floor));
    }
  }
  return worst;
}

// Exact-rational displacement between a feature's true input window and the
// pixel block nearest-neighbor upsampling assigns to it. The naive position
// of within-window offset l is (m + l/L) * scale with scale = W*S/(W+S-L),
// i.e. the feature grid stretched to the full input extent.
inline double displacement_reference(int m, int l, int kernel, int stride, int input_extent,
                                     long true_window_start) {
  long num = (static_cast<long>(true_window_start) + l) * kernel * (input_extent + stride - kernel) -
             (static_cast<long>(m) * kernel + l) * stride * input_extent;
  long den = static_cast<long>(kernel) * (input_extent + stride - kernel);
  return static_cast<double>(num) / static_cast<double>(den);
}

// Discounted n-step return by direct summation.
inline double nstep_reference(const std::vector<double>& rewards, const std::vector<bool>& terminals,
                              double gamma, double q_next) {
  double acc = 0.0, g = 1.0;
  for (size_t k = 0; k < rewards.size(); ++k) {
    acc += g * rewards[k];
    g *= gamma;
    if (terminals[k]) return acc;
  }
  return acc + g * q_next;
}

// GAE by the double sum A_t = sum_k (gamma*lambda)^k delta_{t+k}, stopping at
// terminals.
inline std::vector<double> gae_reference(const std::vector<double>& deltas,
                                         const std::vector<bool>& terminals, double gamma,
                                         double lambda) {
  std::vector<double> adv(deltas.size(), 0.0);
  for (size_t t = 0; t < deltas.size(); ++t) {
    double g = 1.0;
    for (size_t k = t; k < deltas.size(); ++k) {
      adv[t] += g * deltas[k];
      if (terminals[k]) break;
      g *= gamma * lambda;
    }
  }
  return adv;
}

// Upper-tail chi-square critical values at alpha = 0.01 for the dof used in
// uniformity tests.
inline double chi2_crit_99(int dof) {
  switch (dof) {
    case 9: return 21.666;
    case 99: return 134.642;
    default: return -1.0;
  }
}

inline double chi2_stat(const std::vector<long>& counts, double expected) {
  double stat = 0.0;
  for (long c : counts) {
    double d = static_cast<double>(c) - expected;
    stat += d * d / expected;
  }
  return stat;
}

}  // namespace oracle
