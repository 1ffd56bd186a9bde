#pragma once

#include <vector>

#include "ife/tensor.hpp"

namespace ife {

// Adam moment buffers for a fixed parameter list. `amsgrad` switches to the
// max-of-second-moment variant.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<double>> vmax;
  long step = 0;
  bool amsgrad = false;

  static AdamState init(const std::vector<Tensor>& params, bool amsgrad = false);
};

// One bias-corrected Adam update over params' accumulated gradients.
// Parameters without an allocated gradient are treated as zero-gradient.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm. max_norm <= 0 disables clipping.
double grad_clip_norm(std::vector<Tensor>& params, double max_norm = 10.0);

}  // namespace ife
