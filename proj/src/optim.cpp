#include "ife/optim.hpp"

#include <cmath>

namespace ife {

AdamState AdamState::init(const std::vector<Tensor>& params, bool amsgrad) {
  AdamState s;
  s.amsgrad = amsgrad;
  for (const Tensor& p : params) {
    s.m.emplace_back(p.values().size(), 0.0);
    s.v.emplace_back(p.values().size(), 0.0);
    if (amsgrad) s.vmax.emplace_back(p.values().size(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1, double beta2,
               double eps) {
  if (lr <= 0.0) throw ValueError("adam_step: learning rate must be positive");
  state.step += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    bool has_grad = p.has_grad();
    auto& m = state.m[pi];
    auto& v = state.v[pi];
    for (size_t i = 0; i < p.values().size(); ++i) {
      double g = has_grad ? p.grad()[i] : 0.0;
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      if (state.amsgrad) {
        auto& vm = state.vmax[pi];
        if (vhat > vm[i]) vm[i] = vhat;
        vhat = vm[i];
      }
      p.values()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double grad_clip_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (Tensor& p : params) {
      if (!p.has_grad()) continue;
      for (double& g : p.grad()) g *= s;
    }
  }
  return norm;
}

}  // namespace ife
