#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ife/audit.hpp"
#include "ife/tensor.hpp"

namespace ife {

// Front-end of the feature extractor: non-overlapping (stride == kernel)
// for the interpretable model, overlapping (stride < kernel) for the
// conventional-CNN comparison baseline.
enum class FrontEnd { NonOverlap, OverlapBaseline };

enum class HeadKind { DuelingQ, ActorCritic };

struct ConvLayerCfg {
  int kernel = 2;
  int stride = 2;
  int channels = 16;
};

struct AfeCfg {
  // Overlapping pool: a stride under the kernel keeps adjacent feature
  // columns distinguishable after pooling, which the cell-aligned toy
  // geometry needs.
  int pool_kernel = 2;
  int pool_stride = 1;
  int residual_blocks = 2;
  // Residual width. The narrow default is deliberate: a lean encoder behind
  // the attention bottleneck cannot absorb the softmax attenuation through
  // sheer weight growth, so solving the task forces the mask itself to
  // concentrate on the informative cells.
  int channels = 2;  // 0 = inherit the front-end's output channels
  int out_h = 0;     // adaptive max-pool output; 0 = keep the incoming dims
  int out_w = 0;
};

struct ModelConfig {
  FrontEnd kind = FrontEnd::NonOverlap;
  int in_channels = 4;
  int in_h = 40;
  int in_w = 40;
  std::vector<ConvLayerCfg> conv_layers = {{2, 2, 16}, {2, 2, 32}};
  int attention_dim = 64;
  AfeCfg afe;
  HeadKind head = HeadKind::DuelingQ;
  int num_actions = 3;

  void validate() const;
  int feature_h() const;
  int feature_w() const;
  int feature_channels() const;
  int embedding_dim() const;
  // Geometry of the front-end, for receptive-field / displacement analysis.
  audit::ConvStackSpec stack_spec() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  // FNV-1a hash of the canonical config serialization.
  std::string fingerprint() const;
};

// Named parameter tensors; order is the serialization order.
struct ModelParams {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;
  std::string fingerprint;

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  long count() const;
};

struct HueOutput {
  Tensor features;  // pre-attention, C_f x H_f x W_f
  Tensor masked;    // attention-weighted features, same shape
  Tensor mask;      // H_f x W_f, nonnegative, sums to 1
};

class Model {
 public:
  Model() = default;

  // Orthogonal weights (gain sqrt(2) ahead of ReLU), zero biases.
  static Model init(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }

  // Front-end convs + ReLU, per-location soft attention, masking.
  HueOutput encode(const Tensor& obs) const;

  // e_i = w2 * tanh(w1 * z_i + b1) + b2 per location, softmax over locations.
  Tensor attention_weights(const Tensor& z) const;

  // Max pool, residual blocks, adaptive max pool, flatten.
  Tensor embed(const Tensor& masked) const;

  // Q(a) = V + A(a) - mean(A).
  Tensor q_values(const Tensor& embedding) const;

  struct PolicyValue {
    Tensor logits;
    Tensor value;  // size-1 tensor
  };
  PolicyValue policy_value(const Tensor& embedding) const;

  struct QOut {
    Tensor q;
    Tensor mask;
  };
  QOut forward_q(const Tensor& obs) const;

  struct AcOut {
    Tensor logits;
    Tensor value;
    Tensor mask;
  };
  AcOut forward_ac(const Tensor& obs) const;

  Model clone() const;
  // Copies parameter values (not gradients) from a same-architecture model.
  void copy_params_from(const Model& other);
  void zero_grads();

 private:
  ModelConfig cfg_;
  ModelParams params_;
};

// Shannon entropy of an attention mask, in nats.
double mask_entropy(const Tensor& mask);

}  // namespace ife
