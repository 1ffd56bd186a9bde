#pragma once

#include <cstdint>
#include <vector>

#include "ife/rng.hpp"
#include "ife/tensor.hpp"

namespace ife {

// One environment step. episode_id/step_index let consumers verify that a
// window of transitions is contiguous.
struct Transition {
  Tensor obs;
  int action = 0;
  double reward = 0.0;
  Tensor next_obs;
  bool terminal = false;
  long episode_id = -1;
  long step_index = -1;
};

// Uniform ring-buffer replay. Observations are stored as 8-bit fixed point
// (value = byte/255), which is lossless for the environments' palette.
class ReplayBuffer {
 public:
  // An n-step-compressed transition: target = reward_sum +
  // bootstrap_coef * Q(next_obs) with bootstrap_coef = 0 past a terminal.
  struct Record {
    Tensor obs;
    int action = 0;
    double reward_sum = 0.0;
    double bootstrap_coef = 0.0;
    Tensor next_obs;
    bool terminal = false;
  };

  ReplayBuffer(long capacity, uint64_t seed);

  void push(const Record& r);
  long size() const { return static_cast<long>(entries_.size()); }
  long capacity() const { return capacity_; }

  // Uniform with replacement; requires size() >= batch_size.
  std::vector<long> sample_indices(int batch_size);
  Record get(long index) const;

 private:
  struct Entry {
    std::vector<uint8_t> obs;
    std::vector<uint8_t> next_obs;
    int action;
    double reward_sum;
    double bootstrap_coef;
    bool terminal;
  };

  long capacity_;
  Rng rng_;
  std::vector<Entry> entries_;
  long write_ = 0;
  Shape obs_shape_;
};

std::vector<uint8_t> quantize_frame(const Tensor& t);
Tensor dequantize_frame(const std::vector<uint8_t>& bytes, const Shape& shape);

}  // namespace ife
