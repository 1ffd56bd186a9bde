#include "ife/replay.hpp"

#include <cmath>

namespace ife {

std::vector<uint8_t> quantize_frame(const Tensor& t) {
  std::vector<uint8_t> out(t.values().size());
  for (size_t i = 0; i < out.size(); ++i) {
    double v = t.values()[i];
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    out[i] = static_cast<uint8_t>(std::floor(v * 255.0 + 0.5));
  }
  return out;
}

Tensor dequantize_frame(const std::vector<uint8_t>& bytes, const Shape& shape) {
  std::vector<double> v(bytes.size());
  for (size_t i = 0; i < bytes.size(); ++i) v[i] = static_cast<double>(bytes[i]) / 255.0;
  return Tensor::from(shape, std::move(v));
}

ReplayBuffer::ReplayBuffer(long capacity, uint64_t seed) : capacity_(capacity), rng_(seed) {
  if (capacity < 1) throw ValueError("replay: capacity must be positive");
}

void ReplayBuffer::push(const Record& r) {
  if (obs_shape_.empty())
    obs_shape_ = r.obs.shape();
  else if (r.obs.shape() != obs_shape_)
    throw ShapeError("replay: observation shape changed from " + shape_str(obs_shape_) + " to " +
                     shape_str(r.obs.shape()));
  Entry e{quantize_frame(r.obs), quantize_frame(r.next_obs), r.action, r.reward_sum,
          r.bootstrap_coef, r.terminal};
  if (static_cast<long>(entries_.size()) < capacity_) {
    entries_.push_back(std::move(e));
  } else {
    entries_[static_cast<size_t>(write_)] = std::move(e);
  }
  write_ = (write_ + 1) % capacity_;
}

std::vector<long> ReplayBuffer::sample_indices(int batch_size) {
  if (size() < batch_size)
    throw ValueError("replay: cannot sample " + std::to_string(batch_size) + " from " +
                     std::to_string(size()) + " stored transitions");
  std::vector<long> idx(static_cast<size_t>(batch_size));
  for (auto& i : idx) i = static_cast<long>(rng_.uniform_int(static_cast<int>(size())));
  return idx;
}

ReplayBuffer::Record ReplayBuffer::get(long index) const {
  const Entry& e = entries_.at(static_cast<size_t>(index));
  return Record{dequantize_frame(e.obs, obs_shape_), e.action,          e.reward_sum,
                e.bootstrap_coef,                    dequantize_frame(e.next_obs, obs_shape_), e.terminal};
}

}  // namespace ife
