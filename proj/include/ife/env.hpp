#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "ife/rng.hpp"
#include "ife/tensor.hpp"

namespace ife {

// Pixel-rendered Catch: a ball falls from the top row, a paddle slides along
// the bottom row, reward +-1 for catch/miss at the final row. The distractor
// variant adds falling objects that carry no reward.
struct EnvConfig {
  int grid_w = 10;
  int grid_h = 10;
  int cell_px = 4;
  int episode_len = 10;  // hard step cap; plain Catch terminates in grid_h-1 steps
  int distractors = 0;
  uint64_t seed = 0;
};

// Rendered intensities; distinct so attention attribution is unambiguous.
constexpr double kBallIntensity = 1.0;
constexpr double kPaddleIntensity = 0.6;
constexpr double kDistractorIntensity = 0.8;

struct Cell {
  int row = 0;
  int col = 0;
};

class CatchEnv {
 public:
  explicit CatchEnv(const EnvConfig& cfg);

  // Ball at the top row in a uniformly random column, paddle bottom-center.
  Tensor reset();

  struct StepResult {
    Tensor obs;
    double reward = 0.0;
    bool terminal = false;
  };
  // action: 0 = left, 1 = stay, 2 = right.
  StepResult step(int action);

  Tensor render() const;  // 1 x H x W grayscale in [0, 1]

  const EnvConfig& config() const { return cfg_; }
  bool terminal() const { return done_; }
  Cell ball() const { return {ball_row_, ball_col_}; }
  Cell paddle() const { return {cfg_.grid_h - 1, paddle_col_}; }
  const std::vector<Cell>& distractors() const { return distractors_; }

  int frame_h() const { return cfg_.grid_h * cfg_.cell_px; }
  int frame_w() const { return cfg_.grid_w * cfg_.cell_px; }

 private:
  EnvConfig cfg_;
  Rng ball_rng_;
  Rng distractor_rng_;
  int ball_row_ = 0, ball_col_ = 0, paddle_col_ = 0;
  int steps_ = 0;
  bool done_ = true;
  std::vector<Cell> distractors_;
};

// Object cells visible in one frame; used by evaluation metrics.
struct FrameObjects {
  bool valid = false;  // false for the zero-padded frames at episode start
  Cell ball;
  Cell paddle;
  std::vector<Cell> distractors;
};

// Action-repeat and frame-stacking wrapper. Rewards are summed over skipped
// frames and the last frame is kept; the stack is zero-padded after reset,
// oldest frame first.
class WrappedEnv {
 public:
  WrappedEnv(const EnvConfig& cfg, int frameskip, int framestack);

  Tensor reset();
  struct StepResult {
    Tensor obs;
    double reward = 0.0;
    bool terminal = false;
  };
  StepResult step(int action);

  int obs_channels() const { return framestack_; }
  int obs_h() const { return env_.frame_h(); }
  int obs_w() const { return env_.frame_w(); }
  int frameskip() const { return frameskip_; }
  bool terminal() const { return env_.terminal(); }
  const CatchEnv& inner() const { return env_; }

  // One entry per stacked frame, oldest first; parallels the observation.
  const std::deque<FrameObjects>& stacked_objects() const { return objects_; }

 private:
  Tensor stack() const;
  void push_frame(const Tensor& frame, const FrameObjects& objs);

  CatchEnv env_;
  int frameskip_;
  int framestack_;
  std::deque<Tensor> frames_;
  std::deque<FrameObjects> objects_;
};

}  // namespace ife
