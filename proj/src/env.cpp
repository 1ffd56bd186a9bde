#include "ife/env.hpp"

#include <algorithm>

namespace ife {

namespace {
constexpr uint64_t kBallTag = 0xb411;
constexpr uint64_t kDistractorTag = 0xd157;
}  // namespace

CatchEnv::CatchEnv(const EnvConfig& cfg)
    : cfg_(cfg), ball_rng_(derive_rng(cfg.seed, kBallTag)), distractor_rng_(derive_rng(cfg.seed, kDistractorTag)) {
  if (cfg.grid_w < 2 || cfg.grid_h < 2)
    throw ValueError("env: grid must be at least 2x2, got " + std::to_string(cfg.grid_w) + "x" +
                     std::to_string(cfg.grid_h));
  if (cfg.cell_px < 1) throw ValueError("env: cell_px must be positive");
  if (cfg.episode_len < 1) throw ValueError("env: episode_len must be positive");
  if (cfg.distractors < 0) throw ValueError("env: distractor count must be nonnegative");
}

Tensor CatchEnv::reset() {
  ball_row_ = 0;
  ball_col_ = ball_rng_.uniform_int(cfg_.grid_w);
  paddle_col_ = cfg_.grid_w / 2;
  steps_ = 0;
  done_ = false;
  distractors_.clear();
  for (int i = 0; i < cfg_.distractors; ++i)
    distractors_.push_back({distractor_rng_.uniform_int(cfg_.grid_h), distractor_rng_.uniform_int(cfg_.grid_w)});
  return render();
}

CatchEnv::StepResult CatchEnv::step(int action) {
  if (done_) throw ValueError("env: step() after terminal; call reset()");
  if (action < 0 || action > 2)
    throw ValueError("env: action must be 0 (left), 1 (stay) or 2 (right), got " + std::to_string(action));
  paddle_col_ = std::clamp(paddle_col_ + action - 1, 0, cfg_.grid_w - 1);
  ball_row_ += 1;
  for (Cell& d : distractors_) d.row = (d.row + 1) % cfg_.grid_h;
  steps_ += 1;

  StepResult r;
  if (ball_row_ == cfg_.grid_h - 1) {
    done_ = true;
    r.reward = paddle_col_ == ball_col_ ? 1.0 : -1.0;
  } else if (steps_ >= cfg_.episode_len) {
    done_ = true;
    r.reward = 0.0;
  }
  r.terminal = done_;
  r.obs = render();
  return r;
}

Tensor CatchEnv::render() const {
  int h = frame_h(), w = frame_w(), px = cfg_.cell_px;
  Tensor frame = Tensor::zeros({1, h, w});
  auto paint = [&](const Cell& c, double v) {
    for (int y = c.row * px; y < (c.row + 1) * px; ++y)
      for (int x = c.col * px; x < (c.col + 1) * px; ++x)
        frame.values()[static_cast<size_t>(y) * w + x] = v;
  };
  for (const Cell& d : distractors_) paint(d, kDistractorIntensity);
  paint({cfg_.grid_h - 1, paddle_col_}, kPaddleIntensity);
  paint({ball_row_, ball_col_}, kBallIntensity);
  return frame;
}

WrappedEnv::WrappedEnv(const EnvConfig& cfg, int frameskip, int framestack)
    : env_(cfg), frameskip_(frameskip), framestack_(framestack) {
  if (frameskip < 1 || framestack < 1)
    throw ValueError("wrap: frameskip and framestack must be >= 1");
}

void WrappedEnv::push_frame(const Tensor& frame, const FrameObjects& objs) {
  frames_.push_back(frame);
  objects_.push_back(objs);
  while (static_cast<int>(frames_.size()) > framestack_) {
    frames_.pop_front();
    objects_.pop_front();
  }
}

Tensor WrappedEnv::stack() const {
  int h = env_.frame_h(), w = env_.frame_w();
  Tensor obs = Tensor::zeros({framestack_, h, w});
  for (int c = 0; c < framestack_; ++c) {
    const auto& f = frames_[static_cast<size_t>(c)].values();
    std::copy(f.begin(), f.end(), obs.values().begin() + static_cast<size_t>(c) * h * w);
  }
  return obs;
}

Tensor WrappedEnv::reset() {
  Tensor frame = env_.reset();
  frames_.clear();
  objects_.clear();
  for (int i = 0; i < framestack_ - 1; ++i) {
    frames_.push_back(Tensor::zeros(frame.shape()));
    objects_.push_back(FrameObjects{});
  }
  push_frame(frame, FrameObjects{true, env_.ball(), env_.paddle(), env_.distractors()});
  return stack();
}

WrappedEnv::StepResult WrappedEnv::step(int action) {
  StepResult out;
  Tensor last;
  for (int i = 0; i < frameskip_; ++i) {
    CatchEnv::StepResult r = env_.step(action);
    out.reward += r.reward;
    last = r.obs;
    out.terminal = r.terminal;
    if (r.terminal) break;
  }
  push_frame(last, FrameObjects{true, env_.ball(), env_.paddle(), env_.distractors()});
  out.obs = stack();
  return out;
}

}  // namespace ife
