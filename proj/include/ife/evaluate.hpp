#pragma once

#include <string>

#include "ife/env.hpp"
#include "ife/image.hpp"
#include "ife/model.hpp"

namespace ife {

struct EvalOptions {
  int episodes = 100;
  uint64_t seed = 1;
  std::string trajectory_csv;  // optional per-step dump (step, action, reward, terminal)
};

struct EvalResult {
  double mean_return = 0.0;
  // Fraction of mask weight on feature cells containing ball pixels (any
  // stacked frame) or paddle pixels (latest frame), averaged over steps.
  double attention_concentration = 0.0;
  // Fraction of mask weight on cells containing only distractor pixels.
  double distractor_share = 0.0;
  // Concentration a uniform mask would score (relevant cells / all cells).
  double uniform_baseline = 0.0;
  long episodes = 0;
  long steps = 0;

  std::string to_json() const;
};

// Greedy rollouts (argmax Q or argmax policy logits, per the model's head).
EvalResult evaluate(const Model& model, const EnvConfig& env_cfg, int frameskip, int framestack,
                    const EvalOptions& opts);

// One overlay PPM per observation (including the reset observation), named
// ep<episode>_step<step>.ppm. Returns the number of files written.
long visualize_episodes(const Model& model, const EnvConfig& env_cfg, int frameskip, int framestack,
                        int episodes, const std::string& out_dir, const OverlayConfig& overlay_cfg,
                        uint64_t seed);

// Side-by-side overlays of two models on the same observations; model_a
// drives the policy. Returns the number of files written.
long compare_episodes(const Model& model_a, const Model& model_b, const EnvConfig& env_cfg,
                      int frameskip, int framestack, int episodes, const std::string& out_dir,
                      const OverlayConfig& overlay_cfg, uint64_t seed);

}  // namespace ife
