#pragma once

#include <string>

#include "ife/trainer.hpp"

namespace ife {

std::string env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const std::string& text);

// A complete training run description: profile defaults, overridden by a
// flat dotted-key JSON config file, overridden by CLI flags.
struct RunConfig {
  Regime regime = Regime::ValueDqn;
  EnvConfig env;
  int frameskip = 1;
  int framestack = 4;
  ModelConfig model;
  Hyperparams hp;
  uint64_t seed = 0;
  bool adam_eps_explicit = false;  // whether a config key pinned adam_eps

  // Recomputes derived fields (model input shape from env/wrapper, head from
  // regime, default Adam epsilon) and validates.
  void finalize();
};

// "desk" = small-scale defaults that learn in minutes; "paper" = the
// published hyperparameter table verbatim.
RunConfig profile_config(const std::string& profile, Regime regime);

// Applies a flat dotted-key JSON object ({"env.grid_w": 10, ...}).
// Unknown keys are errors.
void apply_config_text(RunConfig& cfg, const std::string& json_text);
void apply_config_file(RunConfig& cfg, const std::string& path);

Regime regime_from_string(const std::string& s);

}  // namespace ife
