#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ife/audit.hpp"
#include "ife/checkpoint.hpp"
#include "ife/config.hpp"
#include "ife/evaluate.hpp"
#include "ife/trainer.hpp"

namespace {

using namespace ife;

// Checkpoint meta carries the environment and wrapper the model was trained
// with; evaluation commands reconstruct them from there.
struct CheckpointRun {
  Model model;
  EnvConfig env;
  int frameskip = 1;
  int framestack = 1;
};

CheckpointRun open_checkpoint(const std::string& path) {
  LoadedCheckpoint lc = load_checkpoint(path);
  nlohmann::json meta = nlohmann::json::parse(lc.meta_json);
  CheckpointRun run{std::move(lc.model), env_config_from_json(meta.at("env").dump()),
                    meta.at("frameskip").get<int>(), meta.at("framestack").get<int>()};
  return run;
}

audit::ConvStackSpec parse_stack(const std::string& stack, const std::string& input) {
  audit::ConvStackSpec spec;
  size_t pos = 0;
  while (pos < stack.size()) {
    size_t comma = stack.find(',', pos);
    std::string part = stack.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    int k = 0, s = 0;
    if (std::sscanf(part.c_str(), "%dx%d", &k, &s) != 2)
      throw ValueError("audit: bad --stack entry '" + part + "', expected KxS");
    spec.layers.push_back({k, s});
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  int w = 0, h = 0;
  if (std::sscanf(input.c_str(), "%dx%d", &w, &h) != 2)
    throw ValueError("audit: bad --input '" + input + "', expected WxH");
  spec.input_w = w;
  spec.input_h = h;
  spec.validate();
  return spec;
}

OverlayConfig parse_overlay(double darken, const std::string& norm, const std::string& colormap) {
  OverlayConfig cfg;
  cfg.darken = darken;
  if (norm == "max") cfg.norm = MaskNorm::Max;
  else if (norm == "sum") cfg.norm = MaskNorm::Sum;
  else throw ValueError("overlay: --norm must be max or sum");
  if (colormap == "grayscale") cfg.colormap = Colormap::Grayscale;
  else if (colormap == "heat") cfg.colormap = Colormap::Heat;
  else throw ValueError("overlay: --colormap must be grayscale or heat");
  return cfg;
}

int run_train(const std::string& config_path, const std::string& profile, const std::string& regime_flag,
              uint64_t seed, bool seed_given, const std::string& out_dir) {
  // The regime decides which profile preset applies, so resolve it first:
  // flag wins, then the config file, then the dqn default.
  std::string regime_name = regime_flag;
  std::string config_text;
  {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "train: cannot open config '" << config_path << "'\n";
      return 1;
    }
    config_text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  if (regime_name.empty()) {
    nlohmann::json peek = nlohmann::json::parse(config_text, nullptr, false);
    if (peek.is_object() && peek.contains("train.regime"))
      regime_name = peek["train.regime"].get<std::string>();
    else
      regime_name = "dqn";
  }

  RunConfig cfg = profile_config(profile, regime_from_string(regime_name));
  apply_config_text(cfg, config_text);
  cfg.regime = regime_from_string(regime_name);
  if (seed_given) cfg.seed = seed;
  cfg.finalize();

  TrainOptions opts;
  opts.regime = cfg.regime;
  opts.env = cfg.env;
  opts.frameskip = cfg.frameskip;
  opts.framestack = cfg.framestack;
  opts.model = cfg.model;
  opts.hp = cfg.hp;
  opts.seed = cfg.seed;
  opts.out_dir = out_dir;

  TrainResult res = train(opts);
  std::printf("trained %ld frames, %zu episodes, mean return over last %d: %.4f\n", res.frames,
              res.rows.size(), cfg.hp.return_window, res.mean_return(cfg.hp.return_window));
  std::printf("stats: %s\ncheckpoint: %s\n", res.stats_path.c_str(), res.checkpoint_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable feature extractor laboratory"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model and write stats + checkpoints");
  std::string config_path, profile = "desk", regime, out_dir;
  uint64_t seed = 0;
  train_cmd->add_option("--config", config_path, "Flat dotted-key JSON config")->required();
  train_cmd->add_option("--profile", profile, "Preset: desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  train_cmd->add_option("--regime", regime, "dqn or a2c")->check(CLI::IsMember({"dqn", "a2c"}));
  auto* seed_opt = train_cmd->add_option("--seed", seed, "Run seed");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Greedy evaluation of a checkpoint");
  std::string eval_ckpt, eval_env = "plain", traj_csv;
  int eval_episodes = 100, eval_distractors = 1;
  uint64_t eval_seed = 1;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--episodes", eval_episodes);
  eval_cmd->add_option("--env", eval_env, "plain or distractor")->check(CLI::IsMember({"plain", "distractor"}));
  eval_cmd->add_option("--distractors", eval_distractors, "Distractor count for --env distractor");
  eval_cmd->add_option("--seed", eval_seed);
  eval_cmd->add_option("--trajectories", traj_csv, "Optional per-step CSV dump");

  // visualize
  auto* viz_cmd = app.add_subcommand("visualize", "Write attention-overlay PPM frames");
  std::string viz_ckpt, viz_out, viz_norm = "max", viz_cmap = "grayscale";
  int viz_episodes = 1;
  double viz_darken = 0.25;
  uint64_t viz_seed = 1;
  viz_cmd->add_option("--checkpoint", viz_ckpt)->required();
  viz_cmd->add_option("--episodes", viz_episodes);
  viz_cmd->add_option("--out", viz_out)->required();
  viz_cmd->add_option("--darken", viz_darken);
  viz_cmd->add_option("--norm", viz_norm)->check(CLI::IsMember({"max", "sum"}));
  viz_cmd->add_option("--colormap", viz_cmap)->check(CLI::IsMember({"grayscale", "heat"}));
  viz_cmd->add_option("--seed", viz_seed);

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Spatial-preservation report for a conv stack");
  std::string stack_arg, input_arg;
  audit_cmd->add_option("--stack", stack_arg, "Comma-separated KxS layers, e.g. 8x4,4x2,3x1")->required();
  audit_cmd->add_option("--input", input_arg, "Input size WxH, e.g. 84x84")->required();

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Side-by-side overlays of two checkpoints");
  std::string cmp_a, cmp_b, cmp_out, cmp_norm = "max", cmp_cmap = "grayscale";
  int cmp_episodes = 1;
  double cmp_darken = 0.25;
  uint64_t cmp_seed = 1;
  cmp_cmd->add_option("--checkpoint-a", cmp_a)->required();
  cmp_cmd->add_option("--checkpoint-b", cmp_b)->required();
  cmp_cmd->add_option("--out", cmp_out)->required();
  cmp_cmd->add_option("--episodes", cmp_episodes);
  cmp_cmd->add_option("--darken", cmp_darken);
  cmp_cmd->add_option("--norm", cmp_norm)->check(CLI::IsMember({"max", "sum"}));
  cmp_cmd->add_option("--colormap", cmp_cmap)->check(CLI::IsMember({"grayscale", "heat"}));
  cmp_cmd->add_option("--seed", cmp_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed())
      return run_train(config_path, profile, regime, seed, seed_opt->count() > 0, out_dir);

    if (eval_cmd->parsed()) {
      CheckpointRun run = open_checkpoint(eval_ckpt);
      if (eval_env == "distractor") run.env.distractors = eval_distractors;
      EvalOptions opts;
      opts.episodes = eval_episodes;
      opts.seed = eval_seed;
      opts.trajectory_csv = traj_csv;
      EvalResult res = evaluate(run.model, run.env, run.frameskip, run.framestack, opts);
      std::cout << res.to_json() << "\n";
      return 0;
    }

    if (viz_cmd->parsed()) {
      CheckpointRun run = open_checkpoint(viz_ckpt);
      OverlayConfig cfg = parse_overlay(viz_darken, viz_norm, viz_cmap);
      long n = visualize_episodes(run.model, run.env, run.frameskip, run.framestack, viz_episodes,
                                  viz_out, cfg, viz_seed);
      std::printf("wrote %ld frames to %s\n", n, viz_out.c_str());
      return 0;
    }

    if (audit_cmd->parsed()) {
      audit::ConvStackSpec spec = parse_stack(stack_arg, input_arg);
      std::cout << audit::audit_report(spec).to_json() << "\n";
      return 0;
    }

    if (cmp_cmd->parsed()) {
      CheckpointRun a = open_checkpoint(cmp_a);
      CheckpointRun b = open_checkpoint(cmp_b);
      OverlayConfig cfg = parse_overlay(cmp_darken, cmp_norm, cmp_cmap);
      long n = compare_episodes(a.model, b.model, a.env, a.frameskip, a.framestack, cmp_episodes,
                                cmp_out, cfg, cmp_seed);
      std::printf("wrote %ld frames to %s\n", n, cmp_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
