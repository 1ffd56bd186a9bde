#include "ife/evaluate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ife/audit.hpp"
#include "ife/ops.hpp"

namespace ife {

namespace {

int greedy_action(const Model& model, const Tensor& obs, Tensor* mask_out) {
  if (model.config().head == HeadKind::DuelingQ) {
    Model::QOut out = model.forward_q(obs);
    if (mask_out) *mask_out = out.mask;
    return argmax(out.q);
  }
  Model::AcOut out = model.forward_ac(obs);
  if (mask_out) *mask_out = out.mask;
  return argmax(out.logits);
}

// Feature-grid cells whose naive-upsample pixel block intersects the pixel
// rectangle of an environment cell. For the non-overlapping front-end these
// blocks coincide with the receptive fields.
void mark_cells(std::set<int>& cells, const Cell& c, int cell_px, int fh, int fw, int in_h, int in_w) {
  int y0 = c.row * cell_px, y1 = (c.row + 1) * cell_px;
  int x0 = c.col * cell_px, x1 = (c.col + 1) * cell_px;
  for (int fy = 0; fy < fh; ++fy) {
    audit::PixelInterval ys = audit::naive_upsample_interval(fh, in_h, fy);
    if (ys.end <= y0 || ys.begin >= y1) continue;
    for (int fx = 0; fx < fw; ++fx) {
      audit::PixelInterval xs = audit::naive_upsample_interval(fw, in_w, fx);
      if (xs.end <= x0 || xs.begin >= x1) continue;
      cells.insert(fy * fw + fx);
    }
  }
}

struct StepShares {
  double relevant = 0.0;
  double distractor = 0.0;
  double uniform = 0.0;
};

StepShares mask_shares(const Tensor& mask, const WrappedEnv& env, const ModelConfig& cfg) {
  int fh = mask.dim(0), fw = mask.dim(1);
  int cell_px = env.inner().config().cell_px;
  std::set<int> relevant, distractor;
  const auto& objs = env.stacked_objects();
  for (size_t i = 0; i < objs.size(); ++i) {
    if (!objs[i].valid) continue;
    mark_cells(relevant, objs[i].ball, cell_px, fh, fw, cfg.in_h, cfg.in_w);
    if (i + 1 == objs.size()) mark_cells(relevant, objs[i].paddle, cell_px, fh, fw, cfg.in_h, cfg.in_w);
    for (const Cell& d : objs[i].distractors) mark_cells(distractor, d, cell_px, fh, fw, cfg.in_h, cfg.in_w);
  }
  StepShares s;
  for (int c : relevant) s.relevant += mask[c];
  for (int c : distractor)
    if (!relevant.count(c)) s.distractor += mask[c];
  s.uniform = static_cast<double>(relevant.size()) / static_cast<double>(fh * fw);
  return s;
}

}  // namespace

std::string EvalResult::to_json() const {
  nlohmann::json j;
  j["mean_return"] = mean_return;
  j["attention_concentration"] = attention_concentration;
  j["distractor_share"] = distractor_share;
  j["uniform_baseline"] = uniform_baseline;
  j["episodes"] = episodes;
  j["steps"] = steps;
  return j.dump(2);
}

EvalResult evaluate(const Model& model, const EnvConfig& env_cfg, int frameskip, int framestack,
                    const EvalOptions& opts) {
  EnvConfig cfg = env_cfg;
  cfg.seed = derive_seed(opts.seed, 0xea51);
  WrappedEnv env(cfg, frameskip, framestack);

  std::ofstream traj;
  if (!opts.trajectory_csv.empty()) {
    traj.open(opts.trajectory_csv, std::ios::trunc);
    if (!traj) throw ValueError("evaluate: cannot open '" + opts.trajectory_csv + "'");
    traj << "step,action,reward,terminal\n";
  }

  EvalResult res;
  double conc_sum = 0.0, distr_sum = 0.0, unif_sum = 0.0;
  for (int ep = 0; ep < opts.episodes; ++ep) {
    Tensor obs = env.reset();
    double ep_ret = 0.0;
    long step = 0;
    while (!env.terminal()) {
      Tensor mask;
      int action = greedy_action(model, obs, &mask);
      StepShares shares = mask_shares(mask, env, model.config());
      conc_sum += shares.relevant;
      distr_sum += shares.distractor;
      unif_sum += shares.uniform;
      res.steps += 1;
      WrappedEnv::StepResult sr = env.step(action);
      ep_ret += sr.reward;
      if (traj.is_open())
        traj << step << "," << action << "," << sr.reward << "," << (sr.terminal ? 1 : 0) << "\n";
      obs = sr.obs;
      step += 1;
    }
    res.mean_return += ep_ret;
    res.episodes += 1;
  }
  res.mean_return /= static_cast<double>(res.episodes);
  if (res.steps > 0) {
    conc_sum /= static_cast<double>(res.steps);
    distr_sum /= static_cast<double>(res.steps);
    unif_sum /= static_cast<double>(res.steps);
  }
  res.attention_concentration = conc_sum;
  res.distractor_share = distr_sum;
  res.uniform_baseline = unif_sum;
  return res;
}

namespace {

ImageRGB overlay_for(const Model& model, const Tensor& obs, const OverlayConfig& cfg) {
  Tensor mask;
  if (model.config().head == HeadKind::DuelingQ)
    mask = model.forward_q(obs).mask;
  else
    mask = model.forward_ac(obs).mask;
  const ModelConfig& mc = model.config();
  // Latest stacked frame is the current one.
  std::vector<double> frame(obs.values().end() - static_cast<long>(mc.in_h) * mc.in_w, obs.values().end());
  FloatImage fi{mc.in_w, mc.in_h, std::move(frame)};
  FloatImage up = upsample_nearest(mask, mc.in_h, mc.in_w);
  return overlay(fi, up, cfg);
}

std::string frame_name(int ep, long step) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "ep%03d_step%03ld.ppm", ep, step);
  return buf;
}

}  // namespace

long visualize_episodes(const Model& model, const EnvConfig& env_cfg, int frameskip, int framestack,
                        int episodes, const std::string& out_dir, const OverlayConfig& overlay_cfg,
                        uint64_t seed) {
  EnvConfig cfg = env_cfg;
  cfg.seed = derive_seed(seed, 0x715);
  WrappedEnv env(cfg, frameskip, framestack);
  std::filesystem::create_directories(out_dir);
  long written = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Tensor obs = env.reset();
    long step = 0;
    write_ppm(overlay_for(model, obs, overlay_cfg), out_dir + "/" + frame_name(ep, step));
    ++written;
    while (!env.terminal()) {
      int action = greedy_action(model, obs, nullptr);
      WrappedEnv::StepResult sr = env.step(action);
      obs = sr.obs;
      ++step;
      write_ppm(overlay_for(model, obs, overlay_cfg), out_dir + "/" + frame_name(ep, step));
      ++written;
    }
  }
  return written;
}

long compare_episodes(const Model& model_a, const Model& model_b, const EnvConfig& env_cfg,
                      int frameskip, int framestack, int episodes, const std::string& out_dir,
                      const OverlayConfig& overlay_cfg, uint64_t seed) {
  if (model_a.config().in_h != model_b.config().in_h || model_a.config().in_w != model_b.config().in_w ||
      model_a.config().in_channels != model_b.config().in_channels)
    throw ValueError("compare: models expect different observation shapes");
  EnvConfig cfg = env_cfg;
  cfg.seed = derive_seed(seed, 0xc09a);
  WrappedEnv env(cfg, frameskip, framestack);
  std::filesystem::create_directories(out_dir);
  long written = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Tensor obs = env.reset();
    long step = 0;
    auto emit = [&] {
      ImageRGB pair =
          hstack(overlay_for(model_a, obs, overlay_cfg), overlay_for(model_b, obs, overlay_cfg));
      write_ppm(pair, out_dir + "/" + frame_name(ep, step));
      ++written;
    };
    emit();
    while (!env.terminal()) {
      int action = greedy_action(model_a, obs, nullptr);
      WrappedEnv::StepResult sr = env.step(action);
      obs = sr.obs;
      ++step;
      emit();
    }
  }
  return written;
}

}  // namespace ife
