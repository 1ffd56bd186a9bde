#include "ife/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "ife/checkpoint.hpp"
#include "ife/config.hpp"
#include "ife/ops.hpp"

namespace ife {

namespace {
constexpr uint64_t kReplayTag = 0x5e1a;
constexpr uint64_t kEpsTag = 0xe75;
constexpr uint64_t kEnvTag = 0xe40;
constexpr uint64_t kPolicyTag = 0x9019;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace

void Hyperparams::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValueError("hyperparams: need 0 < gamma <= 1");
  if (n_step < 1) throw ValueError("hyperparams: n_step must be >= 1");
  if (eps_end > eps_start) throw ValueError("hyperparams: eps_end must not exceed eps_start");
  if (lr <= 0.0) throw ValueError("hyperparams: lr must be positive");
  if (batch_size < 1) throw ValueError("hyperparams: batch_size must be positive");
  if (num_envs < 1) throw ValueError("hyperparams: num_envs must be positive");
  if (num_threads < 1) throw ValueError("hyperparams: num_threads must be positive");
  if (total_frames < 1) throw ValueError("hyperparams: total_frames must be positive");
  if (eps_decay_frames < 1) throw ValueError("hyperparams: eps_decay_frames must be positive");
  if (target_update_frames < 1) throw ValueError("hyperparams: target_update_frames must be positive");
}

double epsilon(long frame, const Hyperparams& hp) {
  if (frame < 0) throw ValueError("epsilon: frame must be nonnegative");
  if (frame >= hp.eps_decay_frames) return hp.eps_end;
  double t = static_cast<double>(frame) / static_cast<double>(hp.eps_decay_frames);
  return hp.eps_start + (hp.eps_end - hp.eps_start) * t;
}

NStepParts nstep_return_parts(const std::vector<Transition>& window, const Hyperparams& hp) {
  if (window.empty()) throw ValueError("nstep: empty window");
  for (size_t k = 1; k < window.size(); ++k) {
    const Transition& prev = window[k - 1];
    const Transition& cur = window[k];
    if (prev.episode_id != cur.episode_id || cur.step_index != prev.step_index + 1)
      throw ValueError("nstep: window is not contiguous at position " + std::to_string(k));
    if (prev.terminal)
      throw ValueError("nstep: window continues past a terminal at position " + std::to_string(k - 1));
  }
  NStepParts parts;
  double g = 1.0;
  bool terminated = false;
  for (const Transition& t : window) {
    parts.reward_sum += g * t.reward;
    g *= hp.gamma;
    if (t.terminal) {
      terminated = true;
      break;
    }
  }
  parts.bootstrap_coef = terminated ? 0.0 : g;
  return parts;
}

double nstep_target(const std::vector<Transition>& window, double q_next, const Hyperparams& hp) {
  NStepParts p = nstep_return_parts(window, hp);
  return p.reward_sum + p.bootstrap_coef * q_next;
}

void target_sync(const Model& online, Model& target, long frame, const Hyperparams& hp) {
  if (frame % hp.target_update_frames == 0) target.copy_params_from(online);
}

std::vector<double> gae_advantages(const std::vector<double>& deltas, const std::vector<bool>& terminals,
                                   const Hyperparams& hp) {
  if (terminals.size() != deltas.size())
    throw ValueError("gae: terminals length != deltas length");
  std::vector<double> adv(deltas.size());
  double acc = 0.0;
  for (size_t i = deltas.size(); i-- > 0;) {
    if (terminals[i]) acc = 0.0;
    acc = deltas[i] + hp.gamma * hp.gae_lambda * acc;
    adv[i] = acc;
  }
  return adv;
}

UpdateWorkers::UpdateWorkers(const Model& proto, int threads, bool with_target) : pool(threads) {
  for (int i = 0; i < threads; ++i) {
    online.push_back(proto.clone());
    if (with_target) target.push_back(proto.clone());
  }
}

void UpdateWorkers::refresh_online(const Model& master) {
  for (Model& m : online) {
    m.copy_params_from(master);
    m.zero_grads();
  }
}

void UpdateWorkers::refresh_target(const Model& master) {
  for (Model& m : target) m.copy_params_from(master);
}

namespace {

// Gradient of the mean Huber loss for one batch item, accumulated into the
// given online replica. Returns the item's unscaled loss.
double dqn_sample_grad(const ReplayBuffer::Record& rec, const Model& online, const Model& target,
                       const Hyperparams& hp, int batch_size) {
  double y = rec.reward_sum;
  if (rec.bootstrap_coef != 0.0) {
    Tensor q_online_next = online.forward_q(rec.next_obs).q;
    int a_star = argmax(q_online_next);
    Tensor q_target_next = target.forward_q(rec.next_obs).q;
    y += rec.bootstrap_coef * q_target_next[a_star];
  }
  Tape tape;
  Tape::Scope scope(tape);
  Tensor q = online.forward_q(rec.obs).q;
  Tensor loss = huber_loss(pick(q, rec.action), Tensor::scalar(y));
  scale(loss, 1.0 / batch_size).backward();
  return loss.value();
}

void accumulate_replica_grads(Model& master, std::vector<Model>& replicas) {
  auto& mp = master.params().tensors;
  for (size_t i = 0; i < mp.size(); ++i) {
    auto& mg = mp[i].grad();
    for (Model& r : replicas) {
      Tensor& rp = r.params().tensors[i];
      if (!rp.has_grad()) continue;
      const auto& rg = rp.grad();
      for (size_t j = 0; j < mg.size(); ++j) mg[j] += rg[j];
    }
  }
}

}  // namespace

DqnUpdateResult dqn_update(const std::vector<ReplayBuffer::Record>& batch, Model& online,
                           const Model& target, AdamState& adam, const Hyperparams& hp,
                           UpdateWorkers* workers) {
  if (batch.empty()) throw ValueError("dqn_update: empty batch");
  const int b = static_cast<int>(batch.size());
  double loss_sum = 0.0;
  online.zero_grads();
  if (workers) {
    workers->refresh_online(online);
    workers->refresh_target(target);
    const int w = workers->pool.size();
    std::vector<double> shard_loss(static_cast<size_t>(w), 0.0);
    workers->pool.run([&](int wid) {
      double acc = 0.0;
      for (int i = wid; i < b; i += w)
        acc += dqn_sample_grad(batch[static_cast<size_t>(i)], workers->online[static_cast<size_t>(wid)],
                               workers->target[static_cast<size_t>(wid)], hp, b);
      shard_loss[static_cast<size_t>(wid)] = acc;
    });
    for (double s : shard_loss) loss_sum += s;
    accumulate_replica_grads(online, workers->online);
  } else {
    for (const auto& rec : batch) loss_sum += dqn_sample_grad(rec, online, target, hp, b);
  }
  DqnUpdateResult res;
  res.loss = loss_sum / b;
  res.grad_norm = grad_clip_norm(online.params().tensors, hp.grad_clip);
  adam_step(online.params().tensors, adam, hp.lr, 0.9, 0.999, hp.adam_eps);
  return res;
}

namespace {

// Accumulates the gradient of one rollout's loss (scaled by 1/total_steps)
// into `model` and returns the rollout's unscaled loss component sums.
A2cLosses a2c_rollout_grad(const Rollout& ro, const Model& model, const Hyperparams& hp,
                           long total_steps) {
  const size_t n = ro.obs.size();
  if (n == 0 || ro.actions.size() != n || ro.rewards.size() != n || ro.terminals.size() != n)
    throw ValueError("a2c: malformed rollout");

  std::vector<double> values(n + 1);
  for (size_t t = 0; t < n; ++t) values[t] = model.forward_ac(ro.obs[t]).value.value();
  values[n] = model.forward_ac(ro.bootstrap_obs).value.value();

  std::vector<double> deltas(n);
  for (size_t t = 0; t < n; ++t) {
    double vnext = ro.terminals[t] ? 0.0 : values[t + 1];
    deltas[t] = ro.rewards[t] + hp.gamma * vnext - values[t];
  }
  std::vector<double> adv = gae_advantages(deltas, ro.terminals, hp);

  A2cLosses acc;
  double inv = 1.0 / static_cast<double>(total_steps);
  for (size_t t = 0; t < n; ++t) {
    double ret = adv[t] + values[t];
    Tape tape;
    Tape::Scope scope(tape);
    Model::AcOut out = model.forward_ac(ro.obs[t]);
    Tensor logp = log_softmax(out.logits);
    Tensor pol = scale(pick(logp, ro.actions[t]), -adv[t]);
    Tensor vloss = square(sub(out.value, Tensor::scalar(ret)));
    Tensor ent = neg(sum(mul(ife::exp(logp), logp)));
    Tensor total = add(pol, sub(scale(vloss, hp.value_coef), scale(ent, hp.entropy_coef)));
    scale(total, inv).backward();
    acc.policy += pol.value();
    acc.value += vloss.value();
    acc.entropy += ent.value();
    acc.total += total.value();
  }
  return acc;
}

}  // namespace

A2cLosses a2c_update(const std::vector<Rollout>& rollouts, Model& model, AdamState& adam,
                     const Hyperparams& hp, UpdateWorkers* workers) {
  if (rollouts.empty()) throw ValueError("a2c_update: no rollouts");
  long total_steps = 0;
  for (const Rollout& r : rollouts) total_steps += static_cast<long>(r.obs.size());
  A2cLosses sums;
  model.zero_grads();
  if (workers) {
    workers->refresh_online(model);
    const int w = workers->pool.size();
    std::vector<A2cLosses> shard(static_cast<size_t>(w));
    workers->pool.run([&](int wid) {
      A2cLosses acc;
      for (size_t i = static_cast<size_t>(wid); i < rollouts.size(); i += static_cast<size_t>(w)) {
        A2cLosses l = a2c_rollout_grad(rollouts[i], workers->online[static_cast<size_t>(wid)], hp, total_steps);
        acc.policy += l.policy;
        acc.value += l.value;
        acc.entropy += l.entropy;
        acc.total += l.total;
      }
      shard[static_cast<size_t>(wid)] = acc;
    });
    for (const A2cLosses& s : shard) {
      sums.policy += s.policy;
      sums.value += s.value;
      sums.entropy += s.entropy;
      sums.total += s.total;
    }
    accumulate_replica_grads(model, workers->online);
  } else {
    for (const Rollout& r : rollouts) {
      A2cLosses l = a2c_rollout_grad(r, model, hp, total_steps);
      sums.policy += l.policy;
      sums.value += l.value;
      sums.entropy += l.entropy;
      sums.total += l.total;
    }
  }
  double inv = 1.0 / static_cast<double>(total_steps);
  sums.policy *= inv;
  sums.value *= inv;
  sums.entropy *= inv;
  sums.total *= inv;
  if (hp.grad_clip > 0.0) grad_clip_norm(model.params().tensors, hp.grad_clip);
  adam_step(model.params().tensors, adam, hp.lr, 0.9, 0.999, hp.adam_eps);
  return sums;
}

std::string episode_row_csv(const EpisodeRow& row) {
  return std::to_string(row.frame) + "," + std::to_string(row.episode) + "," +
         fmt_double(row.episode_return) + "," + fmt_double(row.loss) + "," + fmt_double(row.eps) + "," +
         fmt_double(row.attention_entropy);
}

double TrainResult::mean_return(int k) const {
  if (rows.empty()) return 0.0;
  size_t n = std::min(rows.size(), static_cast<size_t>(k));
  double acc = 0.0;
  for (size_t i = rows.size() - n; i < rows.size(); ++i) acc += rows[i].episode_return;
  return acc / static_cast<double>(n);
}

namespace {

class StatsWriter {
 public:
  StatsWriter(const std::string& out_dir, TrainResult& result) : result_(result) {
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      path_ = out_dir + "/stats.csv";
      file_.open(path_, std::ios::trunc);
      if (!file_) throw ValueError("train: cannot open '" + path_ + "' for writing");
      file_ << "frame,episode,return,loss,epsilon,attention_entropy\n";
      result_.stats_path = path_;
    }
  }

  void add(const EpisodeRow& row) {
    result_.rows.push_back(row);
    if (file_.is_open()) file_ << episode_row_csv(row) << "\n";
  }

  void close() {
    if (file_.is_open()) file_.close();
  }

 private:
  TrainResult& result_;
  std::string path_;
  std::ofstream file_;
};

std::string checkpoint_meta(const TrainOptions& o) {
  nlohmann::json meta;
  meta["regime"] = o.regime == Regime::ValueDqn ? "dqn" : "a2c";
  meta["env"] = nlohmann::json::parse(env_config_to_json(o.env));
  meta["frameskip"] = o.frameskip;
  meta["framestack"] = o.framestack;
  return meta.dump();
}

void abort_on_bad_loss(double loss, long frame, const Model& model) {
  if (std::isfinite(loss)) return;
  std::string diag = "train: non-finite loss " + std::to_string(loss) + " at frame " + std::to_string(frame);
  double pnorm = 0.0, gnorm = 0.0;
  for (const Tensor& t : model.params().tensors) {
    for (double v : t.values()) pnorm += v * v;
    if (t.has_grad())
      for (double g : t.grad()) gnorm += g * g;
  }
  diag += "; param L2 " + std::to_string(std::sqrt(pnorm)) + ", grad L2 " + std::to_string(std::sqrt(gnorm));
  std::cerr << diag << std::endl;
  throw TrainAbort(diag);
}

class RollingReturn {
 public:
  explicit RollingReturn(int window) : window_(window) {}
  void add(double r) {
    vals_.push_back(r);
    if (static_cast<int>(vals_.size()) > window_) vals_.pop_front();
  }
  bool full() const { return static_cast<int>(vals_.size()) >= window_; }
  double mean() const {
    if (vals_.empty()) return 0.0;
    double a = 0.0;
    for (double v : vals_) a += v;
    return a / static_cast<double>(vals_.size());
  }

 private:
  int window_;
  std::deque<double> vals_;
};

TrainResult train_dqn(const TrainOptions& o) {
  TrainResult result;
  result.model = Model::init(o.model, o.seed);
  Model& online = result.model;
  Model target = online.clone();
  AdamState adam = AdamState::init(online.params().tensors, o.hp.amsgrad);
  std::unique_ptr<UpdateWorkers> workers;
  if (o.hp.num_threads > 1) workers = std::make_unique<UpdateWorkers>(online, o.hp.num_threads, true);

  EnvConfig env_cfg = o.env;
  env_cfg.seed = derive_seed(o.seed, kEnvTag);
  WrappedEnv env(env_cfg, o.frameskip, o.framestack);
  ReplayBuffer buffer(o.hp.replay_capacity, derive_seed(o.seed, kReplayTag));
  Rng eps_rng = derive_rng(o.seed, kEpsTag);

  StatsWriter stats(o.out_dir, result);
  RollingReturn rolling(o.hp.return_window);

  std::deque<Transition> pending;
  auto flush_pending = [&](bool all) {
    while ((all && !pending.empty()) ||
           static_cast<int>(pending.size()) == o.hp.n_step) {
      std::vector<Transition> window(pending.begin(), pending.end());
      NStepParts parts = nstep_return_parts(window, o.hp);
      ReplayBuffer::Record rec;
      rec.obs = window.front().obs;
      rec.action = window.front().action;
      rec.reward_sum = parts.reward_sum;
      rec.bootstrap_coef = parts.bootstrap_coef;
      rec.next_obs = window.back().next_obs;
      rec.terminal = window.back().terminal;
      buffer.push(rec);
      pending.pop_front();
      if (!all) break;
    }
  };

  long frame = 0, env_step = 0, episode = 0, synced = 0, saved = 0, progressed = 0;
  double last_loss = 0.0;
  double ep_return = 0.0, ep_entropy = 0.0;
  long ep_entropy_n = 0, episode_id = 0, step_index = 0;
  Tensor obs = env.reset();

  while (frame < o.hp.total_frames) {
    double eps = epsilon(frame, o.hp);
    // The encoder pass is enough for the attention log; the AFE + head run
    // only when the action is actually greedy.
    HueOutput hue = online.encode(obs);
    ep_entropy += mask_entropy(hue.mask);
    ep_entropy_n += 1;
    int action;
    if (eps_rng.uniform() < eps)
      action = eps_rng.uniform_int(o.model.num_actions);
    else
      action = argmax(online.q_values(online.embed(hue.masked)));

    WrappedEnv::StepResult sr = env.step(action);
    frame += o.frameskip;
    env_step += 1;
    ep_return += sr.reward;

    Transition t;
    t.obs = obs;
    t.action = action;
    t.reward = sr.reward;
    t.next_obs = sr.obs;
    t.terminal = sr.terminal;
    t.episode_id = episode_id;
    t.step_index = step_index++;
    pending.push_back(std::move(t));
    flush_pending(sr.terminal);

    if (env_step % o.hp.update_every == 0 &&
        buffer.size() >= std::max<long>(o.hp.replay_min, o.hp.batch_size)) {
      std::vector<ReplayBuffer::Record> batch;
      for (long idx : buffer.sample_indices(o.hp.batch_size)) batch.push_back(buffer.get(idx));
      DqnUpdateResult ur = dqn_update(batch, online, target, adam, o.hp, workers.get());
      last_loss = ur.loss;
      abort_on_bad_loss(last_loss, frame, online);
    }

    if (frame / o.hp.target_update_frames > synced) {
      synced = frame / o.hp.target_update_frames;
      target.copy_params_from(online);
    }
    if (!o.out_dir.empty() && o.hp.checkpoint_every > 0 && frame / o.hp.checkpoint_every > saved) {
      saved = frame / o.hp.checkpoint_every;
      save_checkpoint(o.out_dir + "/checkpoint_" + std::to_string(frame) + ".ife1", online,
                      checkpoint_meta(o));
    }
    if (!o.quiet && frame / o.progress_every > progressed) {
      progressed = frame / o.progress_every;
      std::printf("frame=%ld episodes=%ld mean_return_%d=%.3f epsilon=%.3f loss=%.5f\n", frame, episode,
                  o.hp.return_window, rolling.mean(), eps, last_loss);
      std::fflush(stdout);
    }

    if (sr.terminal) {
      EpisodeRow row{frame, episode, ep_return, last_loss, eps,
                     ep_entropy_n ? ep_entropy / ep_entropy_n : 0.0};
      stats.add(row);
      rolling.add(ep_return);
      episode += 1;
      episode_id += 1;
      step_index = 0;
      ep_return = 0.0;
      ep_entropy = 0.0;
      ep_entropy_n = 0;
      obs = env.reset();
      if (frame >= o.hp.early_stop_min_frames && rolling.full() &&
          rolling.mean() >= o.hp.early_stop_return)
        break;
    } else {
      obs = sr.obs;
    }
  }

  result.frames = frame;
  if (!o.out_dir.empty()) {
    result.checkpoint_path = o.out_dir + "/checkpoint_final.ife1";
    save_checkpoint(result.checkpoint_path, online, checkpoint_meta(o));
  }
  stats.close();
  return result;
}

struct A2cEnvState {
  std::unique_ptr<WrappedEnv> env;
  Rng action_rng{0};
  Tensor obs;
  double ep_return = 0.0;
  double ep_entropy = 0.0;
  long ep_steps = 0;
  struct Done {
    int step_in_rollout;
    double ep_return;
    double mean_entropy;
  };
  std::vector<Done> completed;  // episodes finished during the current rollout
};

TrainResult train_a2c(const TrainOptions& o) {
  TrainResult result;
  result.model = Model::init(o.model, o.seed);
  Model& model = result.model;
  AdamState adam = AdamState::init(model.params().tensors, o.hp.amsgrad);
  std::unique_ptr<UpdateWorkers> workers;
  if (o.hp.num_threads > 1) workers = std::make_unique<UpdateWorkers>(model, o.hp.num_threads, false);

  const int k = o.hp.num_envs;
  std::vector<A2cEnvState> envs(static_cast<size_t>(k));
  for (int e = 0; e < k; ++e) {
    EnvConfig cfg = o.env;
    cfg.seed = derive_seed(o.seed, kEnvTag + static_cast<uint64_t>(e));
    envs[static_cast<size_t>(e)].env = std::make_unique<WrappedEnv>(cfg, o.frameskip, o.framestack);
    envs[static_cast<size_t>(e)].action_rng = derive_rng(o.seed, kPolicyTag + static_cast<uint64_t>(e));
    envs[static_cast<size_t>(e)].obs = envs[static_cast<size_t>(e)].env->reset();
  }

  StatsWriter stats(o.out_dir, result);
  RollingReturn rolling(o.hp.return_window);

  long frame = 0, episode = 0, saved = 0, progressed = 0;
  double last_loss = 0.0;
  bool stop = false;

  auto collect_env = [&](int e, const Model& actor, Rollout& ro) {
    A2cEnvState& st = envs[static_cast<size_t>(e)];
    for (int t = 0; t < o.hp.n_step; ++t) {
      Model::AcOut out = actor.forward_ac(st.obs);
      st.ep_entropy += mask_entropy(out.mask);
      st.ep_steps += 1;
      Tensor probs = softmax(out.logits);
      double u = st.action_rng.uniform();
      int action = 0;
      double cum = 0.0;
      for (int a = 0; a < probs.size(); ++a) {
        cum += probs[a];
        if (u < cum) {
          action = a;
          break;
        }
        action = a;
      }
      WrappedEnv::StepResult sr = st.env->step(action);
      ro.obs.push_back(st.obs);
      ro.actions.push_back(action);
      ro.rewards.push_back(sr.reward);
      ro.terminals.push_back(sr.terminal);
      st.ep_return += sr.reward;
      if (sr.terminal) {
        st.completed.push_back({t, st.ep_return, st.ep_steps ? st.ep_entropy / st.ep_steps : 0.0});
        st.ep_return = 0.0;
        st.ep_entropy = 0.0;
        st.ep_steps = 0;
        st.obs = st.env->reset();
      } else {
        st.obs = sr.obs;
      }
    }
    ro.bootstrap_obs = st.obs;
  };

  while (frame < o.hp.total_frames && !stop) {
    std::vector<Rollout> rollouts(static_cast<size_t>(k));
    if (workers) {
      workers->refresh_online(model);
      const int w = workers->pool.size();
      workers->pool.run([&](int wid) {
        for (int e = wid; e < k; e += w)
          collect_env(e, workers->online[static_cast<size_t>(wid)], rollouts[static_cast<size_t>(e)]);
      });
    } else {
      for (int e = 0; e < k; ++e) collect_env(e, model, rollouts[static_cast<size_t>(e)]);
    }

    A2cLosses losses = a2c_update(rollouts, model, adam, o.hp, workers.get());
    last_loss = losses.total;
    abort_on_bad_loss(last_loss, frame, model);

    long frame_start = frame;
    frame += static_cast<long>(k) * o.hp.n_step * o.frameskip;

    // Episodes completed this rollout, in step order (stable across envs).
    std::vector<std::pair<long, EpisodeRow>> finished;
    for (int e = 0; e < k; ++e) {
      for (const auto& done : envs[static_cast<size_t>(e)].completed) {
        long f = frame_start + static_cast<long>(done.step_in_rollout + 1) * o.frameskip;
        finished.push_back({f, EpisodeRow{f, 0, done.ep_return, last_loss, 0.0, done.mean_entropy}});
      }
      envs[static_cast<size_t>(e)].completed.clear();
    }
    std::stable_sort(finished.begin(), finished.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [f, row] : finished) {
      row.episode = episode++;
      stats.add(row);
      rolling.add(row.episode_return);
      if (frame >= o.hp.early_stop_min_frames && rolling.full() &&
          rolling.mean() >= o.hp.early_stop_return)
        stop = true;
    }

    if (!o.out_dir.empty() && o.hp.checkpoint_every > 0 && frame / o.hp.checkpoint_every > saved) {
      saved = frame / o.hp.checkpoint_every;
      save_checkpoint(o.out_dir + "/checkpoint_" + std::to_string(frame) + ".ife1", model,
                      checkpoint_meta(o));
    }
    if (!o.quiet && frame / o.progress_every > progressed) {
      progressed = frame / o.progress_every;
      std::printf("frame=%ld episodes=%ld mean_return_%d=%.3f loss=%.5f entropy=%.3f\n", frame, episode,
                  o.hp.return_window, rolling.mean(), last_loss, losses.entropy);
      std::fflush(stdout);
    }
  }

  result.frames = frame;
  if (!o.out_dir.empty()) {
    result.checkpoint_path = o.out_dir + "/checkpoint_final.ife1";
    save_checkpoint(result.checkpoint_path, model, checkpoint_meta(o));
  }
  stats.close();
  return result;
}

}  // namespace

TrainResult train(const TrainOptions& opts) {
  opts.hp.validate();
  opts.model.validate();
  if (opts.model.in_channels != opts.framestack)
    throw ValueError("train: model in_channels " + std::to_string(opts.model.in_channels) +
                     " != framestack " + std::to_string(opts.framestack));
  if (opts.regime == Regime::ValueDqn) {
    if (opts.model.head != HeadKind::DuelingQ) throw ValueError("train: value regime needs a dueling head");
    return train_dqn(opts);
  }
  if (opts.model.head != HeadKind::ActorCritic)
    throw ValueError("train: actor-critic regime needs an actor-critic head");
  return train_a2c(opts);
}

}  // namespace ife
