#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ife/env.hpp"
#include "ife/model.hpp"
#include "ife/optim.hpp"
#include "ife/replay.hpp"
#include "ife/worker_pool.hpp"

namespace ife {

struct Hyperparams {
  double gamma = 0.99;
  int n_step = 3;
  double lr = 0.00025;
  double eps_start = 1.0;
  double eps_end = 0.01;
  long eps_decay_frames = 50'000;
  long target_update_frames = 2'000;
  int batch_size = 32;
  double adam_eps = 0.005 / 32;  // value preset: 0.005 / batch size
  double grad_clip = 10.0;       // <= 0 disables
  double gae_lambda = 0.92;
  long total_frames = 200'000;
  bool amsgrad = false;

  // Loop shape.
  int update_every = 8;        // env steps between gradient updates (value regime)
  long replay_capacity = 10'000;
  long replay_min = 500;       // transitions before updates start
  int num_envs = 8;            // actor-critic rollout width
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int num_threads = 8;         // fixed worker count; part of the config for determinism
  long checkpoint_every = 100'000;
  double early_stop_return = 2.0;  // stop once the rolling mean reaches this; 2.0 = never (returns are in [-1, 1])
  long early_stop_min_frames = 0;  // keep training at least this long regardless
  int return_window = 100;

  void validate() const;
};

// Linear interpolation from eps_start to eps_end over eps_decay_frames,
// clamped afterwards.
double epsilon(long frame, const Hyperparams& hp);

// Affine decomposition of the n-step return: G = reward_sum +
// bootstrap_coef * q_next, truncated at the first terminal.
struct NStepParts {
  double reward_sum = 0.0;
  double bootstrap_coef = 0.0;
};
NStepParts nstep_return_parts(const std::vector<Transition>& window, const Hyperparams& hp);

// G = sum_k gamma^k r_k + gamma^n q_next, truncated at the first terminal.
// Errors if the window is not contiguous within one episode.
double nstep_target(const std::vector<Transition>& window, double q_next, const Hyperparams& hp);

// Hard copy of online into target when frame is a multiple of
// target_update_frames.
void target_sync(const Model& online, Model& target, long frame, const Hyperparams& hp);

// A_t = sum_k (gamma*lambda)^k delta_{t+k}; a terminal at t cuts propagation
// from t+1 into t.
std::vector<double> gae_advantages(const std::vector<double>& deltas, const std::vector<bool>& terminals,
                                   const Hyperparams& hp);

// Per-thread model replicas for sharded gradient work.
class UpdateWorkers {
 public:
  UpdateWorkers(const Model& proto, int threads, bool with_target);
  WorkerPool pool;
  std::vector<Model> online;
  std::vector<Model> target;
  void refresh_online(const Model& master);
  void refresh_target(const Model& master);
};

struct DqnUpdateResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Double-Q targets (online argmax, target evaluation), mean Huber loss,
// gradient clip, Adam step. Target params are read-only.
DqnUpdateResult dqn_update(const std::vector<ReplayBuffer::Record>& batch, Model& online,
                           const Model& target, AdamState& adam, const Hyperparams& hp,
                           UpdateWorkers* workers = nullptr);

// One environment's n_step segment for the actor-critic update.
struct Rollout {
  std::vector<Tensor> obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<bool> terminals;
  Tensor bootstrap_obs;
};

struct A2cLosses {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

// Policy gradient with GAE advantages, value regression to the GAE returns,
// entropy bonus; Adam (AMSGrad per the actor-critic preset).
A2cLosses a2c_update(const std::vector<Rollout>& rollouts, Model& model, AdamState& adam,
                     const Hyperparams& hp, UpdateWorkers* workers = nullptr);

enum class Regime { ValueDqn, ActorCritic };

struct TrainOptions {
  Regime regime = Regime::ValueDqn;
  EnvConfig env;
  int frameskip = 1;
  int framestack = 4;
  ModelConfig model;
  Hyperparams hp;
  uint64_t seed = 0;
  std::string out_dir;  // empty: no files written
  bool quiet = false;
  long progress_every = 1'000;  // frames between stdout progress lines
};

struct EpisodeRow {
  long frame = 0;
  long episode = 0;
  double episode_return = 0.0;
  double loss = 0.0;
  double eps = 0.0;
  double attention_entropy = 0.0;
};

struct TrainResult {
  std::vector<EpisodeRow> rows;
  Model model;
  long frames = 0;
  std::string checkpoint_path;
  std::string stats_path;
  // Mean return over the final min(k, episodes) episodes.
  double mean_return(int k) const;
};

// Thrown when training hits a non-finite loss; carries a diagnostic dump.
struct TrainAbort : std::runtime_error {
  explicit TrainAbort(const std::string& what) : std::runtime_error(what) {}
};

// Runs the selected regime for hp.total_frames (or until the early-stop
// return), streaming stats.csv and periodic checkpoints to out_dir. Fully
// deterministic for a fixed options struct.
TrainResult train(const TrainOptions& opts);

// CSV row formatting shared by train() and tests.
std::string episode_row_csv(const EpisodeRow& row);

}  // namespace ife
