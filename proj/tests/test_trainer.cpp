#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ife/trainer.hpp"
#include "ife/ops.hpp"
#include "oracles.hpp"

using namespace ife;

namespace {

Hyperparams desk_hp() {
  Hyperparams hp;
  hp.eps_decay_frames = 50'000;
  return hp;
}

ModelConfig micro_model(HeadKind head, int in_channels, int in_hw) {
  ModelConfig cfg;
  cfg.in_channels = in_channels;
  cfg.in_h = in_hw;
  cfg.in_w = in_hw;
  cfg.conv_layers = {{2, 2, 4}};
  cfg.attention_dim = 6;
  cfg.afe = AfeCfg{2, 2, 1, 0, 1, 1};
  cfg.head = head;
  cfg.num_actions = 3;
  return cfg;
}

Tensor random_obs(const ModelConfig& cfg, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(cfg.in_channels) * cfg.in_h * cfg.in_w);
  for (auto& x : v) x = rng.uniform(0.0, 1.0);
  return Tensor::from({cfg.in_channels, cfg.in_h, cfg.in_w}, std::move(v));
}

std::vector<Transition> make_window(const std::vector<double>& rewards,
                                    const std::vector<bool>& terminals) {
  std::vector<Transition> w;
  for (size_t i = 0; i < rewards.size(); ++i) {
    Transition t;
    t.obs = Tensor::zeros({1});
    t.next_obs = Tensor::zeros({1});
    t.action = 0;
    t.reward = rewards[i];
    t.terminal = terminals[i];
    t.episode_id = 1;
    t.step_index = static_cast<long>(i);
    w.push_back(t);
  }
  return w;
}

}  // namespace

TEST_CASE("epsilon: endpoints and linear midpoint") {
  Hyperparams hp = desk_hp();
  CHECK(epsilon(0, hp) == 1.0);
  CHECK(epsilon(hp.eps_decay_frames, hp) == 0.01);
  CHECK(epsilon(hp.eps_decay_frames * 10, hp) == 0.01);
  CHECK(epsilon(hp.eps_decay_frames / 2, hp) == doctest::Approx(0.505));
  CHECK_THROWS_AS(epsilon(-1, hp), ValueError);
}

TEST_CASE("nstep_target: arithmetic example, terminal truncation, contiguity") {
  Hyperparams hp;
  hp.gamma = 0.5;
  hp.n_step = 3;
  auto w = make_window({1.0, 0.0, 2.0}, {false, false, false});
  CHECK(nstep_target(w, 4.0, hp) == doctest::Approx(2.0));

  auto wt = make_window({0.7}, {true});
  CHECK(nstep_target(wt, 123.0, hp) == doctest::Approx(0.7));

  auto bad = make_window({1.0, 1.0}, {false, false});
  bad[1].step_index = 5;
  CHECK_THROWS_AS(nstep_target(bad, 0.0, hp), ValueError);
  auto past_terminal = make_window({1.0, 1.0}, {true, false});
  CHECK_THROWS_AS(nstep_target(past_terminal, 0.0, hp), ValueError);
}

TEST_CASE("nstep_target matches brute force on random windows") {
  Hyperparams hp;
  Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    hp.gamma = rng.uniform(0.5, 1.0);
    int n = 1 + rng.uniform_int(6);
    std::vector<double> rewards;
    std::vector<bool> terminals;
    for (int i = 0; i < n; ++i) {
      rewards.push_back(rng.uniform(-2.0, 2.0));
      terminals.push_back(i == n - 1 && rng.uniform() < 0.4);
    }
    double q = rng.uniform(-3.0, 3.0);
    double got = nstep_target(make_window(rewards, terminals), q, hp);
    double want = oracle::nstep_reference(rewards, terminals, hp.gamma, q);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("target_sync: copies on the boundary, target frozen otherwise") {
  Hyperparams hp = desk_hp();
  hp.target_update_frames = 100;
  ModelConfig cfg = micro_model(HeadKind::DuelingQ, 1, 8);
  Model online = Model::init(cfg, 1);
  Model target = Model::init(cfg, 2);
  Rng rng(3);
  Tensor obs = random_obs(cfg, rng);

  Tensor q_target_before = target.forward_q(obs).q;
  target_sync(online, target, 50, hp);  // not a boundary
  CHECK(target.forward_q(obs).q.values() == q_target_before.values());

  target_sync(online, target, 200, hp);
  CHECK(target.forward_q(obs).q.values() == online.forward_q(obs).q.values());

  // Online keeps moving; target holds until the next boundary.
  for (double& v : online.params().at("head.v.b").values()) v += 0.5;
  CHECK(target.forward_q(obs).q.values() != online.forward_q(obs).q.values());

  long syncs = 0;
  for (long frame = 1; frame <= 1000; ++frame)
    if (frame % hp.target_update_frames == 0) ++syncs;
  CHECK(syncs == 10);
}

TEST_CASE("gae: single delta, table-lambda example, terminals cut") {
  Hyperparams hp;  // gamma 0.99, lambda 0.92
  CHECK(gae_advantages({0.37}, {false}, hp)[0] == doctest::Approx(0.37));

  auto adv = gae_advantages({1.0, 1.0}, {false, false}, hp);
  CHECK(adv[0] == doctest::Approx(1.9108));
  CHECK(adv[1] == doctest::Approx(1.0));

  adv = gae_advantages({1.0, 1.0}, {true, false}, hp);
  CHECK(adv[0] == doctest::Approx(1.0));  // terminal blocks the second delta
}

TEST_CASE("gae matches the double-sum oracle on random sequences") {
  Hyperparams hp;
  Rng rng(73);
  for (int trial = 0; trial < 100; ++trial) {
    hp.gamma = rng.uniform(0.8, 1.0);
    hp.gae_lambda = rng.uniform(0.5, 1.0);
    int n = 1 + rng.uniform_int(20);
    std::vector<double> deltas;
    std::vector<bool> terminals;
    for (int i = 0; i < n; ++i) {
      deltas.push_back(rng.uniform(-1.0, 1.0));
      terminals.push_back(rng.uniform() < 0.15);
    }
    auto got = gae_advantages(deltas, terminals, hp);
    auto want = oracle::gae_reference(deltas, terminals, hp.gamma, hp.gae_lambda);
    for (int i = 0; i < n; ++i) CHECK(got[static_cast<size_t>(i)] == doctest::Approx(want[static_cast<size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("replay: uniform sampling, ring capacity, underfill errors") {
  ReplayBuffer buf(100, 99);
  ReplayBuffer::Record r;
  r.obs = Tensor::zeros({1, 2, 2});
  r.next_obs = Tensor::zeros({1, 2, 2});
  CHECK_THROWS_AS(buf.sample_indices(1), ValueError);
  for (int i = 0; i < 100; ++i) {
    r.action = i;
    buf.push(r);
  }
  CHECK(buf.size() == 100);
  std::vector<long> counts(100, 0);
  for (int batch = 0; batch < 1000; ++batch)
    for (long idx : buf.sample_indices(100)) counts[static_cast<size_t>(idx)] += 1;
  double stat = oracle::chi2_stat(counts, 1000.0);
  CHECK(stat < oracle::chi2_crit_99(99));

  // Ring overwrite: capacity is never exceeded and old actions vanish.
  for (int i = 100; i < 250; ++i) {
    r.action = i;
    buf.push(r);
  }
  CHECK(buf.size() == 100);
  bool found_old = false;
  for (long i = 0; i < buf.size(); ++i)
    if (buf.get(i).action < 150) found_old = true;
  CHECK_FALSE(found_old);
}

TEST_CASE("replay: 8-bit storage is lossless for the rendered palette") {
  ReplayBuffer buf(4, 1);
  ReplayBuffer::Record r;
  r.obs = Tensor::from({1, 2, 2}, {0.0, 0.6, 0.8, 1.0});
  r.next_obs = r.obs;
  buf.push(r);
  CHECK(buf.get(0).obs.values() == r.obs.values());
}

TEST_CASE("dqn_update: zero-gradient batch leaves parameters unchanged") {
  ModelConfig cfg = micro_model(HeadKind::DuelingQ, 1, 8);
  Model online = Model::init(cfg, 5);
  for (Tensor& t : online.params().tensors)
    for (double& v : t.values()) v = 0.0;  // Q == 0 everywhere
  Model target = online.clone();
  AdamState adam = AdamState::init(online.params().tensors);
  Hyperparams hp = desk_hp();

  Rng rng(6);
  std::vector<ReplayBuffer::Record> batch;
  for (int i = 0; i < 8; ++i) {
    ReplayBuffer::Record r;
    r.obs = random_obs(cfg, rng);
    r.next_obs = random_obs(cfg, rng);
    r.action = rng.uniform_int(3);
    r.reward_sum = 0.0;  // target = 0 + coef * Q_target = 0 = prediction
    r.bootstrap_coef = 0.97;
    batch.push_back(r);
  }
  DqnUpdateResult res = dqn_update(batch, online, target, adam, hp);
  CHECK(res.loss == 0.0);
  for (const Tensor& t : online.params().tensors)
    for (double v : t.values()) CHECK(v == 0.0);
}

TEST_CASE("dqn_update: loss trends down on a frozen synthetic batch; target untouched") {
  ModelConfig cfg = micro_model(HeadKind::DuelingQ, 1, 8);
  Model online = Model::init(cfg, 7);
  Model target = Model::init(cfg, 8);
  std::vector<std::vector<double>> target_params_before;
  for (const Tensor& t : target.params().tensors) target_params_before.push_back(t.values());
  AdamState adam = AdamState::init(online.params().tensors);
  Hyperparams hp = desk_hp();
  hp.lr = 0.003;

  Rng rng(9);
  std::vector<ReplayBuffer::Record> batch;
  for (int i = 0; i < 16; ++i) {
    ReplayBuffer::Record r;
    r.obs = random_obs(cfg, rng);
    r.next_obs = r.obs;
    r.action = rng.uniform_int(3);
    r.reward_sum = rng.uniform(-1.0, 1.0);
    r.bootstrap_coef = 0.0;  // frozen targets
    batch.push_back(r);
  }
  std::vector<double> losses;
  for (int u = 0; u < 100; ++u) losses.push_back(dqn_update(batch, online, target, adam, hp).loss);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += losses[static_cast<size_t>(i)];
    tail += losses[losses.size() - 1 - static_cast<size_t>(i)];
  }
  CHECK(tail < head);

  for (size_t i = 0; i < target.params().tensors.size(); ++i)
    CHECK(target.params().tensors[i].values() == target_params_before[i]);

  CHECK_THROWS_AS(dqn_update({}, online, target, adam, hp), ValueError);
}

TEST_CASE("dqn_update: sharded workers reproduce the serial update") {
  ModelConfig cfg = micro_model(HeadKind::DuelingQ, 1, 8);
  Model serial = Model::init(cfg, 15);
  Model parallel = serial.clone();
  Model target = Model::init(cfg, 16);
  AdamState adam_s = AdamState::init(serial.params().tensors);
  AdamState adam_p = AdamState::init(parallel.params().tensors);
  Hyperparams hp = desk_hp();

  Rng rng(17);
  std::vector<ReplayBuffer::Record> batch;
  for (int i = 0; i < 12; ++i) {
    ReplayBuffer::Record r;
    r.obs = random_obs(cfg, rng);
    r.next_obs = random_obs(cfg, rng);
    r.action = rng.uniform_int(3);
    r.reward_sum = rng.uniform(-1.0, 1.0);
    r.bootstrap_coef = 0.5;
    batch.push_back(r);
  }
  DqnUpdateResult rs = dqn_update(batch, serial, target, adam_s, hp);
  UpdateWorkers workers(parallel, 3, true);
  DqnUpdateResult rp = dqn_update(batch, parallel, target, adam_p, hp, &workers);
  CHECK(rs.loss == doctest::Approx(rp.loss).epsilon(1e-12));
  for (size_t i = 0; i < serial.params().tensors.size(); ++i) {
    const auto& a = serial.params().tensors[i].values();
    const auto& b = parallel.params().tensors[i].values();
    for (size_t j = 0; j < a.size(); ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-9));
  }
}

TEST_CASE("a2c_update: zero advantages zero the policy term") {
  ModelConfig cfg = micro_model(HeadKind::ActorCritic, 1, 8);
  Model model = Model::init(cfg, 25);
  AdamState adam = AdamState::init(model.params().tensors, true);
  Hyperparams hp = desk_hp();
  hp.lr = 1e-4;

  Rng rng(26);
  Rollout ro;
  for (int t = 0; t < 5; ++t) {
    Tensor obs = random_obs(cfg, rng);
    double v = model.forward_ac(obs).value.value();
    ro.obs.push_back(obs);
    ro.actions.push_back(rng.uniform_int(3));
    ro.rewards.push_back(v);   // terminal step with r = V(s) gives delta = 0
    ro.terminals.push_back(true);
  }
  ro.bootstrap_obs = random_obs(cfg, rng);
  A2cLosses l = a2c_update({ro}, model, adam, hp);
  CHECK(l.policy == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a2c_update: uniform policy has maximal entropy ln(num_actions)") {
  ModelConfig cfg = micro_model(HeadKind::ActorCritic, 1, 8);
  Model model = Model::init(cfg, 27);
  for (double& v : model.params().at("head.pi.w").values()) v = 0.0;
  for (double& v : model.params().at("head.pi.b").values()) v = 0.0;
  AdamState adam = AdamState::init(model.params().tensors, true);
  Hyperparams hp = desk_hp();
  hp.lr = 1e-6;

  Rng rng(28);
  Rollout ro;
  for (int t = 0; t < 4; ++t) {
    ro.obs.push_back(random_obs(cfg, rng));
    ro.actions.push_back(rng.uniform_int(3));
    ro.rewards.push_back(rng.uniform(-1.0, 1.0));
    ro.terminals.push_back(false);
  }
  ro.bootstrap_obs = random_obs(cfg, rng);
  A2cLosses l = a2c_update({ro}, model, adam, hp);
  CHECK(l.entropy == doctest::Approx(std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("a2c_update: value loss equals the independently recomputed GAE regression") {
  ModelConfig cfg = micro_model(HeadKind::ActorCritic, 1, 8);
  Model model = Model::init(cfg, 29);
  Model frozen = model.clone();
  AdamState adam = AdamState::init(model.params().tensors, true);
  Hyperparams hp = desk_hp();
  hp.lr = 1e-5;

  Rng rng(30);
  Rollout ro;
  const int n = 6;
  for (int t = 0; t < n; ++t) {
    ro.obs.push_back(random_obs(cfg, rng));
    ro.actions.push_back(rng.uniform_int(3));
    ro.rewards.push_back(rng.uniform(-1.0, 1.0));
    ro.terminals.push_back(t == 3);
  }
  ro.bootstrap_obs = random_obs(cfg, rng);

  A2cLosses l = a2c_update({ro}, model, adam, hp);

  // Independent recomputation from the pre-update parameters.
  std::vector<double> values;
  for (const Tensor& obs : ro.obs) values.push_back(frozen.forward_ac(obs).value.value());
  values.push_back(frozen.forward_ac(ro.bootstrap_obs).value.value());
  std::vector<double> deltas(n);
  for (int t = 0; t < n; ++t) {
    double vnext = ro.terminals[static_cast<size_t>(t)] ? 0.0 : values[static_cast<size_t>(t) + 1];
    deltas[static_cast<size_t>(t)] = ro.rewards[static_cast<size_t>(t)] + hp.gamma * vnext - values[static_cast<size_t>(t)];
  }
  auto adv = oracle::gae_reference(deltas, ro.terminals, hp.gamma, hp.gae_lambda);
  double want = 0.0;
  for (int t = 0; t < n; ++t) want += adv[static_cast<size_t>(t)] * adv[static_cast<size_t>(t)];
  want /= n;  // mean squared (return - value) with return = adv + value
  CHECK(l.value == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("train: short deterministic value-regime run, rerun identical") {
  TrainOptions o;
  o.regime = Regime::ValueDqn;
  o.env = EnvConfig{};
  o.env.grid_w = 6;
  o.env.grid_h = 6;
  o.env.cell_px = 2;
  o.env.episode_len = 6;
  o.frameskip = 1;
  o.framestack = 2;
  o.model = micro_model(HeadKind::DuelingQ, 2, 12);
  o.hp = desk_hp();
  o.hp.total_frames = 400;
  o.hp.batch_size = 8;
  o.hp.replay_min = 32;
  o.hp.replay_capacity = 256;
  o.hp.update_every = 4;
  o.hp.num_threads = 2;
  o.hp.target_update_frames = 100;
  o.seed = 424242;
  o.quiet = true;

  TrainResult a = train(o);
  TrainResult b = train(o);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rows.size() > 10);
  for (size_t i = 0; i < a.rows.size(); ++i)
    CHECK(episode_row_csv(a.rows[i]) == episode_row_csv(b.rows[i]));
  CHECK(a.frames == b.frames);
}

TEST_CASE("train: short actor-critic run is deterministic too") {
  TrainOptions o;
  o.regime = Regime::ActorCritic;
  o.env = EnvConfig{};
  o.env.grid_w = 6;
  o.env.grid_h = 6;
  o.env.cell_px = 2;
  o.env.episode_len = 6;
  o.frameskip = 1;
  o.framestack = 1;
  o.model = micro_model(HeadKind::ActorCritic, 1, 12);
  o.hp = desk_hp();
  o.hp.total_frames = 400;
  o.hp.n_step = 5;
  o.hp.num_envs = 3;
  o.hp.num_threads = 2;
  o.hp.lr = 1e-4;
  o.hp.amsgrad = true;
  o.hp.adam_eps = 1e-8;
  o.hp.grad_clip = 0.0;
  o.seed = 77;
  o.quiet = true;

  TrainResult a = train(o);
  TrainResult b = train(o);
  REQUIRE(a.rows.size() == b.rows.size());
  CHECK(a.rows.size() > 5);
  for (size_t i = 0; i < a.rows.size(); ++i)
    CHECK(episode_row_csv(a.rows[i]) == episode_row_csv(b.rows[i]));
}
