#include <doctest.h>

#include <cmath>
#include <set>

#include "ife/env.hpp"
#include "oracles.hpp"

using namespace ife;

namespace {
int greedy_toward_ball(const CatchEnv& env) {
  if (env.ball().col < env.paddle().col) return 0;
  if (env.ball().col > env.paddle().col) return 2;
  return 1;
}
}  // namespace

TEST_CASE("reset: same seed gives a bit-identical first observation") {
  EnvConfig cfg;
  cfg.seed = 42;
  CatchEnv a(cfg), b(cfg);
  Tensor oa = a.reset(), ob = b.reset();
  CHECK(oa.values() == ob.values());

  EnvConfig cfg2 = cfg;
  cfg2.seed = 43;
  CatchEnv c(cfg2);
  // Different seeds eventually disagree; compare a few resets.
  bool differ = false;
  for (int i = 0; i < 5 && !differ; ++i)
    differ = CatchEnv(cfg).reset().values() != CatchEnv(cfg2).reset().values() || a.ball().col != c.ball().col;
  WARN(differ);  // columns can collide; the trajectory test below is the binding one
}

TEST_CASE("reset: ball column is uniform over 10,000 seeds (chi-square)") {
  EnvConfig cfg;
  std::vector<long> counts(static_cast<size_t>(cfg.grid_w), 0);
  for (uint64_t seed = 0; seed < 10'000; ++seed) {
    EnvConfig c = cfg;
    c.seed = seed;
    CatchEnv env(c);
    env.reset();
    counts[static_cast<size_t>(env.ball().col)] += 1;
  }
  double stat = oracle::chi2_stat(counts, 10'000.0 / cfg.grid_w);
  CHECK(stat < oracle::chi2_crit_99(cfg.grid_w - 1));
}

TEST_CASE("observations stay in [0, 1] and paint the expected pixel counts") {
  EnvConfig cfg;
  cfg.seed = 7;
  CatchEnv env(cfg);
  Tensor obs = env.reset();
  int ball_px = 0, paddle_px = 0, zero_px = 0;
  for (double v : obs.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (v == kBallIntensity) ++ball_px;
    if (v == kPaddleIntensity) ++paddle_px;
    if (v == 0.0) ++zero_px;
  }
  int cell = cfg.cell_px * cfg.cell_px;
  CHECK(ball_px == cell);
  CHECK(paddle_px == cell);
  CHECK(zero_px == obs.size() - 2 * cell);  // everything else is background
}

TEST_CASE("step: rewards only at the final row, sign by catch/miss") {
  EnvConfig cfg;
  cfg.seed = 3;
  CatchEnv env(cfg);
  env.reset();
  double ret = 0.0;
  int steps = 0;
  while (!env.terminal()) {
    CatchEnv::StepResult r = env.step(greedy_toward_ball(env));
    ++steps;
    if (!r.terminal) CHECK(r.reward == 0.0);
    ret += r.reward;
  }
  CHECK(steps == cfg.grid_h - 1);
  CHECK(ret == 1.0);  // greedy catches from the center start
  CHECK_THROWS_AS(env.step(1), ValueError);
}

TEST_CASE("optimal greedy policy returns +1 from every start column") {
  // Sweep seeds until every initial column has been exercised.
  std::set<int> seen;
  for (uint64_t seed = 0; seed < 200 && seen.size() < 10; ++seed) {
    EnvConfig cfg;
    cfg.seed = seed;
    CatchEnv env(cfg);
    env.reset();
    seen.insert(env.ball().col);
    double ret = 0.0;
    while (!env.terminal()) ret += env.step(greedy_toward_ball(env)).reward;
    CHECK(ret == 1.0);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("miss yields -1") {
  EnvConfig cfg;
  cfg.seed = 11;
  CatchEnv env(cfg);
  env.reset();
  double ret = 0.0;
  bool ball_left = env.ball().col <= cfg.grid_w / 2;
  while (!env.terminal()) ret += env.step(ball_left ? 2 : 0).reward;  // run away
  CHECK(ret == -1.0);
}

TEST_CASE("random policy mean return matches 2/grid_w - 1") {
  EnvConfig cfg;
  cfg.seed = 123;
  CatchEnv env(cfg);
  Rng rng(456);
  double total = 0.0;
  const int episodes = 10'000;
  for (int e = 0; e < episodes; ++e) {
    env.reset();
    while (!env.terminal()) total += env.step(rng.uniform_int(3)).reward;
  }
  double expected = 2.0 / cfg.grid_w - 1.0;
  CHECK(std::abs(total / episodes - expected) <= 0.05);
}

TEST_CASE("distractor variant differs from plain only within distractor cells") {
  EnvConfig plain_cfg;
  plain_cfg.seed = 9;
  EnvConfig distr_cfg = plain_cfg;
  distr_cfg.distractors = 3;
  CatchEnv plain(plain_cfg), distr(distr_cfg);
  Tensor po = plain.reset(), d_obs = distr.reset();

  auto check_diff_within_distractors = [&](const Tensor& p, const Tensor& d) {
    int w = plain.frame_w(), px = plain_cfg.cell_px;
    for (int i = 0; i < p.size(); ++i) {
      if (p[i] == d[i]) continue;
      int y = i / w, x = i % w;
      bool in_distractor = false;
      for (const Cell& c : distr.distractors())
        if (y / px == c.row && x / px == c.col) in_distractor = true;
      REQUIRE(in_distractor);
    }
  };
  check_diff_within_distractors(po, d_obs);
  while (!plain.terminal()) {
    Tensor p = plain.step(1).obs;
    Tensor d = distr.step(1).obs;
    check_diff_within_distractors(p, d);
  }
}

TEST_CASE("wrap: frameskip=1, framestack=1 is the identity") {
  EnvConfig cfg;
  cfg.seed = 5;
  WrappedEnv wrapped(cfg, 1, 1);
  CatchEnv raw(cfg);
  Tensor wo = wrapped.reset(), ro = raw.reset();
  CHECK(wo.shape() == Shape{1, raw.frame_h(), raw.frame_w()});
  CHECK(wo.values() == ro.values());
  WrappedEnv::StepResult ws = wrapped.step(0);
  CatchEnv::StepResult rs = raw.step(0);
  CHECK(ws.obs.values() == rs.obs.values());
  CHECK(ws.reward == rs.reward);
}

TEST_CASE("wrap: zero padding then a falling ball across the stack") {
  EnvConfig cfg;
  cfg.seed = 6;
  WrappedEnv env(cfg, 1, 4);
  Tensor obs = env.reset();
  CHECK(obs.shape() == Shape{4, 40, 40});
  int hw = 40 * 40;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < hw; ++i) CHECK(obs[c * hw + i] == 0.0);

  env.step(1);
  env.step(1);
  Tensor o3 = env.step(1).obs;
  // Channels hold 4 consecutive frames: ball visible at 4 distinct rows.
  std::set<int> ball_rows;
  for (int c = 0; c < 4; ++c)
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x)
        if (o3[(c * 40 + y) * 40 + x] == kBallIntensity) ball_rows.insert(c * 100 + y / cfg.cell_px);
  std::set<int> rows_per_channel;
  for (int r : ball_rows) rows_per_channel.insert(r % 100);
  CHECK(rows_per_channel.size() == 4);
}

TEST_CASE("wrap: frameskip sums rewards and stops at terminal") {
  EnvConfig cfg;
  cfg.seed = 8;
  WrappedEnv env(cfg, 4, 4);
  env.reset();
  double total = 0.0;
  int decisions = 0;
  bool terminal = false;
  while (!terminal) {
    WrappedEnv::StepResult r = env.step(1);
    total += r.reward;
    terminal = r.terminal;
    ++decisions;
  }
  // 9 falling steps at frameskip 4 -> 3 decisions; final reward is +-1.
  CHECK(decisions == 3);
  CHECK(std::abs(total) == 1.0);
}

TEST_CASE("full determinism: identical seed and action sequence, identical trajectories") {
  EnvConfig cfg;
  cfg.seed = 31337;
  cfg.distractors = 2;
  WrappedEnv a(cfg, 1, 4), b(cfg, 1, 4);
  Rng action_rng(5);
  for (int episode = 0; episode < 3; ++episode) {
    Tensor oa = a.reset(), ob = b.reset();
    REQUIRE(oa.values() == ob.values());
    while (!a.terminal()) {
      int action = action_rng.uniform_int(3);
      WrappedEnv::StepResult ra = a.step(action), rb = b.step(action);
      REQUIRE(ra.obs.values() == rb.obs.values());
      REQUIRE(ra.reward == rb.reward);
      REQUIRE(ra.terminal == rb.terminal);
    }
  }
}
