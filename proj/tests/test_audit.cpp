#include <doctest.h>

#include <cmath>

#include "ife/audit.hpp"
#include "ife/ops.hpp"
#include "ife/rng.hpp"
#include "oracles.hpp"

using namespace ife;
using namespace ife::audit;

namespace {
ConvStackSpec single(int kernel, int stride, int w, int h) { return ConvStackSpec{{{kernel, stride}}, w, h}; }
}  // namespace

TEST_CASE("displacement: non-overlap forces exact zero") {
  for (int k = 1; k <= 8; ++k) {
    ConvStackSpec s = single(k, k, 64, 64);
    int fw = s.feature_w();
    for (int m = 0; m < fw; m += 3)
      for (int l = 0; l < k; ++l) {
        DisplacementResult d = displacement(s, m, m % s.feature_h(), l, l);
        CHECK(d.d_x == 0.0);
        CHECK(d.d_y == 0.0);
      }
  }
}

TEST_CASE("displacement: window-start term for the 8/4 stack on 84 pixels") {
  ConvStackSpec s = single(8, 4, 84, 84);
  CHECK(displacement(s, 10, 0, 0, 0).d_x == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("displacement: within-window offset term") {
  ConvStackSpec s = single(8, 4, 84, 84);
  CHECK(displacement(s, 0, 0, 7, 0).d_x == doctest::Approx(3.325).epsilon(1e-12));
}

TEST_CASE("displacement: degenerate divisor is an error") {
  // input_extent + stride - kernel <= 0
  ConvStackSpec s = single(6, 1, 4, 8);
  CHECK_THROWS_AS(displacement(s, 0, 0, 0, 0), ValueError);
}

TEST_CASE("displacement: coordinate validation") {
  ConvStackSpec s = single(4, 2, 16, 16);
  CHECK_THROWS_AS(displacement(s, 7, 0, 0, 0), ValueError);   // feature grid is 7 wide
  CHECK_THROWS_AS(displacement(s, 0, 0, 4, 0), ValueError);   // offset outside kernel
  ConvStackSpec two{{{2, 2}, {2, 2}}, 16, 16};
  CHECK_THROWS_AS(displacement(two, 0, 0, 0, 0), ValueError);  // multi-layer needs composition
}

TEST_CASE("displacement formula matches the geometric oracle everywhere") {
  for (int k = 2; k <= 8; ++k)
    for (int s = 1; s <= k; ++s)
      for (int w : {16, 32, 64, 84, 128}) {
        ConvStackSpec spec = single(k, s, w, w);
        int fw = spec.feature_w();
        for (int m = 0; m < fw; ++m) {
          ReceptiveField rf = receptive_field(spec, m, 0);
          for (int l = 0; l < k; ++l) {
            double got = displacement(spec, m, 0, l, 0).d_x;
            double want = oracle::displacement_reference(m, l, k, s, w, rf.x.begin);
            CHECK(std::abs(got - want) <= 1e-9);
          }
        }
      }
}

TEST_CASE("zero displacement for all (m, l) iff stride == kernel") {
  for (int k = 2; k <= 6; ++k)
    for (int s = 1; s <= k; ++s) {
      ConvStackSpec spec = single(k, s, 32, 32);
      bool all_zero = true;
      for (int m = 0; m < spec.feature_w(); ++m)
        for (int l = 0; l < k; ++l)
          if (displacement(spec, m, 0, l, 0).d_x != 0.0) all_zero = false;
      CHECK(all_zero == (s == k));
    }
}

TEST_CASE("receptive_field: single layer and composed stacks") {
  ConvStackSpec s = single(4, 4, 40, 40);
  ReceptiveField rf = receptive_field(s, 2, 0);
  CHECK(rf.x.begin == 8);
  CHECK(rf.x.end == 12);

  ConvStackSpec two{{{2, 2}, {2, 2}}, 40, 40};
  rf = receptive_field(two, 3, 1);
  CHECK(rf.x.begin == 12);
  CHECK(rf.x.end == 16);
  CHECK(rf.y.begin == 4);
  CHECK(rf.y.end == 8);

  CHECK_THROWS_AS(receptive_field(s, 10, 0), ValueError);
}

TEST_CASE("receptive_field intervals stay inside the input") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    int layers = 1 + rng.uniform_int(3);
    ConvStackSpec spec;
    spec.input_w = 24 + rng.uniform_int(41);
    spec.input_h = spec.input_w;
    for (int i = 0; i < layers; ++i) {
      int k = 2 + rng.uniform_int(3);
      int s = 1 + rng.uniform_int(k);
      spec.layers.push_back({k, s});
    }
    int fw, fh;
    try {
      fw = spec.feature_w();
      fh = spec.feature_h();
    } catch (const ValueError&) {
      continue;  // stack shrank below the kernel; not a valid spec
    }
    ReceptiveField rf = receptive_field(spec, fw - 1, fh - 1);
    CHECK(rf.x.begin >= 0);
    CHECK(rf.x.end <= spec.input_w);
    CHECK(rf.y.end <= spec.input_h);
  }
}

TEST_CASE("receptive_field agrees with a perturbation probe through the conv stack") {
  // Positive kernels guarantee that any in-field pixel change reaches the
  // feature; out-of-field pixels must leave it bit-identical.
  Rng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    int layers = 1 + rng.uniform_int(3);
    ConvStackSpec spec;
    spec.input_w = 12 + rng.uniform_int(21);
    spec.input_h = 12 + rng.uniform_int(21);
    for (int i = 0; i < layers; ++i) {
      int k = 2 + rng.uniform_int(2);
      int s = 1 + rng.uniform_int(k);
      spec.layers.push_back({k, s});
    }
    int fw, fh;
    try {
      fw = spec.feature_w();
      fh = spec.feature_h();
    } catch (const ValueError&) {
      continue;
    }

    std::vector<Tensor> weights, biases;
    for (const ConvLayer& l : spec.layers) {
      std::vector<double> wv(static_cast<size_t>(l.kernel) * l.kernel);
      for (auto& v : wv) v = rng.uniform(0.1, 1.0);
      weights.push_back(Tensor::from({1, 1, l.kernel, l.kernel}, wv));
      biases.push_back(Tensor::zeros({1}));
    }
    auto forward = [&](const Tensor& img) {
      Tensor x = img;
      for (size_t i = 0; i < weights.size(); ++i)
        x = conv2d(x, weights[i], biases[i], spec.layers[i].stride);
      return x;
    };

    std::vector<double> base_img(static_cast<size_t>(spec.input_w) * spec.input_h);
    for (auto& v : base_img) v = rng.uniform(0.1, 1.0);
    Tensor base = Tensor::from({1, spec.input_h, spec.input_w}, base_img);
    Tensor base_out = forward(base);

    int m = rng.uniform_int(fw), n = rng.uniform_int(fh);
    ReceptiveField rf = receptive_field(spec, m, n);
    for (int y = 0; y < spec.input_h; ++y)
      for (int x = 0; x < spec.input_w; ++x) {
        std::vector<double> img = base_img;
        img[static_cast<size_t>(y) * spec.input_w + x] += 0.731;
        Tensor out = forward(Tensor::from({1, spec.input_h, spec.input_w}, img));
        bool changed = out[n * fw + m] != base_out[n * fw + m];
        bool inside = x >= rf.x.begin && x < rf.x.end && y >= rf.y.begin && y < rf.y.end;
        REQUIRE(changed == inside);
      }
  }
}

TEST_CASE("naive_upsample_interval: identity, rounding, tiling") {
  CHECK(naive_upsample_interval(7, 7, 3).begin == 3);
  CHECK(naive_upsample_interval(7, 7, 3).end == 4);

  PixelInterval p = naive_upsample_interval(20, 84, 10);
  CHECK(p.begin == 42);
  CHECK(p.end == 46);

  for (int wf : {3, 7, 10, 13}) {
    for (int wi : {16, 40, 84, 128}) {
      int expect_start = 0;
      for (int m = 0; m < wf; ++m) {
        PixelInterval q = naive_upsample_interval(wf, wi, m);
        CHECK(q.begin == expect_start);
        expect_start = q.end;
      }
      CHECK(expect_start == wi);
    }
  }

  CHECK_THROWS_AS(naive_upsample_interval(10, 84, 10), ValueError);
  CHECK_THROWS_AS(naive_upsample_interval(10, 5, 0), ValueError);
}

TEST_CASE("overlap_counts: non-overlap counts once; 8/4 on 84 gives the ramp") {
  auto counts = overlap_counts(single(4, 4, 16, 16));
  for (int c : counts) CHECK(c == 1);

  counts = overlap_counts(single(8, 4, 84, 84));
  for (int p = 0; p < 84; ++p) {
    int want = (p < 4 || p >= 80) ? 1 : 2;
    CHECK(counts[static_cast<size_t>(p)] == want);
  }
}

TEST_CASE("overlap_counts: bounded by ceil(L/S) and sums to W_F * L") {
  Rng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    int k = 2 + rng.uniform_int(7);
    int s = 1 + rng.uniform_int(k);
    int w = k + rng.uniform_int(100);
    ConvStackSpec spec = single(k, s, w, w);
    auto counts = overlap_counts(spec);
    long total = 0;
    int bound = (k + s - 1) / s;
    for (int c : counts) {
      CHECK(c <= bound);
      total += c;
    }
    CHECK(total == static_cast<long>(spec.feature_w()) * k);
  }
}

TEST_CASE("audit_report: verdicts, stats, determinism") {
  ConvStackSpec nono{{{2, 2}, {2, 2}}, 40, 40};
  AuditReport rep = audit_report(nono);
  CHECK(rep.preserving);
  CHECK(rep.max_dx == 0.0);
  CHECK(rep.mean_dx == 0.0);
  CHECK(rep.overlap_histogram.size() == 1);
  CHECK(rep.overlap_histogram.at(1) == 40);

  ConvStackSpec dqn{{{8, 4}, {4, 2}, {3, 1}}, 84, 84};
  AuditReport rep2 = audit_report(dqn);
  CHECK_FALSE(rep2.preserving);
  CHECK(rep2.max_dx > 0.0);
  CHECK(rep2.mean_dx > 0.0);

  // Deterministic: equal specs, equal serialized reports.
  CHECK(audit_report(dqn).to_json() == rep2.to_json());

  // The composed effective layer matches the known DQN geometry.
  ConvLayer eff = effective_single_layer(dqn);
  CHECK(eff.kernel == 36);
  CHECK(eff.stride == 8);
  ConvStackSpec eff_spec{{eff}, 84, 84};
  CHECK(eff_spec.feature_w() == 7);
}

TEST_CASE("audit_report sweep agrees with the displacement op") {
  ConvStackSpec spec = single(8, 4, 84, 84);
  AuditReport rep = audit_report(spec);
  double max_dx = 0.0, sum = 0.0;
  long n = 0;
  for (int m = 0; m < spec.feature_w(); ++m)
    for (int l = 0; l < 8; ++l) {
      double d = std::abs(displacement(spec, m, 0, l, 0).d_x);
      max_dx = std::max(max_dx, d);
      sum += d;
      ++n;
    }
  CHECK(rep.max_dx == doctest::Approx(max_dx));
  CHECK(rep.mean_dx == doctest::Approx(sum / n));
}
