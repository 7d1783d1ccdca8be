// Copyright 2026 The smofi-sim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "smofi/error.hpp"
#include "smofi/optim.hpp"

namespace smofi {
namespace {

ParamVector vec(std::vector<double> v) {
  const std::size_t n = v.size();
  return ParamVector(std::move(v), {0, n});
}

OptimConfig plain(double eta, double beta) {
  OptimConfig c;
  c.eta = eta;
  c.beta = beta;
  c.weight_decay = 0.0;
  return c;
}

MomentumBuffer buf(std::vector<double> v, int owner = 0) { return {vec(std::move(v)), owner, 0}; }

TEST(Sgdm, ZeroBufferStep) {
  auto r = sgdm_step(vec({0, 0}), vec({1, 2}), buf({0, 0}), plain(0.1, 0.9));
  EXPECT_EQ(r.buffer.values, vec({1, 2}));
  EXPECT_EQ(r.params, vec({-0.1, -0.2}));
}

TEST(Sgdm, ZeroGradientCoasts) {
  auto r = sgdm_step(vec({1, 1}), vec({0, 0}), buf({2, -4}), plain(0.1, 0.9));
  EXPECT_EQ(r.buffer.values, vec({0.9 * 2, 0.9 * -4}));
}

TEST(Sgdm, TwoStepsWithConstantGradient) {
  const auto cfg = plain(0.1, 0.9);
  auto r1 = sgdm_step(vec({0}), vec({3}), buf({0}), cfg);
  auto r2 = sgdm_step(r1.params, vec({3}), r1.buffer, cfg);
  EXPECT_DOUBLE_EQ(r2.buffer.values[0], (1 + 0.9) * 3);
}

TEST(Sgdm, WeightDecayEntersTheGradient) {
  OptimConfig cfg = plain(0.5, 0.0);
  cfg.weight_decay = 0.1;
  auto r = sgdm_step(vec({2}), vec({0}), buf({0}), cfg);
  EXPECT_DOUBLE_EQ(r.buffer.values[0], 0.2);
  EXPECT_DOUBLE_EQ(r.params[0], 2 - 0.5 * 0.2);
}

TEST(Sgdm, ShapeMismatchThrows) {
  EXPECT_THROW(sgdm_step(vec({0, 0}), vec({1}), buf({0, 0}), plain(0.1, 0.9)), UsageError);
}

TEST(Aligned, OwnBufferReducesToSgdm) {
  const auto cfg = plain(0.05, 0.9);
  auto prior = buf({0.3, -0.7});
  auto a = aligned_sgdm_step(vec({1, 2}), vec({0.5, 0.25}), prior, cfg);
  auto s = sgdm_step(vec({1, 2}), vec({0.5, 0.25}), prior, cfg);
  EXPECT_EQ(a.params, s.params);
  EXPECT_EQ(a.buffer.values, s.buffer.values);
}

TEST(Aligned, ZeroBufferIsPlainSgd) {
  auto a = aligned_sgdm_step(vec({1, 2}), vec({0.5, 0.25}), buf({0, 0}), plain(0.1, 0.9));
  EXPECT_EQ(a.params, vec({1 - 0.1 * 0.5, 2 - 0.1 * 0.25}));
}

TEST(Aligned, HandEvaluation) {
  auto a = aligned_sgdm_step(vec({0, 0}), vec({0, 1}), buf({1, 0}), plain(0.1, 0.5));
  EXPECT_EQ(a.buffer.values, vec({0.5, 1}));
}

TEST(Staleness, Values) {
  EXPECT_EQ(staleness(7, 7, -0.1), 1.0);
  EXPECT_EQ(staleness(5, 4, -1.0), 0.5);
  EXPECT_NEAR(staleness(6, 3, -0.1), std::pow(4.0, -0.1), 1e-15);
  EXPECT_NEAR(staleness(6, 3, -0.1), 0.8706, 5e-5);
}

TEST(Staleness, StrictlyDecreasingAndValidated) {
  for (double alpha : {-0.01, -0.1, -1.0, -3.0})
    for (int tau = 3; tau < 40; ++tau) EXPECT_LT(staleness(tau + 1, 3, alpha), staleness(tau, 3, alpha));
  EXPECT_THROW(staleness(2, 3, -0.1), UsageError);
  EXPECT_THROW(staleness(4, 3, 0.0), UsageError);
}

TEST(Fusion, PlainMeanWithoutHistory) {
  std::vector<MomentumBuffer> active{buf({1, 0}, 0), buf({0, 1}, 1)};
  EXPECT_EQ(fuse_momentum(active, {}, 1, -0.1).values, vec({0.5, 0.5}));
}

TEST(Fusion, HistoryIsStalenessWeighted) {
  std::vector<MomentumBuffer> active{buf({1, 1}, 0)};
  std::vector<HistoryEntry> hist{{buf({2, 2}, 1), 3}};
  EXPECT_EQ(fuse_momentum(active, hist, 4, -1.0).values, vec({1, 1}));
}

TEST(Fusion, SingleBufferIsUnchanged) {
  std::vector<MomentumBuffer> active{buf({0.1, -0.3, 7.7}, 4)};
  EXPECT_EQ(fuse_momentum(active, {}, 2, -0.1).values, vec({0.1, -0.3, 7.7}));
}

TEST(Fusion, IdenticalBuffersCollapseExactly) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> v(50);
  for (auto& x : v) x = nd(rng);
  for (int n : {2, 3, 5, 8}) {
    std::vector<MomentumBuffer> active;
    for (int k = 0; k < n; ++k) active.push_back(buf(v, k));
    EXPECT_EQ(fuse_momentum(active, {}, 1, -0.1).values, vec(v)) << n;
  }
}

TEST(Fusion, LinearInScale) {
  std::vector<MomentumBuffer> active{buf({1, -2}, 0), buf({3, 5}, 2)};
  std::vector<HistoryEntry> hist{{buf({4, 4}, 1), 2}};
  auto base = fuse_momentum(active, hist, 5, -0.3).values;
  for (auto& m : active) m.values *= 4.0;
  hist[0].buffer.values *= 4.0;
  auto scaled = fuse_momentum(active, hist, 5, -0.3).values;
  EXPECT_EQ(scaled, 4.0 * base);
}

TEST(Fusion, SummationOrderIsByOwner) {
  std::vector<MomentumBuffer> a{buf({1e16, 1}, 0), buf({1, 1}, 1), buf({-1e16, 1}, 2)};
  std::vector<MomentumBuffer> b{a[2], a[0], a[1]};
  EXPECT_EQ(fuse_momentum(a, {}, 1, -0.1).values, fuse_momentum(b, {}, 1, -0.1).values);
  EXPECT_EQ(fuse_momentum(a, {}, 1, -0.1, Exec::parallel).values, fuse_momentum(a, {}, 1, -0.1).values);
}

TEST(Fusion, EmptyInputThrows) { EXPECT_THROW(fuse_momentum({}, {}, 1, -0.1), UsageError); }

TEST(Nag, ZeroBufferIsPlainSgd) {
  const auto cfg = plain(0.1, 0.9);
  EXPECT_EQ(nag_lookahead(vec({1, 2}), vec({0, 0}), cfg), vec({1, 2}));
  auto r = nag_step(vec({1, 2}), vec({0.5, 0.5}), buf({0, 0}), cfg);
  EXPECT_EQ(r.params, vec({0.95, 1.95}));
}

TEST(Nag, ZeroBetaMatchesSgdm) {
  const auto cfg = plain(0.1, 0.0);
  EXPECT_EQ(nag_lookahead(vec({1}), vec({5}), cfg), vec({1}));
  EXPECT_EQ(nag_step(vec({1}), vec({2}), buf({5}), cfg).params,
            sgdm_step(vec({1}), vec({2}), buf({5}), cfg).params);
}

TEST(Nag, QuadraticTwoStepsByHand) {
  // f(w) = w^2, gradient 2w taken at the lookahead point.
  const auto cfg = plain(0.1, 0.9);
  ParamVector w = vec({1.0});
  MomentumBuffer m = buf({0.0});
  auto look1 = nag_lookahead(w, m.values, cfg);
  auto s1 = nag_step(w, vec({2 * look1[0]}), m, cfg);
  EXPECT_DOUBLE_EQ(s1.params[0], 0.8);
  EXPECT_DOUBLE_EQ(s1.buffer.values[0], 2.0);
  auto look2 = nag_lookahead(s1.params, s1.buffer.values, cfg);
  EXPECT_DOUBLE_EQ(look2[0], 0.62);
  auto s2 = nag_step(s1.params, vec({2 * look2[0]}), s1.buffer, cfg);
  EXPECT_DOUBLE_EQ(s2.buffer.values[0], 3.04);
  EXPECT_DOUBLE_EQ(s2.params[0], 0.496);
}

TEST(Schedule, ExponentialAndInverse) {
  OptimConfig c;
  c.eta = 0.05;
  c.lr_decay_per_round = 0.998;
  EXPECT_EQ(c.lr_for_round(1), 0.05);
  EXPECT_DOUBLE_EQ(c.lr_for_round(3), 0.05 * 0.998 * 0.998);
  c.schedule = LrSchedule::inverse;
  c.lr_shift = 10;
  EXPECT_EQ(c.lr_for_round(1), 0.05);
  EXPECT_DOUBLE_EQ(c.lr_for_round(11), 0.05 * 10 / 20);
}

TEST(OptimConfig, Validation) {
  OptimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.beta = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = OptimConfig{};
  c.eta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = OptimConfig{};
  c.weight_decay = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
}  // namespace smofi
