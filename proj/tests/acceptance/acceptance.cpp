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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "smofi/data.hpp"
#include "smofi/experiment.hpp"
#include "smofi/optim.hpp"
#include "smofi/protocols.hpp"
#include "smofi/split.hpp"
#include "smofi/system_model.hpp"
#include "smofi/tensor.hpp"

namespace fs = std::filesystem;
using namespace smofi;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Gradient oracle ------------------------------------------------------------

Verdict gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20261018);
  const int nets = 25;
  double worst = 0.0;
  for (int k = 0; k < nets; ++k) {
    const auto mlp = oracle::random_mlp(rng, 16, 3);
    const Network net(mlp.layers);
    const ParamVector w = net.init_params(rng());
    const Batch b = oracle::random_batch(rng, 6, mlp.in, mlp.classes);
    const auto fwd = net.forward(w, b.inputs, 0, net.layer_count());
    const auto analytic = net.backward(w, fwd.cache, b).grads;
    const auto numeric = oracle::numeric_grad(net, w, b);
    for (std::size_t i = 0; i < numeric.size(); ++i)
      worst = std::max(worst, oracle::rel_err(analytic[i], numeric[i]));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0,
          fmt("%d MLPs, max rel err %.2e (tol 1e-4), %.2fs (limit 10s)", nets, worst, secs)};
}

// Hand-unrolled scalar trace -------------------------------------------------

// Model: yhat = w * (a * x), loss 0.5 (yhat - y)^2, client holds a, server holds w.
struct ScalarCase {
  std::vector<std::vector<std::pair<double, double>>> samples;  // per client (x, y)
};

struct ScalarTrace {
  double a = 0.0, w = 0.0;      // global params
  double ga = 0.0, gw = 0.0;    // global momentum
};

ScalarTrace hand_trace(const ScalarCase& sc, const Federation& fed, ScalarTrace g, int rounds,
                       double eta, double beta, double alpha, double beta_g) {
  const std::size_t J = sc.samples.size();
  for (int n = 1; n <= rounds; ++n) {
    std::vector<double> a(J, g.a), w(J, g.w), c(J, 0.0), m(J, 0.0);
    std::vector<int> T(J);
    std::vector<std::vector<std::size_t>> order(J);
    std::size_t offset = 0;
    for (std::size_t j = 0; j < J; ++j) {
      T[j] = static_cast<int>(sc.samples[j].size());  // B = 1, E = 1
      const BatchSchedule s = fed.schedule(static_cast<int>(j), n);
      for (int t = 0; t < T[j]; ++t) order[j].push_back(s.batch(t)[0] - offset);
      offset += sc.samples[j].size();
    }
    const int max_t = *std::max_element(T.begin(), T.end());
    double mbar = 0.0;
    for (int tau = 0; tau < max_t; ++tau) {
      for (std::size_t j = 0; j < J; ++j) {
        if (T[j] <= tau) continue;
        const auto [x, y] = sc.samples[j][order[j][tau]];
        const double h = a[j] * x;
        const double r = w[j] * h - y;
        const double grad_w = r * h;
        const double grad_a = r * w[j] * x;
        m[j] = beta * mbar + grad_w;
        w[j] -= eta * m[j];
        c[j] = beta * c[j] + grad_a;
        a[j] -= eta * c[j];
      }
      const int t = tau + 1;
      double sum = 0.0;
      int count = 0;
      for (std::size_t j = 0; j < J; ++j) {
        if (T[j] > t) {
          sum += m[j];
        } else {
          sum += std::pow(static_cast<double>(t - T[j] + 1), alpha) * m[j];
        }
        ++count;
      }
      mbar = sum / count;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) total += static_cast<double>(sc.samples[j].size());
    double abar = 0.0, wbar = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double p = static_cast<double>(sc.samples[j].size()) / total;
      abar += p * a[j];
      wbar += p * w[j];
    }
    g.ga = beta_g * g.ga + (g.a - abar);
    g.gw = beta_g * g.gw + (g.w - wbar);
    g.a -= g.ga;
    g.w -= g.gw;
  }
  return g;
}

double scalar_case_error(const ScalarCase& sc) {
  const double eta = 0.1, beta = 0.9, alpha = -0.5, beta_g = 0.5;
  const int rounds = 2;
  Dataset ds;
  std::size_t n = 0;
  for (const auto& c : sc.samples) n += c.size();
  ds.features = Matrix(n, 1);
  ds.targets = Matrix(n, 1);
  std::vector<Shard> shards;
  std::size_t row = 0;
  for (std::size_t j = 0; j < sc.samples.size(); ++j) {
    Shard s;
    s.owner = static_cast<int>(j);
    for (const auto& [x, y] : sc.samples[j]) {
      ds.features(row, 0) = x;
      ds.targets(row, 0) = y;
      s.indices.push_back(row++);
    }
    shards.push_back(std::move(s));
  }
  OptimConfig o;
  o.eta = eta;
  o.beta = beta;
  o.weight_decay = 0.0;
  o.lr_decay_per_round = 1.0;
  RoundConfig r;
  r.method = Method::smofi;
  r.local_epochs = 1;
  r.batch_size = 1;
  r.selection_rate = 1.0;
  r.alpha = alpha;
  r.beta_g = beta_g;
  const std::vector<LayerSpec> layers{LayerSpec::dense(1, 1, false), LayerSpec::dense(1, 1, false),
                                      LayerSpec::mse(1)};
  Federation fed(SplitModel::analytic(layers, 1), ds, shards, o, r, 77, 78);

  ParamVector w0 = fed.network().zeros();
  w0[0] = 0.8;
  w0[1] = -0.6;
  GlobalState state = GlobalState::initial(w0);
  const std::vector<int> all{0, 1};
  for (int k = 0; k < rounds; ++k) state = fed.run_round(state, fed.make_cohort(all)).state;

  const ScalarTrace want = hand_trace(sc, fed, {0.8, -0.6, 0.0, 0.0}, rounds, eta, beta, alpha, beta_g);
  return std::max({std::abs(state.params[0] - want.a), std::abs(state.params[1] - want.w),
                   std::abs(state.momentum[0] - want.ga), std::abs(state.momentum[1] - want.gw)});
}

Verdict hand_unroll() {
  const auto t0 = std::chrono::steady_clock::now();
  // Two steps for both clients, then T = (1, 2) so a finished client enters the history.
  const ScalarCase even{{{{1.0, 2.0}, {-1.0, 0.5}}, {{0.5, -1.0}, {2.0, 1.0}}}};
  const ScalarCase uneven{{{{1.0, 2.0}}, {{0.5, -1.0}, {2.0, 1.0}}}};
  const double err = std::max(scalar_case_error(even), scalar_case_error(uneven));
  const double secs = seconds_since(t0);
  return {err <= 1e-12 && secs < 1.0,
          fmt("max |sim - hand| %.2e (tol 1e-12), %.3fs (limit 1s)", err, secs)};
}

// Degeneracy suite -----------------------------------------------------------

std::vector<LayerSpec> mlp(std::size_t in, std::size_t hidden, std::size_t classes) {
  return {LayerSpec::dense(in, hidden), LayerSpec::relu(hidden), LayerSpec::dense(hidden, hidden),
          LayerSpec::relu(hidden), LayerSpec::dense(hidden, classes),
          LayerSpec::softmax_xent(classes)};
}

OptimConfig default_optim() {
  OptimConfig o;
  o.eta = 0.05;
  o.beta = 0.9;
  o.weight_decay = 5e-4;
  o.lr_decay_per_round = 0.99;
  return o;
}

RoundConfig round_cfg(Method m, double beta_g) {
  RoundConfig r;
  r.method = m;
  r.local_epochs = 2;
  r.batch_size = 8;
  r.beta_g = beta_g;
  r.alpha = -0.1;
  return r;
}

class LastModels : public RoundObserver {
 public:
  std::map<int, ParamVector> client, server;
  void on_client_step(const ClientStepEvent& e) override {
    client[e.client] = *e.client_params;
    server[e.client] = *e.server_params;
  }
};

Verdict degeneracy() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset train = make_blobs(4, 6, 40, 0.8, 11);
  const auto shards = partition_dirichlet(train, {4, 0.5, 3});
  const auto layers = mlp(6, 12, 4);
  const Network net(layers);
  const ParamVector init = net.init_params(1);
  const OptimConfig o = default_optim();
  const std::vector<int> all{0, 1, 2, 3};

  // (a) One client, beta_g = 0, against plain SGDM on the same batches.
  bool a_ok = true;
  {
    Federation fed(SplitModel::analytic(layers, 2), train, shards, o, round_cfg(Method::smofi, 0.0),
                   5, 9);
    GlobalState s = GlobalState::initial(init);
    ParamVector ref = init;
    const std::vector<int> one{0};
    for (int n = 1; n <= 10; ++n) {
      s = fed.run_round(s, fed.make_cohort(one)).state;
      OptimConfig cfg = o;
      cfg.eta = o.lr_for_round(n);
      MomentumBuffer buf{ParamVector::zeros_like(ref), 0, 0};
      const BatchSchedule sched = fed.schedule(0, n);
      for (int t = 0; t < sched.steps(); ++t) {
        const Batch b = train.gather(sched.batch(t));
        const auto fwd = net.forward(ref, b.inputs, 0, net.layer_count());
        auto r = sgdm_step(ref, net.backward(ref, fwd.cache, b).grads, buf, cfg);
        ref = std::move(r.params);
        buf = std::move(r.buffer);
      }
    }
    a_ok = s.params == ref;
  }

  // (b) SFLV1 aggregating only at round end against FedAvg.
  bool b_ok = true;
  {
    RoundConfig v1 = round_cfg(Method::sflv1, 0.3);
    v1.sflv1_period = 0;
    Federation f1(SplitModel::analytic(layers, 2), train, shards, o, v1, 5, 9);
    Federation fa(SplitModel::analytic(layers, 2), train, shards, o,
                  round_cfg(Method::fedavg, 0.3), 5, 9);
    GlobalState s1 = GlobalState::initial(init), sa = s1;
    for (int n = 1; n <= 10; ++n) {
      s1 = f1.run_round(s1, f1.make_cohort(all)).state;
      sa = fa.run_round(sa, fa.make_cohort(all)).state;
      b_ok = b_ok && s1.params == sa.params && s1.momentum == sa.momentum;
    }
  }

  // (c) beta_g = 0: the new global model is the weighted average of the
  // returned client models, compared bit-exactly against the aggregator and
  // to 1e-12 against a naive sum.
  bool c_ok = true;
  double naive_err = 0.0;
  {
    const SplitModel sm = SplitModel::analytic(layers, 2);
    Federation fed(sm, train, shards, o, round_cfg(Method::smofi, 0.0), 5, 9);
    GlobalState s = GlobalState::initial(init);
    for (int n = 1; n <= 3; ++n) {
      LastModels obs;
      const RoundCohort cohort = fed.make_cohort(all);
      const GlobalState next = fed.run_round(s, cohort, &obs).state;
      std::vector<ParamVector> models;
      std::vector<std::size_t> sizes;
      for (int j : cohort.clients) {
        models.push_back(join({obs.client.at(j), obs.server.at(j)}, sm));
        sizes.push_back(shards[static_cast<std::size_t>(j)].indices.size());
      }
      const auto p = aggregation_weights(sizes);
      c_ok = c_ok && next.params == aggregate_weighted(models, p);
      for (std::size_t i = 0; i < next.params.size(); ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < models.size(); ++k) sum += p[k] * models[k][i];
        naive_err = std::max(naive_err, std::abs(sum - next.params[i]));
      }
      s = next;
    }
    c_ok = c_ok && naive_err <= 1e-12;
  }
  const double secs = seconds_since(t0);
  return {a_ok && b_ok && c_ok && secs < 30.0,
          fmt("(a) %s (b) %s (c) %s [naive diff %.1e], %.2fs (limit 30s)",
              a_ok ? "bit-exact" : "MISMATCH", b_ok ? "bit-exact" : "MISMATCH",
              c_ok ? "ok" : "MISMATCH", naive_err, secs)};
}

// Count invariant ------------------------------------------------------------

class CountCheck : public RoundObserver {
 public:
  int events = 0;
  int bad_counts = 0;
  int finish_checks = 0;
  int bad_finish = 0;
  void on_fusion(const FusionEvent& e) override {
    ++events;
    if (e.active + e.history != e.cohort) ++bad_counts;
    for (const auto& s : e.staleness) {
      if (s.finish_step != e.tau) continue;
      ++finish_checks;
      if (s.weight != 1.0) ++bad_finish;
    }
  }
};

Verdict count_invariant() {
  std::mt19937_64 rng(4242);
  const Dataset train = make_blobs(5, 6, 60, 1.0, 21);
  const auto layers = mlp(6, 8, 5);
  const Network net(layers);
  int rounds = 0, events = 0, expected_events = 0, bad_counts = 0, finish_checks = 0,
      expected_finish = 0, bad_finish = 0, heterogeneous = 0;
  for (int k = 0; k < 100; ++k) {
    const int clients = std::uniform_int_distribution<int>(2, 8)(rng);
    const double gamma = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
    const auto shards = partition_dirichlet(train, {clients, gamma, rng()});
    RoundConfig r = round_cfg(Method::smofi, 0.3);
    r.local_epochs = std::uniform_int_distribution<int>(1, 3)(rng);
    r.batch_size = std::uniform_int_distribution<int>(4, 16)(rng);
    r.alpha = -std::uniform_real_distribution<double>(0.01, 2.0)(rng);
    Federation fed(SplitModel::analytic(layers, 2), train, shards, default_optim(), r, rng(), rng());
    const auto sel = select_cohort(clients, 0.7, SelectionMode::bernoulli, rng());
    const RoundCohort cohort = fed.make_cohort(sel);
    if (cohort.clients.empty()) continue;
    CountCheck obs;
    fed.run_round(GlobalState::initial(net.init_params(rng())), cohort, &obs);
    ++rounds;
    const int max_t = *std::max_element(cohort.steps.begin(), cohort.steps.end());
    const int min_t = *std::min_element(cohort.steps.begin(), cohort.steps.end());
    if (min_t != max_t) ++heterogeneous;
    expected_events += max_t;
    expected_finish += static_cast<int>(cohort.clients.size());
    events += obs.events;
    bad_counts += obs.bad_counts;
    finish_checks += obs.finish_checks;
    bad_finish += obs.bad_finish;
  }
  const bool ok = rounds == 100 && heterogeneous > 0 && events == expected_events &&
                  bad_counts == 0 && finish_checks == expected_finish && bad_finish == 0;
  return {ok, fmt("%d rounds (%d heterogeneous), %d fusion steps, %d count violations, "
                  "%d/%d finish weights != 1.0",
                  rounds, heterogeneous, events, bad_counts, bad_finish, finish_checks)};
}

// Latency arithmetic ---------------------------------------------------------

Verdict latency() {
  const ClientProfile c{0.05, 1000.0};
  const ServerProfile s{100.0, 0.0005};
  const BatchLatency l = batch_latency(c, s, 0.2, 64.0, 32);
  const bool ok = l.device_s == 0.96 && l.server_s == 0.0384 && l.comm_s == 4.096 &&
                  l.total_s == 5.0944;
  return {ok, fmt("got (%.17g, %.17g, %.17g, %.17g), want exactly (0.96, 0.0384, 4.096, 5.0944)",
                  l.device_s, l.server_s, l.comm_s, l.total_s)};
}

// Partition properties -------------------------------------------------------

double mean_js(const Dataset& ds, const std::vector<Shard>& shards) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : shards) {
    if (s.indices.empty()) continue;
    sum += js_from_balanced(ds, s);
    ++n;
  }
  return sum / n;
}

bool covers(const Dataset& ds, const std::vector<Shard>& shards) {
  std::vector<int> hits(ds.size(), 0);
  for (const auto& s : shards)
    for (auto i : s.indices) {
      if (i >= ds.size()) return false;
      ++hits[i];
    }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

Verdict partition() {
  int cover_ok = 0, ranked = 0;
  double margin = 1e300;
  for (int seed = 1; seed <= 30; ++seed) {
    const Dataset ds = make_blobs(10, 16, 200, 1.0, static_cast<std::uint64_t>(seed));
    const auto skewed = partition_dirichlet(ds, {20, 0.2, static_cast<std::uint64_t>(seed)});
    const auto flat = partition_dirichlet(ds, {20, 5.0, static_cast<std::uint64_t>(seed)});
    if (covers(ds, skewed) && covers(ds, flat)) ++cover_ok;
    const double d = mean_js(ds, skewed) - mean_js(ds, flat);
    if (d > 0.0) ++ranked;
    margin = std::min(margin, d);
  }
  return {cover_ok == 30 && ranked == 30,
          fmt("cover %d/30 seeds, JS(0.2) > JS(5.0) on %d/30 seeds, min gap %.4f", cover_ok,
              ranked, margin)};
}

// Directional desk-scale result ----------------------------------------------

Verdict directional() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig base = load_config(fs::path(SMOFI_CONFIG_DIR) / "desk-default.json");
  int fewer = 0, close = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    ExperimentConfig cfg = base;
    cfg.seeds.data = cfg.seeds.init = cfg.seeds.selection = cfg.seeds.batching = seed;
    cfg.round.method = Method::fedavg;
    const RunResult fa = run_experiment(cfg);
    cfg.round.method = Method::smofi;
    const RunResult sm = run_experiment(cfg);
    const double target = 0.9 * fa.summary.best_accuracy;
    const auto rf = rounds_to_accuracy(fa.records, target);
    const auto rs = rounds_to_accuracy(sm.records, target);
    if (rs && (!rf || *rs < *rf)) ++fewer;
    if (sm.summary.final_accuracy >= fa.summary.final_accuracy - 0.005) ++close;
    detail += fmt(" [seed %d R %s/%s final %.3f/%.3f]", static_cast<int>(seed),
                  rs ? std::to_string(*rs).c_str() : "-", rf ? std::to_string(*rf).c_str() : "-",
                  sm.summary.final_accuracy, fa.summary.final_accuracy);
  }
  const double secs = seconds_since(t0);
  return {fewer >= 2 && close == 3 && secs < 300.0,
          fmt("smofi/fedavg: fewer rounds on %d/3 (need 2), final within 0.005 on %d/3 (need 3), "
              "%.0fs (limit 300s);",
              fewer, close, secs) +
              detail};
}

// Convex sanity --------------------------------------------------------------

// Solves A x = b for a small dense system by Gaussian elimination.
std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

Verdict convex() {
  const std::size_t d = 3, per_client = 32;
  const std::vector<double> w_true{1.5, -2.0, 0.5};
  const double b_true = 0.25;
  std::mt19937_64 rng(99);
  Dataset ds;
  ds.features = Matrix(2 * per_client, d);
  ds.targets = Matrix(2 * per_client, 1);
  std::vector<Shard> shards(2);
  for (std::size_t j = 0; j < 2; ++j) {
    shards[j].owner = static_cast<int>(j);
    // The two clients see differently centred inputs.
    std::normal_distribution<double> nd(j == 0 ? -1.0 : 1.0, 1.0);
    for (std::size_t i = 0; i < per_client; ++i) {
      const std::size_t r = j * per_client + i;
      double y = b_true;
      for (std::size_t k = 0; k < d; ++k) {
        ds.features(r, k) = nd(rng);
        y += w_true[k] * ds.features(r, k);
      }
      ds.targets(r, 0) = y;
      shards[j].indices.push_back(r);
    }
  }
  // W* from the normal equations over the union, params laid out as [w, b].
  std::vector<std::vector<double>> A(d + 1, std::vector<double>(d + 1, 0.0));
  std::vector<double> rhs(d + 1, 0.0);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    std::vector<double> z(ds.features.row(r).begin(), ds.features.row(r).end());
    z.push_back(1.0);
    for (std::size_t p = 0; p <= d; ++p) {
      rhs[p] += z[p] * ds.targets(r, 0);
      for (std::size_t q = 0; q <= d; ++q) A[p][q] += z[p] * z[q];
    }
  }
  const std::vector<double> w_star = solve(A, rhs);

  const std::vector<LayerSpec> layers{LayerSpec::dense(d, 1), LayerSpec::mse(1)};
  OptimConfig o;
  o.eta = 0.01;
  o.beta = 0.9;
  o.weight_decay = 0.0;
  o.schedule = LrSchedule::inverse;
  o.lr_shift = 10.0;
  RoundConfig r;
  r.method = Method::smofi;
  r.local_epochs = 2;
  r.batch_size = 8;
  r.selection_rate = 1.0;
  r.alpha = -0.1;
  r.beta_g = 0.3;
  Federation fed(SplitModel::analytic(layers, 0), ds, shards, o, r, 3, 4);
  GlobalState s = GlobalState::initial(Network(layers).zeros());
  const std::vector<int> all{0, 1};
  auto dist = [&] {
    double sq = 0.0;
    for (std::size_t i = 0; i <= d; ++i) sq += (s.params[i] - w_star[i]) * (s.params[i] - w_star[i]);
    return std::sqrt(sq);
  };
  double prev = dist();
  int increases = 0, first_increase = -1;
  for (int n = 1; n <= 200; ++n) {
    s = fed.run_round(s, fed.make_cohort(all)).state;
    const double cur = dist();
    if (n > 5 && cur > prev) {
      ++increases;
      if (first_increase < 0) first_increase = n;
    }
    prev = cur;
  }
  return {increases == 0 && prev < 1e-3,
          fmt("||W^200 - W*|| = %.3e (need < 1e-3), %d increases after round 5%s", prev, increases,
              first_increase > 0 ? fmt(" (first at %d)", first_increase).c_str() : "")};
}

// Determinism ----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const ExperimentConfig base = load_config(fs::path(SMOFI_CONFIG_DIR) / "smoke.json");
  const fs::path root = fs::temp_directory_path() / "smofi-acceptance-determinism";
  fs::remove_all(root);
  int checked = 0, mismatched = 0;
  for (Method m : {Method::smofi, Method::fedavg, Method::sflv1, Method::sflv2}) {
    for (OutputFormat f : {OutputFormat::csv, OutputFormat::jsonl}) {
      const std::string rounds_file = f == OutputFormat::csv ? "rounds.csv" : "rounds.jsonl";
      std::vector<std::pair<std::string, std::string>> outputs;
      for (int rep = 0; rep < 3; ++rep) {
        ExperimentConfig cfg = base;
        cfg.round.method = m;
        cfg.round.exec = rep == 2 ? Exec::parallel : Exec::serial;
        const RunResult res = run_experiment(cfg);
        const fs::path dir = root / (to_string(m) + "-" + rounds_file + "-" + std::to_string(rep));
        emit(res.records, res.summary, dir, f);
        outputs.emplace_back(slurp(dir / rounds_file), slurp(dir / "summary.json"));
      }
      for (int rep = 1; rep < 3; ++rep) {
        ++checked;
        if (outputs[rep] != outputs[0] || outputs[0].first.empty()) ++mismatched;
      }
    }
  }
  fs::remove_all(root);
  return {mismatched == 0, fmt("%d reruns (serial and parallel, 4 methods, csv and jsonl), "
                               "%d not byte-identical",
                               checked, mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"hand-unrolled trace", hand_unroll},
      {"degeneracy suite", degeneracy},
      {"count invariant", count_invariant},
      {"latency arithmetic", latency},
      {"partition properties", partition},
      {"directional desk-scale result", directional},
      {"convex sanity", convex},
      {"determinism", determinism},
  };
  // Optional arguments pick criteria by number; default runs all.
  std::vector<std::size_t> picked;
  for (int a = 1; a < argc; ++a) {
    const int n = std::atoi(argv[a]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion: %s\n", argv[a]);
      return 2;
    }
    picked.push_back(static_cast<std::size_t>(n - 1));
  }
  if (picked.empty())
    for (std::size_t i = 0; i < criteria.size(); ++i) picked.push_back(i);

  std::size_t failed = 0;
  for (std::size_t i : picked) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", picked.size() - failed, picked.size());
  return failed == 0 ? 0 : 1;
}
