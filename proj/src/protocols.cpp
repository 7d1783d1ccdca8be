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

#include "smofi/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iostream>
#include <numeric>

#include "smofi/error.hpp"
#include "smofi/kernels.hpp"
#include "smofi/rng.hpp"

namespace smofi {

std::string to_string(Method m) {
  switch (m) {
    case Method::smofi: return "smofi";
    case Method::fedavg: return "fedavg";
    case Method::sflv1: return "sflv1";
    case Method::sflv2: return "sflv2";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "smofi") return Method::smofi;
  if (name == "fedavg") return Method::fedavg;
  if (name == "sflv1") return Method::sflv1;
  if (name == "sflv2") return Method::sflv2;
  throw ConfigError("unknown method '" + name + "' (expected smofi, fedavg, sflv1 or sflv2)");
}

std::string to_string(SelectionMode m) {
  return m == SelectionMode::bernoulli ? "bernoulli" : "fixed_fraction";
}

SelectionMode selection_mode_from_string(const std::string& name) {
  if (name == "bernoulli") return SelectionMode::bernoulli;
  if (name == "fixed_fraction") return SelectionMode::fixed_fraction;
  throw ConfigError("unknown selection mode '" + name + "'");
}

void RoundConfig::validate() const {
  if (rounds < 0) throw ConfigError("training.rounds: must be >= 0");
  if (local_epochs < 1) throw ConfigError("training.local_epochs: must be >= 1");
  if (batch_size < 1) throw ConfigError("training.batch_size: must be >= 1");
  if (!(selection_rate > 0.0 && selection_rate <= 1.0))
    throw ConfigError("training.selection_rate: must be in (0, 1]");
  if (!(alpha < 0.0)) throw ConfigError("training.alpha: must be < 0");
  if (!(beta_g >= 0.0 && beta_g < 1.0)) throw ConfigError("training.beta_g: must be in [0, 1)");
  if (sflv1_period < 0) throw ConfigError("training.sflv1_period: must be >= 0");
  if (!(fedprox_mu >= 0.0)) throw ConfigError("training.fedprox_mu: must be >= 0");
}

GlobalState GlobalState::initial(ParamVector params) {
  GlobalState s;
  s.momentum = ParamVector::zeros_like(params);
  s.params = std::move(params);
  return s;
}

ParamVector aggregate_weighted(std::span<const ParamVector> models, std::span<const double> weights,
                               Exec exec) {
  if (models.empty()) throw UsageError("aggregate_weighted: no models");
  if (models.size() != weights.size()) throw UsageError("aggregate_weighted: one weight per model");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12)
    throw UsageError("aggregate_weighted: weights sum to " + std::to_string(sum) + ", expected 1");
  std::vector<std::span<const double>> inputs;
  for (const auto& m : models) {
    require_same_shape(m, models.front(), "aggregate_weighted");
    inputs.push_back(m.values());
  }
  ParamVector out = ParamVector::zeros_like(models.front());
  if (exec == Exec::parallel)
    kernels::affine_combination_omp(inputs, weights, out.values());
  else
    kernels::affine_combination_serial(inputs, weights, out.values());
  return out;
}

GlobalState global_momentum_update(const GlobalState& state, const ParamVector& aggregated,
                                   double beta_g) {
  require_same_shape(state.params, aggregated, "global_momentum_update");
  require_same_shape(state.params, state.momentum, "global_momentum_update(momentum)");
  GlobalState next;
  next.round = state.round;
  next.momentum = state.momentum;
  next.params = state.params;
  auto m = next.momentum.values();
  auto w = next.params.values();
  auto avg = aggregated.values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = beta_g * m[i] + (w[i] - avg[i]);
    // With beta_g = 0 the recurrences reduce to W^n = aggregated; assign it
    // directly so the result is exact rather than W - (W - avg).
    w[i] = beta_g == 0.0 ? avg[i] : w[i] - m[i];
  }
  return next;
}

ParamVector fedprox_penalty_grad(const ParamVector& local, const ParamVector& anchor, double mu) {
  require_same_shape(local, anchor, "fedprox_penalty_grad");
  if (!(mu >= 0.0)) throw UsageError("fedprox_penalty_grad: mu must be >= 0");
  ParamVector g = ParamVector::zeros_like(local);
  if (mu == 0.0) return g;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = mu * (local[i] - anchor[i]);
  return g;
}

std::vector<int> select_cohort(int client_count, double theta, SelectionMode mode,
                               std::uint64_t seed) {
  if (client_count < 1) throw UsageError("select_cohort: no clients");
  if (!(theta > 0.0 && theta <= 1.0)) throw UsageError("select_cohort: theta must be in (0, 1]");
  Rng rng(seed);
  std::vector<int> out;
  if (mode == SelectionMode::bernoulli) {
    std::bernoulli_distribution coin(theta);
    while (out.empty())
      for (int j = 0; j < client_count; ++j)
        if (coin(rng)) out.push_back(j);
    return out;
  }
  const auto k = static_cast<std::size_t>(
      std::clamp(std::ceil(theta * client_count - 1e-9), 1.0, static_cast<double>(client_count)));
  std::vector<int> all(static_cast<std::size_t>(client_count));
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  out.assign(all.begin(), all.begin() + static_cast<long>(k));
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Runs f(i) for every index, in parallel when requested. The first exception
// thrown by any iteration is rethrown after the loop.
template <class F>
void for_each_index(Exec exec, const std::vector<std::size_t>& idx, F&& f) {
  if (exec == Exec::serial || idx.size() < 2) {
    for (auto i : idx) f(i);
    return;
  }
  std::exception_ptr err;
  const auto n = static_cast<long>(idx.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < n; ++k) {
    try {
      f(idx[static_cast<std::size_t>(k)]);
    } catch (...) {
#pragma omp critical(smofi_worker_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

struct Federation::Worker {
  int client = 0;
  int steps = 0;
  BatchSchedule schedule;
  ParamVector client_params;  // full model for FedAvg
  ParamVector client_buf;
  ParamVector server_params;
  ParamVector server_buf;
  double loss_sum = 0.0;
  int loss_count = 0;
  bool finite = true;
  Matrix last_input;
  std::size_t cut_rows = 0;
  std::size_t cut_cols = 0;
};

Federation::Federation(SplitModel model, const Dataset& train, std::vector<Shard> shards,
                       OptimConfig optim, RoundConfig round, std::uint64_t batching_seed,
                       std::uint64_t order_seed)
    : model_(std::move(model)),
      net_(model_.layers, round.exec),
      train_(&train),
      shards_(std::move(shards)),
      optim_(optim),
      round_(round),
      batching_seed_(batching_seed),
      order_seed_(order_seed) {
  model_.validate();
  optim_.validate();
  round_.validate();
  if (train.dims() != net_.input_dim())
    throw ConfigError("model.layers[0].in: " + std::to_string(net_.input_dim()) +
                      " does not match dataset width " + std::to_string(train.dims()));
  for (std::size_t j = 0; j < shards_.size(); ++j)
    if (shards_[j].owner != static_cast<int>(j))
      throw UsageError("Federation: shard owners must be 0..n-1 in order");
}

RoundCohort Federation::make_cohort(std::span<const int> selected) const {
  RoundCohort c;
  std::vector<int> ids(selected.begin(), selected.end());
  std::sort(ids.begin(), ids.end());
  for (int j : ids) {
    if (j < 0 || static_cast<std::size_t>(j) >= shards_.size())
      throw UsageError("make_cohort: unknown client " + std::to_string(j));
    const int t = local_steps(shards_[static_cast<std::size_t>(j)].indices.size(),
                              round_.local_epochs, round_.batch_size);
    if (t == 0) {
      std::cerr << "warning: client " << j << " has "
                << shards_[static_cast<std::size_t>(j)].indices.size()
                << " samples, fewer than one batch; skipped this round\n";
      continue;
    }
    c.clients.push_back(j);
    c.steps.push_back(t);
  }
  return c;
}

BatchSchedule Federation::schedule(int client, int round) const {
  return BatchSchedule(shards_.at(static_cast<std::size_t>(client)).indices, round_.local_epochs,
                       round_.batch_size,
                       derive_seed(batching_seed_, {static_cast<std::uint64_t>(round),
                                                    static_cast<std::uint64_t>(client)}));
}

std::vector<int> Federation::sequential_order(const RoundCohort& cohort, int round) const {
  std::vector<int> order = cohort.clients;
  Rng rng(derive_seed(order_seed_, {static_cast<std::uint64_t>(round), stream::kOrder}));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<double> Federation::cohort_weights(const RoundCohort& cohort) const {
  std::vector<std::size_t> sizes;
  for (int j : cohort.clients) sizes.push_back(shards_[static_cast<std::size_t>(j)].indices.size());
  return aggregation_weights(sizes);
}

Federation::Worker Federation::make_worker(int client, int steps, int round,
                                           const GlobalState& state, bool full) const {
  Worker w{client, steps, schedule(client, round), {}, {}, {}, {}, 0.0, 0, true, {}, 0, 0};
  if (w.schedule.steps() != steps) throw UsageError("Federation: cohort step count is stale");
  if (full) {
    w.client_params = state.params;
  } else {
    auto pair = split(state.params, model_);
    w.client_params = std::move(pair.client);
    w.server_params = std::move(pair.server);
    w.server_buf = ParamVector::zeros_like(w.server_params);
  }
  w.client_buf = ParamVector::zeros_like(w.client_params);
  if (round_.persist_client_momentum) {
    auto it = client_momentum_.find(client);
    if (it != client_momentum_.end() && it->second.same_shape(w.client_buf)) w.client_buf = it->second;
  }
  return w;
}

void Federation::store_client_momentum(std::vector<Worker>& workers) {
  if (!round_.persist_client_momentum) return;
  for (auto& w : workers) client_momentum_[w.client] = w.client_buf;
}

void Federation::split_step(Worker& w, const ParamVector& server_prior, int tau,
                            const OptimConfig& cfg, const SubmodelPair& anchor) const {
  const std::size_t cut = model_.cut;
  const std::size_t n = model_.layer_count();
  const bool nag = cfg.variant == OptimVariant::nag;
  Batch batch = train_->gather(w.schedule.batch(tau));

  ParamVector client_ahead;
  const ParamVector* client_eval = &w.client_params;
  if (nag && cut > 0) {
    client_ahead = nag_lookahead(w.client_params, w.client_buf, cfg);
    client_eval = &client_ahead;
  }
  ParamVector server_ahead;
  const ParamVector* server_eval = &w.server_params;
  if (nag) {
    server_ahead = nag_lookahead(w.server_params, server_prior, cfg);
    server_eval = &server_ahead;
  }

  // Client forward to the cut, server forward and backward.
  ForwardResult client_fwd = net_.forward(*client_eval, batch.inputs, 0, cut);
  ForwardResult server_fwd = net_.forward(*server_eval, client_fwd.activations, cut, n);
  BackwardResult server_bwd = net_.backward(*server_eval, server_fwd.cache, batch);
  if (round_.fedprox_mu > 0.0)
    server_bwd.grads += fedprox_penalty_grad(w.server_params, anchor.server, round_.fedprox_mu);
  w.server_buf = server_prior;
  momentum_update(w.server_params, w.server_buf, server_bwd.grads, cfg);

  // The cut-layer gradient goes back to the client.
  if (cut > 0) {
    BackwardResult client_bwd = net_.backward(*client_eval, client_fwd.cache, server_bwd.input_grad);
    if (round_.fedprox_mu > 0.0)
      client_bwd.grads += fedprox_penalty_grad(w.client_params, anchor.client, round_.fedprox_mu);
    momentum_update(w.client_params, w.client_buf, client_bwd.grads, cfg);
  }

  w.loss_sum += server_bwd.loss;
  ++w.loss_count;
  if (!std::isfinite(server_bwd.loss)) w.finite = false;
  w.cut_rows = server_bwd.input_grad.rows();
  w.cut_cols = server_bwd.input_grad.cols();
  w.last_input = std::move(batch.inputs);
}

void Federation::full_step(Worker& w, int tau, const OptimConfig& cfg, const ParamVector& anchor) const {
  Batch batch = train_->gather(w.schedule.batch(tau));
  ParamVector ahead;
  const ParamVector* eval = &w.client_params;
  if (cfg.variant == OptimVariant::nag) {
    ahead = nag_lookahead(w.client_params, w.client_buf, cfg);
    eval = &ahead;
  }
  ForwardResult fwd = net_.forward(*eval, batch.inputs, 0, model_.layer_count());
  BackwardResult bwd = net_.backward(*eval, fwd.cache, batch);
  if (round_.fedprox_mu > 0.0)
    bwd.grads += fedprox_penalty_grad(w.client_params, anchor, round_.fedprox_mu);
  momentum_update(w.client_params, w.client_buf, bwd.grads, cfg);
  w.loss_sum += bwd.loss;
  ++w.loss_count;
  if (!std::isfinite(bwd.loss)) w.finite = false;
}

void Federation::emit_client_step(RoundObserver* observer, int round, const Worker& w, int tau) const {
  if (!observer) return;
  ClientStepEvent ev;
  ev.round = round;
  ev.client = w.client;
  ev.step = tau;
  ev.batch = w.schedule.batch(tau);
  ev.client_input = &w.last_input;
  ev.cut_grad_rows = w.cut_rows;
  ev.cut_grad_cols = w.cut_cols;
  ev.server_params = &w.server_params;
  ev.client_params = &w.client_params;
  observer->on_client_step(ev);
}

RoundResult Federation::skipped_round(const GlobalState& state) const {
  RoundResult r{state, {}};
  r.state.round = state.round + 1;
  r.outcome.round = r.state.round;
  r.outcome.skipped = true;
  return r;
}

RoundResult Federation::finish_split_round(const GlobalState& state, const RoundCohort& cohort,
                                           std::vector<Worker>& workers,
                                           const ParamVector* server_override) {
  const int round = state.round + 1;
  const auto p = cohort_weights(cohort);
  std::vector<ParamVector> client_side;
  std::vector<ParamVector> server_side;
  client_side.reserve(workers.size());
  server_side.reserve(workers.size());
  double loss_sum = 0.0;
  int loss_count = 0;
  bool finite = true;
  for (auto& w : workers) {
    client_side.push_back(w.client_params);
    if (!server_override) server_side.push_back(w.server_params);
    loss_sum += w.loss_sum;
    loss_count += w.loss_count;
    finite = finite && w.finite;
  }
  if (!finite) throw DivergenceError(round);
  SubmodelPair avg{aggregate_weighted(client_side, p, round_.exec),
                   server_override ? *server_override : aggregate_weighted(server_side, p, round_.exec)};
  ParamVector aggregated = join(avg, model_);

  RoundResult r;
  r.state = global_momentum_update(state, aggregated, round_.beta_g);
  r.state.round = round;
  if (!r.state.params.all_finite()) throw DivergenceError(round);
  store_client_momentum(workers);
  r.outcome.round = round;
  r.outcome.cohort = cohort.clients.size();
  r.outcome.max_steps = *std::max_element(cohort.steps.begin(), cohort.steps.end());
  r.outcome.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
  return r;
}

RoundResult Federation::run_round(const GlobalState& state, const RoundCohort& cohort,
                                  RoundObserver* observer) {
  switch (round_.method) {
    case Method::smofi: return run_smofi_round(state, cohort, observer);
    case Method::fedavg: return run_fedavg_round(state, cohort, observer);
    case Method::sflv1: return run_sflv1_round(state, cohort, round_.sflv1_period, observer);
    case Method::sflv2: return run_sflv2_round(state, cohort, observer);
  }
  throw UsageError("run_round: unknown method");
}

RoundResult Federation::run_smofi_round(const GlobalState& state, const RoundCohort& cohort,
                                        RoundObserver* observer) {
  if (cohort.clients.empty()) return skipped_round(state);
  const int round = state.round + 1;
  OptimConfig cfg = optim_;
  cfg.eta = optim_.lr_for_round(round);
  const SubmodelPair anchor = split(state.params, model_);

  std::vector<Worker> workers;
  workers.reserve(cohort.clients.size());
  for (std::size_t k = 0; k < cohort.clients.size(); ++k)
    workers.push_back(make_worker(cohort.clients[k], cohort.steps[k], round, state, false));
  const int max_steps = *std::max_element(cohort.steps.begin(), cohort.steps.end());

  // m̄^(n,0) = 0, H^n = {}
  ParamVector aligned = ParamVector::zeros_like(anchor.server);
  std::vector<std::size_t> history;  // worker indices, in finishing order

  std::vector<std::size_t> active;
  for (int tau = 0; tau < max_steps; ++tau) {
    active.clear();
    for (std::size_t k = 0; k < workers.size(); ++k)
      if (workers[k].steps > tau) active.push_back(k);

    for_each_index(round_.exec, active,
                   [&](std::size_t k) { split_step(workers[k], aligned, tau, cfg, anchor); });
    for (auto k : active) emit_client_step(observer, round, workers[k], tau);

    // Fusion for the next step. Clients whose last step was this one move
    // into the history with weight (t - T_j + 1)^alpha = 1.
    const int t = tau + 1;
    std::vector<FusionTerm> terms;
    terms.reserve(workers.size());
    for (auto k : active) {
      if (workers[k].steps == t)
        history.push_back(k);
      else
        terms.push_back({workers[k].client, 1.0, &workers[k].server_buf});
    }
    const std::size_t n_active = terms.size();
    FusionEvent ev;
    for (auto k : history) {
      const double s = staleness(t, workers[k].steps, round_.alpha);
      terms.push_back({workers[k].client, s, &workers[k].server_buf});
      if (observer) ev.staleness.push_back({workers[k].client, workers[k].steps, s});
    }
    fuse_terms(std::move(terms), aligned, round_.exec);

    if (observer) {
      ev.round = round;
      ev.tau = t;
      ev.active = n_active;
      ev.history = history.size();
      ev.cohort = workers.size();
      ev.fused = &aligned;
      observer->on_fusion(ev);
    }
  }
  return finish_split_round(state, cohort, workers, nullptr);
}

RoundResult Federation::run_sflv1_round(const GlobalState& state, const RoundCohort& cohort,
                                        int period, RoundObserver* observer) {
  if (period < 0) throw UsageError("run_sflv1_round: period must be >= 0");
  if (cohort.clients.empty()) return skipped_round(state);
  const int round = state.round + 1;
  OptimConfig cfg = optim_;
  cfg.eta = optim_.lr_for_round(round);
  const SubmodelPair anchor = split(state.params, model_);
  const auto p = cohort_weights(cohort);

  std::vector<Worker> workers;
  workers.reserve(cohort.clients.size());
  for (std::size_t k = 0; k < cohort.clients.size(); ++k)
    workers.push_back(make_worker(cohort.clients[k], cohort.steps[k], round, state, false));
  const int max_steps = *std::max_element(cohort.steps.begin(), cohort.steps.end());

  std::vector<std::size_t> active;
  for (int tau = 0; tau < max_steps; ++tau) {
    active.clear();
    for (std::size_t k = 0; k < workers.size(); ++k)
      if (workers[k].steps > tau) active.push_back(k);
    for_each_index(round_.exec, active, [&](std::size_t k) {
      split_step(workers[k], workers[k].server_buf, tau, cfg, anchor);
    });
    for (auto k : active) emit_client_step(observer, round, workers[k], tau);

    // Periodic server-side sync; the boundary at the last step is left to the
    // round-end aggregation.
    const int t = tau + 1;
    if (period > 0 && t % period == 0 && t < max_steps) {
      std::vector<ParamVector> surrogates;
      surrogates.reserve(workers.size());
      for (auto& w : workers) surrogates.push_back(w.server_params);
      ParamVector avg = aggregate_weighted(surrogates, p, round_.exec);
      for (auto& w : workers) {
        w.server_params = avg;
        w.server_buf.set_zero();
      }
    }
  }
  return finish_split_round(state, cohort, workers, nullptr);
}

RoundResult Federation::run_sflv2_round(const GlobalState& state, const RoundCohort& cohort,
                                        RoundObserver* observer) {
  if (cohort.clients.empty()) return skipped_round(state);
  const int round = state.round + 1;
  OptimConfig cfg = optim_;
  cfg.eta = optim_.lr_for_round(round);
  const SubmodelPair anchor = split(state.params, model_);

  std::vector<Worker> workers;
  workers.reserve(cohort.clients.size());
  for (std::size_t k = 0; k < cohort.clients.size(); ++k)
    workers.push_back(make_worker(cohort.clients[k], cohort.steps[k], round, state, false));

  // One server-side model and optimiser, visited by the clients in turn.
  ParamVector server = anchor.server;
  ParamVector server_buf = ParamVector::zeros_like(server);
  for (int client : sequential_order(cohort, round)) {
    auto it = std::find(cohort.clients.begin(), cohort.clients.end(), client);
    Worker& w = workers[static_cast<std::size_t>(it - cohort.clients.begin())];
    w.server_params = std::move(server);
    w.server_buf = std::move(server_buf);
    for (int tau = 0; tau < w.steps; ++tau) {
      split_step(w, w.server_buf, tau, cfg, anchor);
      emit_client_step(observer, round, w, tau);
    }
    server = std::move(w.server_params);
    server_buf = std::move(w.server_buf);
  }
  return finish_split_round(state, cohort, workers, &server);
}

RoundResult Federation::run_fedavg_round(const GlobalState& state, const RoundCohort& cohort,
                                         RoundObserver* /*observer*/) {
  if (cohort.clients.empty()) return skipped_round(state);
  const int round = state.round + 1;
  OptimConfig cfg = optim_;
  cfg.eta = optim_.lr_for_round(round);

  std::vector<Worker> workers;
  workers.reserve(cohort.clients.size());
  for (std::size_t k = 0; k < cohort.clients.size(); ++k)
    workers.push_back(make_worker(cohort.clients[k], cohort.steps[k], round, state, true));

  std::vector<std::size_t> all(workers.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for_each_index(round_.exec, all, [&](std::size_t k) {
    for (int tau = 0; tau < workers[k].steps; ++tau) full_step(workers[k], tau, cfg, state.params);
  });

  const auto p = cohort_weights(cohort);
  std::vector<ParamVector> models;
  double loss_sum = 0.0;
  int loss_count = 0;
  for (auto& w : workers) {
    if (!w.finite) throw DivergenceError(round);
    models.push_back(w.client_params);
    loss_sum += w.loss_sum;
    loss_count += w.loss_count;
  }
  RoundResult r;
  r.state = global_momentum_update(state, aggregate_weighted(models, p, round_.exec), round_.beta_g);
  r.state.round = round;
  if (!r.state.params.all_finite()) throw DivergenceError(round);
  store_client_momentum(workers);
  r.outcome.round = round;
  r.outcome.cohort = cohort.clients.size();
  r.outcome.max_steps = *std::max_element(cohort.steps.begin(), cohort.steps.end());
  r.outcome.train_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
  return r;
}

}  // namespace smofi
