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

#include "smofi/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "smofi/error.hpp"
#include "smofi/rng.hpp"

namespace smofi {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

namespace {

// Field reader that reports failures with the full path, e.g.
// "training.selection_rate: expected number".
class Section {
 public:
  Section(const json& j, std::string path, std::set<std::string> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) throw ConfigError(field(it.key()) + ": unknown field");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& at(const std::string& key) const { return j_.at(key); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    if (!j_.contains(key)) return fallback;
    return as<T>(key);
  }

  template <class T>
  T require(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(field(key) + ": required");
    return as<T>(key);
  }

 private:
  template <class T>
  T as(const std::string& key) const {
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key) + ": expected boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          throw ConfigError(field(key) + ": expected non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key) + ": expected string");
    }
    return v.get<T>();
  }

  const json& j_;
  std::string path_;
};

template <class Fn>
auto rethrow_with_path(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

LayerSpec parse_layer(const json& j, const std::string& path, std::size_t prev_out) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(path + ".kind: required");
  if (!j.at("kind").is_string()) throw ConfigError(path + ".kind: expected string");
  const auto kind = rethrow_with_path(path + ".kind",
                                      [&] { return layer_kind_from_string(j.at("kind").get<std::string>()); });
  switch (kind) {
    case LayerKind::dense: {
      Section s(j, path, {"kind", "in", "out", "bias"});
      return LayerSpec::dense(s.get<std::size_t>("in", prev_out), s.require<std::size_t>("out"),
                              s.get<bool>("bias", true));
    }
    case LayerKind::relu: {
      Section s(j, path, {"kind", "dim"});
      return LayerSpec::relu(s.get<std::size_t>("dim", prev_out));
    }
    case LayerKind::softmax_xent: {
      Section s(j, path, {"kind", "classes"});
      return LayerSpec::softmax_xent(s.get<std::size_t>("classes", prev_out));
    }
    case LayerKind::mse: {
      Section s(j, path, {"kind", "dim"});
      return LayerSpec::mse(s.get<std::size_t>("dim", prev_out));
    }
  }
  throw ConfigError(path + ".kind: unsupported");
}

std::pair<double, double> parse_range(const Section& s, const std::string& key,
                                      std::pair<double, double> fallback) {
  if (!s.has(key)) return fallback;
  const json& v = s.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(s.field(key) + ": expected [min, max]");
  return {v[0].get<double>(), v[1].get<double>()};
}

template <class Fn>
void validate_at(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    // Component validators already prefix their section name.
    if (msg.rfind(prefix, 0) == 0) throw;
    throw ConfigError(prefix + "." + msg);
  }
}

}  // namespace

ExperimentConfig parse_config(const json& root) {
  Section top(root, "", {"name", "notes", "model", "dataset", "partition", "training", "optim",
                         "latency", "seeds", "target", "parallel"});
  ExperimentConfig cfg;
  cfg.name = top.get<std::string>("name", cfg.name);
  cfg.notes = top.get<std::string>("notes", "");

  {
    if (!top.has("model")) throw ConfigError("model: required");
    Section s(top.at("model"), "model", {"layers", "cut", "macs", "activation_kb"});
    if (!s.has("layers") || !s.at("layers").is_array() || s.at("layers").empty())
      throw ConfigError("model.layers: expected a non-empty array");
    std::size_t prev = 0;
    const json& layers = s.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      cfg.layers.push_back(parse_layer(layers[i], "model.layers[" + std::to_string(i) + "]", prev));
      prev = cfg.layers.back().out_dim;
    }
    cfg.cut = s.require<std::size_t>("cut");
    cfg.macs = s.get<std::vector<std::uint64_t>>("macs", {});
    cfg.activation_kb = s.get<std::vector<double>>("activation_kb", {});
  }
  if (top.has("dataset")) {
    Section s(top.at("dataset"), "dataset", {"kind", "classes", "dims", "per_class", "test_per_class",
                                              "spread", "separation", "train", "test"});
    auto& d = cfg.dataset;
    d.kind = s.get<std::string>("kind", d.kind);
    if (d.kind != "blobs" && d.kind != "csv") throw ConfigError("dataset.kind: expected blobs or csv");
    d.classes = s.get<int>("classes", d.classes);
    d.dims = s.get<int>("dims", d.dims);
    d.per_class = s.get<int>("per_class", d.per_class);
    d.test_per_class = s.get<int>("test_per_class", d.test_per_class);
    d.spread = s.get<double>("spread", d.spread);
    d.separation = s.get<double>("separation", d.separation);
    d.train_csv = s.get<std::string>("train", "");
    d.test_csv = s.get<std::string>("test", "");
  }
  if (top.has("partition")) {
    Section s(top.at("partition"), "partition", {"clients", "gamma"});
    cfg.clients = s.get<int>("clients", cfg.clients);
    cfg.gamma = s.get<double>("gamma", cfg.gamma);
  }
  if (top.has("training")) {
    Section s(top.at("training"), "training",
              {"method", "rounds", "local_epochs", "batch_size", "selection_rate", "selection_mode",
               "alpha", "beta_g", "sflv1_period", "fedprox_mu", "persist_client_momentum"});
    auto& r = cfg.round;
    if (s.has("method"))
      r.method = rethrow_with_path("training.method",
                                   [&] { return method_from_string(s.require<std::string>("method")); });
    r.rounds = s.get<int>("rounds", r.rounds);
    r.local_epochs = s.get<int>("local_epochs", r.local_epochs);
    r.batch_size = s.get<int>("batch_size", r.batch_size);
    r.selection_rate = s.get<double>("selection_rate", r.selection_rate);
    if (s.has("selection_mode"))
      r.selection_mode = rethrow_with_path("training.selection_mode", [&] {
        return selection_mode_from_string(s.require<std::string>("selection_mode"));
      });
    r.alpha = s.get<double>("alpha", r.alpha);
    r.beta_g = s.get<double>("beta_g", r.beta_g);
    if (s.has("sflv1_period")) {
      const json& v = s.at("sflv1_period");
      if (v.is_string() && v.get<std::string>() == "round")
        r.sflv1_period = 0;
      else
        r.sflv1_period = s.require<int>("sflv1_period");
    }
    r.fedprox_mu = s.get<double>("fedprox_mu", r.fedprox_mu);
    r.persist_client_momentum = s.get<bool>("persist_client_momentum", r.persist_client_momentum);
  }
  if (top.has("optim")) {
    Section s(top.at("optim"), "optim",
              {"eta", "beta", "weight_decay", "lr_decay_per_round", "variant", "schedule", "lr_shift"});
    auto& o = cfg.optim;
    o.eta = s.get<double>("eta", o.eta);
    o.beta = s.get<double>("beta", o.beta);
    o.weight_decay = s.get<double>("weight_decay", o.weight_decay);
    o.lr_decay_per_round = s.get<double>("lr_decay_per_round", o.lr_decay_per_round);
    const auto variant = s.get<std::string>("variant", "sgdm");
    if (variant == "sgdm")
      o.variant = OptimVariant::sgdm;
    else if (variant == "nag")
      o.variant = OptimVariant::nag;
    else
      throw ConfigError("optim.variant: expected sgdm or nag");
    const auto schedule = s.get<std::string>("schedule", "exponential");
    if (schedule == "exponential")
      o.schedule = LrSchedule::exponential;
    else if (schedule == "inverse")
      o.schedule = LrSchedule::inverse;
    else
      throw ConfigError("optim.schedule: expected exponential or inverse");
    o.lr_shift = s.get<double>("lr_shift", o.lr_shift);
  }
  if (top.has("latency")) {
    Section s(top.at("latency"), "latency", {"p_d", "bandwidth_kbps", "kappa", "profiles_csv"});
    std::tie(cfg.latency.p_d_min, cfg.latency.p_d_max) =
        parse_range(s, "p_d", {cfg.latency.p_d_min, cfg.latency.p_d_max});
    std::tie(cfg.latency.b_min_kbps, cfg.latency.b_max_kbps) =
        parse_range(s, "bandwidth_kbps", {cfg.latency.b_min_kbps, cfg.latency.b_max_kbps});
    cfg.kappa = s.get<double>("kappa", cfg.kappa);
    cfg.profiles_csv = s.get<std::string>("profiles_csv", "");
  }
  if (top.has("seeds")) {
    Section s(top.at("seeds"), "seeds", {"data", "init", "selection", "batching", "profiles"});
    cfg.seeds.data = s.get<std::uint64_t>("data", cfg.seeds.data);
    cfg.seeds.init = s.get<std::uint64_t>("init", cfg.seeds.init);
    cfg.seeds.selection = s.get<std::uint64_t>("selection", cfg.seeds.selection);
    cfg.seeds.batching = s.get<std::uint64_t>("batching", cfg.seeds.batching);
    cfg.seeds.profiles = s.get<std::uint64_t>("profiles", cfg.seeds.profiles);
  }
  if (top.has("target")) {
    Section s(top.at("target"), "target", {"mode", "fraction", "accuracy", "baseline_method"});
    const auto mode = s.get<std::string>("mode", "baseline");
    if (mode == "baseline") {
      cfg.target.mode = TargetConfig::Mode::baseline;
      cfg.target.value = s.get<double>("fraction", 0.9);
      if (s.has("baseline_method"))
        cfg.target.baseline_method = rethrow_with_path("target.baseline_method", [&] {
          return method_from_string(s.require<std::string>("baseline_method"));
        });
    } else if (mode == "absolute") {
      cfg.target.mode = TargetConfig::Mode::absolute;
      cfg.target.value = s.require<double>("accuracy");
    } else {
      throw ConfigError("target.mode: expected baseline or absolute");
    }
  }
  if (top.has("parallel")) {
    Section s(top.at("parallel"), "parallel", {"enabled", "threads"});
    cfg.round.exec = s.get<bool>("enabled", false) ? Exec::parallel : Exec::serial;
    cfg.threads = s.get<int>("threads", 0);
  }
  cfg.validate();
  return cfg;
}

SplitModel ExperimentConfig::split_model() const {
  SplitModel m = SplitModel::analytic(layers, cut);
  if (!macs.empty()) m.per_layer_macs = macs;
  if (!activation_kb.empty()) m.per_layer_activation_kb = activation_kb;
  m.validate();
  return m;
}

void ExperimentConfig::validate() const {
  validate_at("model", [&] {
    Network net(layers);
    const auto m = split_model();
    (void)compute_ratio(m);
  });
  if (dataset.kind == "blobs") {
    if (dataset.classes < 2) throw ConfigError("dataset.classes: must be >= 2");
    if (dataset.dims < 1) throw ConfigError("dataset.dims: must be >= 1");
    if (dataset.per_class < 1) throw ConfigError("dataset.per_class: must be >= 1");
    if (dataset.test_per_class < 1) throw ConfigError("dataset.test_per_class: must be >= 1");
    if (!(dataset.spread >= 0.0)) throw ConfigError("dataset.spread: must be >= 0");
    if (static_cast<std::size_t>(dataset.dims) != layers.front().in_dim)
      throw ConfigError("model.layers[0].in: must equal dataset.dims");
    if (layers.back().kind != LayerKind::softmax_xent ||
        static_cast<std::size_t>(dataset.classes) != layers.back().in_dim)
      throw ConfigError("model.layers: head must be softmax_xent over dataset.classes");
  } else {
    if (dataset.train_csv.empty()) throw ConfigError("dataset.train: required for csv datasets");
    if (dataset.test_csv.empty()) throw ConfigError("dataset.test: required for csv datasets");
  }
  if (clients < 1) throw ConfigError("partition.clients: must be >= 1");
  if (!(gamma > 0.0)) throw ConfigError("partition.gamma: must be > 0");
  validate_at("training", [&] { round.validate(); });
  validate_at("optim", [&] { optim.validate(); });
  validate_at("latency", [&] { latency.validate(); });
  if (!(kappa > 0.0)) throw ConfigError("latency.kappa: must be > 0");
  if (target.mode == TargetConfig::Mode::baseline && !(target.value > 0.0 && target.value <= 1.0))
    throw ConfigError("target.fraction: must be in (0, 1]");
  if (target.mode == TargetConfig::Mode::absolute && !(target.value >= 0.0 && target.value <= 1.0))
    throw ConfigError("target.accuracy: must be in [0, 1]");
  if (threads < 0) throw ConfigError("parallel.threads: must be >= 0");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json layers = json::array();
  for (const auto& l : cfg.layers) {
    json e{{"kind", to_string(l.kind)}};
    if (l.kind == LayerKind::dense) {
      e["in"] = l.in_dim;
      e["out"] = l.out_dim;
      e["bias"] = l.bias;
    } else if (l.kind == LayerKind::softmax_xent) {
      e["classes"] = l.in_dim;
    } else {
      e["dim"] = l.in_dim;
    }
    layers.push_back(e);
  }
  json model{{"layers", layers}, {"cut", cfg.cut}};
  if (!cfg.macs.empty()) model["macs"] = cfg.macs;
  if (!cfg.activation_kb.empty()) model["activation_kb"] = cfg.activation_kb;

  json dataset{{"kind", cfg.dataset.kind}};
  if (cfg.dataset.kind == "blobs") {
    dataset["classes"] = cfg.dataset.classes;
    dataset["dims"] = cfg.dataset.dims;
    dataset["per_class"] = cfg.dataset.per_class;
    dataset["test_per_class"] = cfg.dataset.test_per_class;
    dataset["spread"] = cfg.dataset.spread;
    dataset["separation"] = cfg.dataset.separation;
  } else {
    dataset["train"] = cfg.dataset.train_csv;
    dataset["test"] = cfg.dataset.test_csv;
  }
  const auto& r = cfg.round;
  json target = cfg.target.mode == TargetConfig::Mode::baseline
                    ? json{{"mode", "baseline"},
                           {"fraction", cfg.target.value},
                           {"baseline_method", to_string(cfg.target.baseline_method)}}
                    : json{{"mode", "absolute"}, {"accuracy", cfg.target.value}};
  json latency{{"p_d", {cfg.latency.p_d_min, cfg.latency.p_d_max}},
               {"bandwidth_kbps", {cfg.latency.b_min_kbps, cfg.latency.b_max_kbps}},
               {"kappa", cfg.kappa}};
  if (!cfg.profiles_csv.empty()) latency["profiles_csv"] = cfg.profiles_csv;
  json out{
      {"name", cfg.name},
      {"model", model},
      {"dataset", dataset},
      {"partition", {{"clients", cfg.clients}, {"gamma", cfg.gamma}}},
      {"training",
       {{"method", to_string(r.method)},
        {"rounds", r.rounds},
        {"local_epochs", r.local_epochs},
        {"batch_size", r.batch_size},
        {"selection_rate", r.selection_rate},
        {"selection_mode", to_string(r.selection_mode)},
        {"alpha", r.alpha},
        {"beta_g", r.beta_g},
        {"sflv1_period", r.sflv1_period},
        {"fedprox_mu", r.fedprox_mu},
        {"persist_client_momentum", r.persist_client_momentum}}},
      {"optim",
       {{"eta", cfg.optim.eta},
        {"beta", cfg.optim.beta},
        {"weight_decay", cfg.optim.weight_decay},
        {"lr_decay_per_round", cfg.optim.lr_decay_per_round},
        {"variant", to_string(cfg.optim.variant)},
        {"schedule", cfg.optim.schedule == LrSchedule::inverse ? "inverse" : "exponential"},
        {"lr_shift", cfg.optim.lr_shift}}},
      {"latency", latency},
      {"seeds",
       {{"data", cfg.seeds.data},
        {"init", cfg.seeds.init},
        {"selection", cfg.seeds.selection},
        {"batching", cfg.seeds.batching},
        {"profiles", cfg.seeds.profiles}}},
      {"target", target},
      {"parallel", {{"enabled", r.exec == Exec::parallel}, {"threads", cfg.threads}}}};
  if (!cfg.notes.empty()) out["notes"] = cfg.notes;
  return out;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("name");
  j.erase("notes");
  j.erase("target");
  j.erase("parallel");
  for (const char* k : {"method", "alpha", "beta_g", "sflv1_period", "fedprox_mu", "persist_client_momentum"})
    j["training"].erase(k);
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Running

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  ExperimentSetup s;
  const auto& d = cfg.dataset;
  if (d.kind == "blobs") {
    s.train = make_blobs(d.classes, d.dims, d.per_class, d.spread,
                         derive_seed(cfg.seeds.data, {stream::kTrainData}), d.separation);
    s.test = make_blobs(d.classes, d.dims, d.test_per_class, d.spread,
                        derive_seed(cfg.seeds.data, {stream::kTestData}), d.separation);
  } else {
    s.train = load_csv(d.train_csv);
    s.test = load_csv(d.test_csv, s.train.classes);
    if (s.test.dims() != s.train.dims()) throw ConfigError("dataset.test: width differs from train");
  }
  s.shards = partition_dirichlet(
      s.train, {cfg.clients, cfg.gamma, derive_seed(cfg.seeds.data, {stream::kPartition})});
  if (!cfg.profiles_csv.empty()) {
    s.profiles = read_profiles_csv(cfg.profiles_csv);
    if (s.profiles.size() != static_cast<std::size_t>(cfg.clients))
      throw ConfigError("latency.profiles_csv: expected " + std::to_string(cfg.clients) + " profiles");
  } else {
    s.profiles = sample_profiles(cfg.clients, cfg.seeds.profiles, cfg.latency);
  }
  s.server = ServerProfile::from_clients(s.profiles, cfg.kappa);
  s.model = cfg.split_model();
  return s;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentSetup setup = build_setup(cfg);
  Federation fed(setup.model, setup.train, setup.shards, cfg.optim, cfg.round, cfg.seeds.batching,
                 cfg.seeds.selection);
  const Network& net = fed.network();
  GlobalState state = GlobalState::initial(net.init_params(cfg.seeds.init));

  RunResult out;
  auto& sum = out.summary;
  sum.name = cfg.name;
  sum.method = to_string(cfg.round.method);
  sum.fingerprint = config_fingerprint(cfg);
  sum.initial_accuracy = evaluate(net, state.params, setup.test);
  sum.best_accuracy = sum.initial_accuracy;
  sum.final_accuracy = sum.initial_accuracy;

  const auto composition =
      cfg.round.method == Method::sflv2 ? Composition::sequential : Composition::parallel;
  double cum = 0.0;
  for (int n = 1; n <= cfg.round.rounds; ++n) {
    const auto selected = select_cohort(cfg.clients, cfg.round.selection_rate,
                                        cfg.round.selection_mode,
                                        derive_seed(cfg.seeds.selection, {static_cast<std::uint64_t>(n)}));
    const RoundCohort cohort = fed.make_cohort(selected);
    RoundResult res = fed.run_round(state, cohort);
    state = std::move(res.state);

    std::vector<ClientRoundLatency> lat;
    double js = 0.0;
    for (std::size_t k = 0; k < cohort.clients.size(); ++k) {
      const int j = cohort.clients[k];
      const auto& prof = setup.profiles[static_cast<std::size_t>(j)];
      lat.push_back(cfg.round.method == Method::fedavg
                        ? fedavg_round_latency(j, prof, setup.model, cfg.round.batch_size, cohort.steps[k])
                        : split_round_latency(j, prof, setup.server, setup.model,
                                              cfg.round.batch_size, cohort.steps[k]));
      js += js_from_balanced(setup.train, setup.shards[static_cast<std::size_t>(j)]);
    }
    const RoundLatency rl = round_latency(lat, composition);
    cum += rl.total_s;

    RoundRecord rec;
    rec.round = n;
    rec.accuracy = evaluate(net, state.params, setup.test);
    rec.train_loss = res.outcome.train_loss;
    rec.device_s = rl.device_s;
    rec.server_s = rl.server_s;
    rec.comm_s = rl.comm_s;
    rec.round_time_s = rl.total_s;
    rec.cum_time_s = cum;
    rec.cohort = cohort.clients.size();
    rec.max_steps = res.outcome.max_steps;
    rec.js_mean = cohort.clients.empty() ? 0.0 : js / static_cast<double>(cohort.clients.size());
    out.records.push_back(rec);
  }

  sum.rounds = cfg.round.rounds;
  sum.total_time_s = cum;
  if (!out.records.empty()) {
    sum.final_accuracy = out.records.back().accuracy;
    sum.best_accuracy = std::max_element(out.records.begin(), out.records.end(),
                                         [](const RoundRecord& a, const RoundRecord& b) {
                                           return a.accuracy < b.accuracy;
                                         })->accuracy;
  }
  if (cfg.target.mode == TargetConfig::Mode::absolute)
    apply_target(sum, out.records, cfg.target.value);
  return out;
}

RunResult run_with_target(const ExperimentConfig& cfg) {
  if (cfg.target.mode == TargetConfig::Mode::absolute) return run_experiment(cfg);
  ExperimentConfig base_cfg = cfg;
  base_cfg.round.method = cfg.target.baseline_method;
  base_cfg.target.mode = TargetConfig::Mode::absolute;
  RunResult base = run_experiment(base_cfg);
  const double target = cfg.target.value * base.summary.best_accuracy;
  apply_target(base.summary, base.records, target);

  RunResult run = cfg.round.method == cfg.target.baseline_method ? base : run_experiment(cfg);
  run.summary.name = cfg.name;
  apply_target(run.summary, run.records, target);
  run.summary.baseline_method = to_string(cfg.target.baseline_method);
  run.summary.baseline_rounds_to_target = base.summary.rounds_to_target;
  run.summary.baseline_time_to_target_s = base.summary.time_to_target_s;
  return run;
}

std::optional<int> rounds_to_accuracy(std::span<const RoundRecord> records, double target) {
  for (const auto& r : records)
    if (r.accuracy >= target) return r.round;
  return std::nullopt;
}

std::optional<double> time_to_accuracy(std::span<const RoundRecord> records, double target) {
  for (const auto& r : records)
    if (r.accuracy >= target) return r.cum_time_s;
  return std::nullopt;
}

void apply_target(RunSummary& summary, std::span<const RoundRecord> records, double target) {
  summary.target_accuracy = target;
  summary.rounds_to_target = rounds_to_accuracy(records, target);
  summary.time_to_target_s = time_to_accuracy(records, target);
}

// ---------------------------------------------------------------------------
// Reporting

std::string format_speedup(std::optional<double> baseline, std::optional<double> method) {
  if (!baseline || !method || !(*method > 0.0)) return "—";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f×", *baseline / *method);
  return buf;
}

namespace {

// Pads to a display width counted in UTF-8 code points.
std::string pad(const std::string& s, std::size_t width, bool left) {
  std::size_t cols = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++cols;
  if (cols >= width) return s;
  const std::string fill(width - cols, ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

std::string compare(std::span<const RunSummary> runs) {
  if (runs.empty()) throw UsageError("compare: no runs");
  for (const auto& r : runs)
    if (r.fingerprint != runs.front().fingerprint)
      throw UsageError("compare: run '" + r.name + "' (" + r.method +
                       ") does not share the dataset/model/seed configuration of '" +
                       runs.front().name + "'");
  const auto& base = runs.front();
  auto opt_d = [](std::optional<int> v) -> std::optional<double> {
    if (!v) return std::nullopt;
    return static_cast<double>(*v);
  };
  std::size_t name_w = 3;
  for (const auto& r : runs) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::string& method, const std::string& acc,
                 const std::string& rr, const std::string& tt, const std::string& rup,
                 const std::string& tup) {
    out << pad(name, name_w, true) << ' ' << pad(method, 10, true) << ' ' << pad(acc, 8, false)
        << ' ' << pad(rr, 6, false) << ' ' << pad(tt, 12, false) << ' ' << pad(rup, 9, false)
        << ' ' << pad(tup, 9, false) << '\n';
  };
  row("run", "method", "best_acc", "R", "T(s)", "R↑", "T↑");
  for (const auto& r : runs) {
    char acc[32], ts[32];
    std::snprintf(acc, sizeof acc, "%.4f", r.best_accuracy);
    if (r.time_to_target_s)
      std::snprintf(ts, sizeof ts, "%.1f", *r.time_to_target_s);
    else
      std::snprintf(ts, sizeof ts, "—");
    row(r.name, r.method, acc, r.rounds_to_target ? std::to_string(*r.rounds_to_target) : "—", ts,
        format_speedup(opt_d(base.rounds_to_target), opt_d(r.rounds_to_target)),
        format_speedup(base.time_to_target_s, r.time_to_target_s));
  }
  return out.str();
}

namespace {
template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}
template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}
}  // namespace

json to_json(const RunSummary& s) {
  return json{{"name", s.name},
              {"method", s.method},
              {"fingerprint", s.fingerprint},
              {"rounds", s.rounds},
              {"initial_accuracy", s.initial_accuracy},
              {"best_accuracy", s.best_accuracy},
              {"final_accuracy", s.final_accuracy},
              {"total_time_s", s.total_time_s},
              {"target_accuracy", opt(s.target_accuracy)},
              {"rounds_to_target", opt(s.rounds_to_target)},
              {"time_to_target_s", opt(s.time_to_target_s)},
              {"baseline_method", opt(s.baseline_method)},
              {"baseline_rounds_to_target", opt(s.baseline_rounds_to_target)},
              {"baseline_time_to_target_s", opt(s.baseline_time_to_target_s)}};
}

RunSummary summary_from_json(const json& j) {
  try {
    RunSummary s;
    s.name = j.at("name").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.fingerprint = j.at("fingerprint").get<std::string>();
    s.rounds = j.at("rounds").get<int>();
    s.initial_accuracy = j.at("initial_accuracy").get<double>();
    s.best_accuracy = j.at("best_accuracy").get<double>();
    s.final_accuracy = j.at("final_accuracy").get<double>();
    s.total_time_s = j.value("total_time_s", 0.0);
    s.target_accuracy = get_opt<double>(j, "target_accuracy");
    s.rounds_to_target = get_opt<int>(j, "rounds_to_target");
    s.time_to_target_s = get_opt<double>(j, "time_to_target_s");
    s.baseline_method = get_opt<std::string>(j, "baseline_method");
    s.baseline_rounds_to_target = get_opt<int>(j, "baseline_rounds_to_target");
    s.baseline_time_to_target_s = get_opt<double>(j, "baseline_time_to_target_s");
    return s;
  } catch (const json::exception& e) {
    throw UsageError(std::string("summary: ") + e.what());
  }
}

std::string records_csv(std::span<const RoundRecord> records) {
  std::string out = "round,accuracy,cum_time_s,cohort,js_mean\n";
  char line[160];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%zu,%.6f\n", r.round, r.accuracy, r.cum_time_s,
                  r.cohort, r.js_mean);
    out += line;
  }
  return out;
}

std::string records_jsonl(std::span<const RoundRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json j{{"round", r.round},         {"accuracy", r.accuracy},   {"train_loss", r.train_loss},
           {"device_s", r.device_s},   {"server_s", r.server_s},   {"comm_s", r.comm_s},
           {"round_time_s", r.round_time_s}, {"cum_time_s", r.cum_time_s}, {"cohort", r.cohort},
           {"max_steps", r.max_steps}, {"js_mean", r.js_mean}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {
void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}
}  // namespace

void emit(std::span<const RoundRecord> records, const RunSummary& summary,
          const std::filesystem::path& dir, OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  if (format == OutputFormat::csv)
    write_file(dir / "rounds.csv", records_csv(records));
  else
    write_file(dir / "rounds.jsonl", records_jsonl(records));
  write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");
}

}  // namespace smofi
