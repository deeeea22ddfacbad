#include "fedsim/algorithms/algorithms.hpp"

#include <cmath>
#include <string>

#include "fedsim/core/sgd.hpp"
#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::algo {

using nlohmann::json;

void AlgoConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite value >= 0");
  if (!(proportion > 0.0 && proportion <= 1.0)) throw ConfigError("proportion must be in (0, 1]");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
  if (!(server_lr > 0.0)) throw ConfigError("server_lr must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  if (!(staleness_exponent >= 0.0)) throw ConfigError("staleness_exponent must be >= 0");
}

json to_json(const AlgoConfig& c) {
  return json{{"lr", c.lr},
              {"rounds", c.rounds},
              {"proportion", c.proportion},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"mu", c.mu},
              {"server_lr", c.server_lr},
              {"alpha", c.alpha},
              {"staleness_exponent", c.staleness_exponent}};
}

namespace {
std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  const long long v = util::get_integer(j, key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError(std::string("'") + key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}
}  // namespace

AlgoConfig algo_config_from_json(const json& j, AlgoConfig c) {
  util::reject_unknown_keys(j,
                            {"lr", "rounds", "proportion", "epochs", "batch_size", "mu",
                             "server_lr", "alpha", "staleness_exponent"},
                            "algo");
  c.lr = util::get_number(j, "lr", c.lr);
  c.rounds = get_count(j, "rounds", c.rounds);
  c.proportion = util::get_number(j, "proportion", c.proportion);
  c.epochs = get_count(j, "epochs", c.epochs);
  c.batch_size = get_count(j, "batch_size", c.batch_size);
  c.mu = util::get_number(j, "mu", c.mu);
  c.server_lr = util::get_number(j, "server_lr", c.server_lr);
  c.alpha = util::get_number(j, "alpha", c.alpha);
  c.staleness_exponent = util::get_number(j, "staleness_exponent", c.staleness_exponent);
  return c;
}

namespace {

ClientUpdate make_update(const core::Objective& objective, const ParamVector& global,
                         ParamVector local, std::size_t steps) {
  ClientUpdate u;
  u.delta = std::move(local);
  u.delta -= global;
  u.num_steps = steps;
  u.num_samples = objective.num_samples();
  u.base = global;
  return u;
}

core::SgdOptions sgd_options(const AlgoConfig& config, std::size_t steps, std::uint64_t seed) {
  core::SgdOptions o;
  o.lr = config.lr;
  o.steps = steps;
  o.batch_size = config.batch_size;
  o.seed = seed;
  return o;
}

void require_updates(std::span<const ClientUpdate> updates, const ParamVector& global) {
  if (updates.empty()) throw ConfigError("aggregation needs at least one update");
  for (const auto& u : updates) {
    if (u.delta.dim() != global.dim()) throw ShapeError("update dimension mismatch");
    if (u.num_samples == 0) throw ConfigError("update carries zero samples");
  }
}

}  // namespace

ClientUpdate local_train_fedavg(const core::Objective& objective, const ParamVector& global,
                                const AlgoConfig& config, std::size_t steps, std::uint64_t seed) {
  return make_update(objective, global,
                     core::sgd_steps(objective, global, sgd_options(config, steps, seed)), steps);
}

ClientUpdate local_train_fedprox(const core::Objective& objective, const ParamVector& global,
                                 const AlgoConfig& config, std::size_t steps, std::uint64_t seed) {
  core::SgdOptions o = sgd_options(config, steps, seed);
  o.prox = core::ProxTerm{config.mu, global};
  return make_update(objective, global, core::sgd_steps(objective, global, o), steps);
}

ParamVector aggregate_weighted(const ParamVector& global, std::span<const ClientUpdate> updates) {
  require_updates(updates, global);
  double total = 0.0;
  for (const auto& u : updates) total += static_cast<double>(u.num_samples);
  ParamVector out = global;
  for (const auto& u : updates) out.axpy(static_cast<double>(u.num_samples) / total, u.delta);
  return out;
}

ParamVector fednova_aggregate(const ParamVector& global, std::span<const ClientUpdate> updates) {
  require_updates(updates, global);
  double total = 0.0;
  for (const auto& u : updates) {
    if (u.num_steps == 0) throw ConfigError("fednova update carries zero local steps");
    total += static_cast<double>(u.num_samples);
  }
  double tau_eff = 0.0;
  ParamVector direction(global.dim());
  for (const auto& u : updates) {
    const double p = static_cast<double>(u.num_samples) / total;
    const double tau = static_cast<double>(u.num_steps);
    tau_eff += p * tau;
    direction.axpy(p / tau, u.delta);
  }
  ParamVector out = global;
  out.axpy(tau_eff, direction);
  return out;
}

ClientUpdate scaffold_local_train(const core::Objective& objective, const ParamVector& global,
                                  const ParamVector& server_control,
                                  const ParamVector& client_control, const AlgoConfig& config,
                                  std::size_t steps, std::uint64_t seed) {
  if (!(config.lr > 0.0)) throw ConfigError("scaffold needs lr > 0");
  if (steps == 0) throw ConfigError("scaffold needs at least one local step");
  core::SgdOptions o = sgd_options(config, steps, seed);
  o.correction = server_control - client_control;
  ClientUpdate u = make_update(objective, global, core::sgd_steps(objective, global, o), steps);
  // dc = c_i+ - c_i = -c + (x - y) / (K lr) = -c - delta / (K lr)
  ParamVector dc = server_control;
  dc *= -1.0;
  dc.axpy(-1.0 / (static_cast<double>(steps) * config.lr), u.delta);
  u.aux = std::move(dc);
  return u;
}

void scaffold_aggregate(ServerState& state, std::span<const ClientUpdate> updates,
                        std::size_t num_clients, const AlgoConfig& config) {
  require_updates(updates, state.global);
  if (state.client_controls.size() != num_clients) {
    throw ConfigError("scaffold state not initialized for " + std::to_string(num_clients) +
                      " clients");
  }
  const double m = static_cast<double>(updates.size());
  ParamVector dx(state.global.dim());
  ParamVector dc(state.global.dim());
  for (const auto& u : updates) {
    if (!u.aux) throw ConfigError("scaffold update is missing its control delta");
    dx.axpy(1.0 / m, u.delta);
    dc.axpy(1.0 / m, *u.aux);
    state.client_controls.at(u.client_id) += *u.aux;
  }
  state.global.axpy(config.server_lr, dx);
  state.control.axpy(m / static_cast<double>(num_clients), dc);
  ++state.round;
}

void scaffold_round(ServerState& state, std::span<const std::size_t> clients,
                    std::span<const core::Objective* const> objectives,
                    std::span<const std::size_t> steps, const AlgoConfig& config,
                    std::uint64_t seed) {
  std::vector<ClientUpdate> updates;
  updates.reserve(clients.size());
  for (std::size_t k : clients) {
    ClientUpdate u =
        scaffold_local_train(*objectives[k], state.global, state.control,
                             state.client_controls.at(k), config, steps[k],
                             derive_seed(seed, {k, state.round}));
    u.client_id = k;
    u.round_sent = state.round;
    updates.push_back(std::move(u));
  }
  scaffold_aggregate(state, updates, objectives.size(), config);
}

double fedasync_mixing_weight(double alpha, double exponent, std::uint64_t staleness) {
  return alpha * std::pow(1.0 + static_cast<double>(staleness), -exponent);
}

double fedasync_apply(ServerState& state, const ClientUpdate& update, const AlgoConfig& config) {
  if (update.delta.dim() != state.global.dim() || update.base.dim() != state.global.dim()) {
    throw ShapeError("update dimension mismatch");
  }
  if (update.round_sent > state.round) throw ConfigError("update was sent in a future round");
  const double a = fedasync_mixing_weight(config.alpha, config.staleness_exponent,
                                          state.round - update.round_sent);
  ParamVector client_model = update.base + update.delta;
  state.global *= 1.0 - a;
  state.global.axpy(a, client_model);
  ++state.round;
  return a;
}

void Algorithm::initialize(ServerState&, std::size_t) const {}

void Algorithm::prepare_request(const ServerState&, LocalTask&) const {}

void Algorithm::aggregate(ServerState& state, std::span<const ClientUpdate> updates,
                          std::size_t) const {
  state.global = aggregate_weighted(state.global, updates);
  ++state.round;
}

double Algorithm::apply_async(ServerState&, const ClientUpdate&) const {
  throw UnsupportedError(std::string(name()) + " does not support asynchronous aggregation");
}

namespace {

const core::Objective& objective_of(const LocalTask& task) {
  if (task.objective == nullptr) throw ConfigError("local task has no objective");
  return *task.objective;
}

class FedAvg final : public Algorithm {
 public:
  using Algorithm::Algorithm;
  std::string_view name() const override { return "fedavg"; }
  ClientUpdate local_train(const LocalTask& t) const override {
    return local_train_fedavg(objective_of(t), t.global, config_, t.steps, t.seed);
  }
};

class FedProx final : public Algorithm {
 public:
  using Algorithm::Algorithm;
  std::string_view name() const override { return "fedprox"; }
  ClientUpdate local_train(const LocalTask& t) const override {
    return local_train_fedprox(objective_of(t), t.global, config_, t.steps, t.seed);
  }
};

class Scaffold final : public Algorithm {
 public:
  using Algorithm::Algorithm;
  std::string_view name() const override { return "scaffold"; }
  void initialize(ServerState& state, std::size_t num_clients) const override {
    state.control = ParamVector(state.global.dim());
    state.client_controls.assign(num_clients, ParamVector(state.global.dim()));
  }
  void prepare_request(const ServerState& state, LocalTask& task) const override {
    task.server_control = state.control;
    task.client_control = state.client_controls.at(task.client_id);
  }
  ClientUpdate local_train(const LocalTask& t) const override {
    if (!t.server_control || !t.client_control) {
      throw ConfigError("scaffold request is missing control variates");
    }
    return scaffold_local_train(objective_of(t), t.global, *t.server_control, *t.client_control,
                                config_, t.steps, t.seed);
  }
  void aggregate(ServerState& state, std::span<const ClientUpdate> updates,
                 std::size_t num_clients) const override {
    scaffold_aggregate(state, updates, num_clients, config_);
  }
};

class FedNova final : public Algorithm {
 public:
  using Algorithm::Algorithm;
  std::string_view name() const override { return "fednova"; }
  ClientUpdate local_train(const LocalTask& t) const override {
    return local_train_fedavg(objective_of(t), t.global, config_, t.steps, t.seed);
  }
  void aggregate(ServerState& state, std::span<const ClientUpdate> updates,
                 std::size_t) const override {
    state.global = fednova_aggregate(state.global, updates);
    ++state.round;
  }
};

class FedAsync final : public Algorithm {
 public:
  using Algorithm::Algorithm;
  std::string_view name() const override { return "fedasync"; }
  bool is_async() const override { return true; }
  ClientUpdate local_train(const LocalTask& t) const override {
    return local_train_fedavg(objective_of(t), t.global, config_, t.steps, t.seed);
  }
  void aggregate(ServerState&, std::span<const ClientUpdate>, std::size_t) const override {
    throw UnsupportedError("fedasync only runs in asynchronous mode");
  }
  double apply_async(ServerState& state, const ClientUpdate& update) const override {
    return fedasync_apply(state, update, config_);
  }
};

}  // namespace

std::unique_ptr<Algorithm> make_algorithm(const AlgoConfig& config) {
  config.validate();
  if (config.name == "fedavg") return std::make_unique<FedAvg>(config);
  if (config.name == "fedprox") return std::make_unique<FedProx>(config);
  if (config.name == "scaffold") return std::make_unique<Scaffold>(config);
  if (config.name == "fednova") return std::make_unique<FedNova>(config);
  if (config.name == "fedasync") return std::make_unique<FedAsync>(config);
  std::string known;
  for (const auto& n : algorithm_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown algorithm '" + config.name + "' (available: " + known + ")");
}

std::vector<std::string> algorithm_names() {
  return {"fedasync", "fedavg", "fednova", "fedprox", "scaffold"};
}

}  // namespace fedsim::algo
