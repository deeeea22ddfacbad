#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedsim/core/objective.hpp"
#include "fedsim/core/param_vector.hpp"

namespace fedsim::algo {

using core::ParamVector;

struct AlgoConfig {
  std::string name = "fedavg";
  double lr = 0.1;
  std::size_t rounds = 10;
  double proportion = 1.0;
  std::size_t epochs = 1;
  std::size_t batch_size = 50;
  double mu = 0.0;                   // fedprox
  double server_lr = 1.0;            // scaffold eta_g
  double alpha = 0.6;                // fedasync
  double staleness_exponent = 0.5;   // fedasync a

  void validate() const;
  bool operator==(const AlgoConfig&) const = default;
};

nlohmann::json to_json(const AlgoConfig& config);
// Fields absent from `j` keep their value in `base`. `name` is not read here.
AlgoConfig algo_config_from_json(const nlohmann::json& j, AlgoConfig base = {});

struct ClientUpdate {
  std::size_t client_id = 0;
  ParamVector delta;  // local result minus `base`
  std::size_t num_steps = 0;
  std::size_t num_samples = 0;
  std::uint64_t round_sent = 0;
  ParamVector base;   // global model the client started from
  std::optional<ParamVector> aux;  // scaffold: c_i+ - c_i
};

struct ServerState {
  ParamVector global;
  std::uint64_t round = 0;  // aggregation count
  // Scaffold only.
  ParamVector control;
  std::vector<ParamVector> client_controls;
};

// Everything a client needs for one unit of local work.
struct LocalTask {
  const core::Objective* objective = nullptr;
  ParamVector global;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::uint64_t round_sent = 0;
  std::size_t client_id = 0;
  std::optional<ParamVector> server_control;  // scaffold c
  std::optional<ParamVector> client_control;  // scaffold c_i
};

// Runs `steps` SGD steps from `global`; delta = result - global.
ClientUpdate local_train_fedavg(const core::Objective& objective, const ParamVector& global,
                                const AlgoConfig& config, std::size_t steps, std::uint64_t seed);
// As fedavg with (mu/2)||w - global||^2 added to the local objective.
ClientUpdate local_train_fedprox(const core::Objective& objective, const ParamVector& global,
                                 const AlgoConfig& config, std::size_t steps, std::uint64_t seed);

// global + sum_k (n_k / sum n) delta_k over the received updates.
ParamVector aggregate_weighted(const ParamVector& global, std::span<const ClientUpdate> updates);

// global + tau_eff * sum_k p_k delta_k / tau_k, tau_eff = sum_k p_k tau_k, p_k = n_k / sum n.
ParamVector fednova_aggregate(const ParamVector& global, std::span<const ClientUpdate> updates);

// Local steps y <- y - lr (g(y) - c_i + c); aux = c_i+ - c_i with
// c_i+ = c_i - c + (x - y) / (K lr).
ClientUpdate scaffold_local_train(const core::Objective& objective, const ParamVector& global,
                                  const ParamVector& server_control,
                                  const ParamVector& client_control, const AlgoConfig& config,
                                  std::size_t steps, std::uint64_t seed);
// x <- x + eta_g mean(dx); c <- c + (|S|/N) mean(dc); c_i <- c_i + dc_i.
void scaffold_aggregate(ServerState& state, std::span<const ClientUpdate> updates,
                        std::size_t num_clients, const AlgoConfig& config);
// One synchronous round over `clients` with full local work of `steps[k]` steps.
void scaffold_round(ServerState& state, std::span<const std::size_t> clients,
                    std::span<const core::Objective* const> objectives,
                    std::span<const std::size_t> steps, const AlgoConfig& config,
                    std::uint64_t seed);

// alpha * (1 + staleness)^(-a).
double fedasync_mixing_weight(double alpha, double exponent, std::uint64_t staleness);
// theta <- (1 - a_t) theta + a_t (base + delta); round += 1. Returns a_t.
double fedasync_apply(ServerState& state, const ClientUpdate& update, const AlgoConfig& config);

class Algorithm {
 public:
  explicit Algorithm(AlgoConfig config) : config_(std::move(config)) {}
  virtual ~Algorithm() = default;

  const AlgoConfig& config() const { return config_; }
  virtual std::string_view name() const = 0;
  virtual bool is_async() const { return false; }

  virtual void initialize(ServerState& state, std::size_t num_clients) const;
  // Fills algorithm-specific request fields.
  virtual void prepare_request(const ServerState& state, LocalTask& task) const;
  virtual ClientUpdate local_train(const LocalTask& task) const = 0;
  // Synchronous aggregation; `updates` is non-empty and sorted by client id.
  virtual void aggregate(ServerState& state, std::span<const ClientUpdate> updates,
                         std::size_t num_clients) const;
  // Asynchronous arrival; returns the mixing weight applied.
  virtual double apply_async(ServerState& state, const ClientUpdate& update) const;

 protected:
  AlgoConfig config_;
};

std::unique_ptr<Algorithm> make_algorithm(const AlgoConfig& config);
std::vector<std::string> algorithm_names();

}  // namespace fedsim::algo
