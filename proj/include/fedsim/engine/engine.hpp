#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/algorithms/algorithms.hpp"
#include "fedsim/engine/federation.hpp"
#include "fedsim/engine/messaging.hpp"
#include "fedsim/simulator/simulator.hpp"

namespace fedsim::engine {

using sim::ClientId;
using sim::VirtualTime;

enum class EngineMode { automatic, sync, async };
enum class SamplePolicy { uniform_available, full };

struct EngineConfig {
  EngineMode mode = EngineMode::automatic;
  VirtualTime drop_timeout = 1;
  SamplePolicy sample = SamplePolicy::uniform_available;
  VirtualTime max_time = 1'000'000;  // horizon on the virtual clock
  std::size_t eval_interval = 1;
  std::size_t max_concurrency = 0;   // async; 0 = unlimited

  void validate() const;
  bool operator==(const EngineConfig&) const = default;
};

nlohmann::json to_json(const EngineConfig& config);
EngineConfig engine_config_from_json(const nlohmann::json& j, EngineConfig base = {});

struct RoundOutcome {
  std::uint64_t round = 0;
  std::vector<ClientId> selected;
  std::vector<ClientId> responded;
  std::vector<ClientId> dropped;
  VirtualTime wait = 0;            // idle ticks before selection
  VirtualTime round_duration = 0;  // from selection to round end
  VirtualTime virtual_time_end = 0;
  bool aggregated = false;
  bool horizon_reached = false;    // no client became idle before max_time
};

struct Arrival {
  ClientId client = 0;
  std::uint64_t staleness = 0;
  double weight = 0.0;
};

struct AsyncTick {
  VirtualTime time = 0;  // clock value the tick ran at
  std::vector<Arrival> arrivals;
  std::vector<ClientId> dispatched;
  std::vector<ClientId> dropped;
};

inline constexpr PartyId kServerParty = static_cast<PartyId>(-1);

// Drives one runner over the virtual clock. Clients are parties on an
// in-process network; local work travels as a "train" message and is
// computed at dispatch time from the model the client received.
class Engine {
 public:
  Engine(const Federation& federation, std::unique_ptr<algo::Algorithm> algorithm,
         sim::Simulator simulator, EngineConfig config, std::uint64_t seed);

  bool is_async() const { return async_; }
  const algo::ServerState& state() const { return state_; }
  const sim::Simulator& simulator() const { return simulator_; }
  sim::Simulator& simulator() { return simulator_; }
  const algo::Algorithm& algorithm() const { return *algorithm_; }
  const Network& network() const { return network_; }

  // Waits tick by tick for an idle client, selects, dispatches, advances the
  // clock by max(responder latency) + drop_timeout * [any dropped], and
  // aggregates the responders in client-id order.
  RoundOutcome run_sync_round();

  // One time unit: deliver due updates in client-id order, release dropped
  // clients, tick availability, dispatch idle clients up to the concurrency
  // cap, then advance the clock by 1. Arrivals stop once `max_aggregations`
  // is reached.
  AsyncTick run_async_step(std::uint64_t max_aggregations);

 private:
  std::size_t planned_steps(ClientId k) const;
  algo::ClientUpdate request_update(ClientId k, std::size_t steps, std::uint64_t key);

  const Federation& federation_;
  std::unique_ptr<algo::Algorithm> algorithm_;
  sim::Simulator simulator_;
  EngineConfig config_;
  std::uint64_t seed_;
  bool async_;
  algo::ServerState state_;
  Network network_;
  std::uint64_t sync_round_ = 0;
  std::vector<std::optional<algo::ClientUpdate>> in_flight_;
};

}  // namespace fedsim::engine
