#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "fedsim/simulator/profile.hpp"

namespace fedsim::sim {

enum class StateKind { offline, idle, selected, working, dropped };

std::string_view to_string(StateKind kind);

struct ClientState {
  StateKind kind = StateKind::offline;
  VirtualTime finish_at = 0;  // meaningful only while working
  bool operator==(const ClientState&) const = default;
};

// Offline<->Idle, Idle->Selected, Selected->Working, Selected->Dropped,
// Working->Idle, Working->Offline, Dropped->Idle, Dropped->Offline.
bool is_legal_transition(StateKind from, StateKind to);

// Called on every state change, before the change is applied.
using TransitionObserver =
    std::function<void(ClientId client, StateKind from, StateKind to, VirtualTime now)>;

// One availability draw per client at time `now`. Working, Selected and
// Dropped clients are untouched. Client k's draw is keyed by (seed, k, now).
void tick_availability(const std::vector<ClientProfile>& profiles, std::vector<ClientState>& states,
                       VirtualTime now, std::uint64_t seed,
                       const TransitionObserver& observer = {});

struct Assignment {
  ClientId client = 0;
  bool dropped = false;
  VirtualTime latency = 0;  // 0 when dropped
  std::size_t steps = 0;    // completed local steps; 0 when dropped
  VirtualTime finish_at = 0;
};

// Client-state machine plus the global clock for one runner. Every draw for
// client k is keyed by (seed, purpose, k, key), so no client's trajectory
// depends on another client's draws.
class Simulator {
 public:
  Simulator(std::vector<ClientProfile> profiles, std::uint64_t seed);

  std::size_t num_clients() const { return profiles_.size(); }
  VirtualTime now() const { return now_; }
  std::uint64_t seed() const { return seed_; }
  const ClientProfile& profile(ClientId k) const { return profiles_.at(k); }
  const ClientState& state(ClientId k) const { return states_.at(k); }
  const std::vector<ClientState>& states() const { return states_; }
  std::size_t participation(ClientId k) const { return participation_.at(k); }

  void set_observer(TransitionObserver observer) { observer_ = std::move(observer); }

  void advance(VirtualTime dt);
  void tick_availability();
  std::vector<ClientId> idle_clients() const;

  // Idle -> Selected.
  void select(ClientId k);
  // Selected -> Working or Dropped. Rolls connectivity, then latency and
  // completeness; `key` is the round (sync) or dispatch time (async).
  Assignment dispatch(ClientId k, std::size_t planned_steps, std::uint64_t key);
  // Working clients with finish_at <= now, ascending id.
  std::vector<ClientId> due() const;
  // Working -> Idle/Offline, using the availability draw at now.
  void finish(ClientId k);
  // Dropped -> Idle/Offline, using the availability draw at now.
  void release(ClientId k);
  std::vector<ClientId> dropped_clients() const;

 private:
  void transition(ClientId k, StateKind to);
  StateKind availability_state(ClientId k) const;

  std::vector<ClientProfile> profiles_;
  std::vector<ClientState> states_;
  std::vector<std::size_t> participation_;
  std::uint64_t seed_;
  VirtualTime now_ = 0;
  TransitionObserver observer_;
};

}  // namespace fedsim::sim
