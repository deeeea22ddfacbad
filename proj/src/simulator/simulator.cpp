#include "fedsim/simulator/simulator.hpp"

#include <string>

#include "fedsim/error.hpp"

namespace fedsim::sim {

std::string_view to_string(StateKind kind) {
  switch (kind) {
    case StateKind::offline:
      return "offline";
    case StateKind::idle:
      return "idle";
    case StateKind::selected:
      return "selected";
    case StateKind::working:
      return "working";
    case StateKind::dropped:
      return "dropped";
  }
  return "?";
}

bool is_legal_transition(StateKind from, StateKind to) {
  using S = StateKind;
  switch (from) {
    case S::offline:
      return to == S::idle;
    case S::idle:
      return to == S::offline || to == S::selected;
    case S::selected:
      return to == S::working || to == S::dropped;
    case S::working:
    case S::dropped:
      return to == S::idle || to == S::offline;
  }
  return false;
}

namespace {

StateKind draw_state(const ClientProfile& p, ClientId k, VirtualTime now, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::availability, {k, now});
  return draw_available(p, now, rng) ? StateKind::idle : StateKind::offline;
}

void apply(std::vector<ClientState>& states, ClientId k, StateKind to, VirtualTime now,
           const TransitionObserver& observer) {
  const StateKind from = states[k].kind;
  if (from == to) return;
  if (!is_legal_transition(from, to)) {
    throw Error("illegal client transition " + std::string(to_string(from)) + " -> " +
                std::string(to_string(to)) + " for client " + std::to_string(k));
  }
  if (observer) observer(k, from, to, now);
  states[k].kind = to;
  if (to != StateKind::working) states[k].finish_at = 0;
}

}  // namespace

void tick_availability(const std::vector<ClientProfile>& profiles, std::vector<ClientState>& states,
                       VirtualTime now, std::uint64_t seed, const TransitionObserver& observer) {
  if (profiles.size() != states.size()) throw ShapeError("profiles and states differ in size");
  for (ClientId k = 0; k < states.size(); ++k) {
    const StateKind cur = states[k].kind;
    if (cur != StateKind::offline && cur != StateKind::idle) continue;
    apply(states, k, draw_state(profiles[k], k, now, seed), now, observer);
  }
}

Simulator::Simulator(std::vector<ClientProfile> profiles, std::uint64_t seed)
    : profiles_(std::move(profiles)),
      states_(profiles_.size()),
      participation_(profiles_.size(), 0),
      seed_(seed) {
  if (profiles_.empty()) throw ConfigError("simulator needs at least one client");
  for (const auto& p : profiles_) p.validate();
}

void Simulator::advance(VirtualTime dt) { now_ += dt; }

void Simulator::tick_availability() {
  sim::tick_availability(profiles_, states_, now_, seed_, observer_);
}

std::vector<ClientId> Simulator::idle_clients() const {
  std::vector<ClientId> out;
  for (ClientId k = 0; k < states_.size(); ++k) {
    if (states_[k].kind == StateKind::idle) out.push_back(k);
  }
  return out;
}

void Simulator::transition(ClientId k, StateKind to) { apply(states_, k, to, now_, observer_); }

StateKind Simulator::availability_state(ClientId k) const {
  return draw_state(profiles_[k], k, now_, seed_);
}

void Simulator::select(ClientId k) {
  if (states_.at(k).kind != StateKind::idle) {
    throw Error("client " + std::to_string(k) + " is not idle and cannot be selected");
  }
  transition(k, StateKind::selected);
}

Assignment Simulator::dispatch(ClientId k, std::size_t planned_steps, std::uint64_t key) {
  if (states_.at(k).kind != StateKind::selected) {
    throw Error("client " + std::to_string(k) + " must be selected before dispatch");
  }
  const ClientProfile& p = profiles_[k];
  Assignment a;
  a.client = k;
  Rng drop_rng = make_stream(seed_, StreamTag::drop, {k, key});
  a.dropped = roll_drop(p, drop_rng);
  const std::size_t nth = participation_[k]++;
  if (a.dropped) {
    transition(k, StateKind::dropped);
    return a;
  }
  Rng lat_rng = make_stream(seed_, StreamTag::latency, {k, key});
  a.latency = sample_latency(p, lat_rng, nth);
  Rng comp_rng = make_stream(seed_, StreamTag::completeness, {k, key});
  a.steps = planned_steps == 0 ? 0 : sample_completeness(p, planned_steps, comp_rng);
  a.finish_at = now_ + a.latency;
  transition(k, StateKind::working);
  states_[k].finish_at = a.finish_at;
  return a;
}

std::vector<ClientId> Simulator::due() const {
  std::vector<ClientId> out;
  for (ClientId k = 0; k < states_.size(); ++k) {
    if (states_[k].kind == StateKind::working && states_[k].finish_at <= now_) out.push_back(k);
  }
  return out;
}

void Simulator::finish(ClientId k) {
  if (states_.at(k).kind != StateKind::working) {
    throw Error("client " + std::to_string(k) + " is not working");
  }
  if (states_[k].finish_at > now_) {
    throw Error("client " + std::to_string(k) + " finished before its finish time");
  }
  transition(k, availability_state(k));
}

void Simulator::release(ClientId k) {
  if (states_.at(k).kind != StateKind::dropped) {
    throw Error("client " + std::to_string(k) + " is not dropped");
  }
  transition(k, availability_state(k));
}

std::vector<ClientId> Simulator::dropped_clients() const {
  std::vector<ClientId> out;
  for (ClientId k = 0; k < states_.size(); ++k) {
    if (states_[k].kind == StateKind::dropped) out.push_back(k);
  }
  return out;
}

}  // namespace fedsim::sim
