#include "fedsim/engine/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <spdlog/spdlog.h>

#include "fedsim/core/sgd.hpp"
#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::engine {

using nlohmann::json;

void EngineConfig::validate() const {
  if (drop_timeout < 1) throw ConfigError("engine.drop_timeout must be >= 1");
  if (eval_interval < 1) throw ConfigError("engine.eval_interval must be >= 1");
  if (max_time < 1) throw ConfigError("engine.max_time must be >= 1");
}

namespace {

const char* mode_name(EngineMode m) {
  switch (m) {
    case EngineMode::sync:
      return "sync";
    case EngineMode::async:
      return "async";
    default:
      return "auto";
  }
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t fallback) {
  const long long v = util::get_integer(j, key, static_cast<long long>(fallback));
  if (v < 0) throw ConfigError(std::string("engine.") + key + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

json to_json(const EngineConfig& c) {
  return json{{"mode", mode_name(c.mode)},
              {"drop_timeout", c.drop_timeout},
              {"sample", c.sample == SamplePolicy::full ? "full" : "uniform-available"},
              {"max_time", c.max_time},
              {"eval_interval", c.eval_interval},
              {"max_concurrency", c.max_concurrency}};
}

EngineConfig engine_config_from_json(const json& j, EngineConfig c) {
  util::reject_unknown_keys(
      j, {"mode", "drop_timeout", "sample", "max_time", "eval_interval", "max_concurrency"},
      "engine");
  const std::string mode = util::get_string(j, "mode", mode_name(c.mode));
  if (mode == "auto") {
    c.mode = EngineMode::automatic;
  } else if (mode == "sync") {
    c.mode = EngineMode::sync;
  } else if (mode == "async") {
    c.mode = EngineMode::async;
  } else {
    throw ConfigError("engine.mode must be auto, sync or async");
  }
  const std::string sample = util::get_string(
      j, "sample", c.sample == SamplePolicy::full ? "full" : "uniform-available");
  if (sample == "uniform-available") {
    c.sample = SamplePolicy::uniform_available;
  } else if (sample == "full") {
    c.sample = SamplePolicy::full;
  } else {
    throw ConfigError("engine.sample must be uniform-available or full");
  }
  c.drop_timeout = get_u64(j, "drop_timeout", c.drop_timeout);
  c.max_time = get_u64(j, "max_time", c.max_time);
  c.eval_interval = get_u64(j, "eval_interval", c.eval_interval);
  c.max_concurrency = get_u64(j, "max_concurrency", c.max_concurrency);
  return c;
}

Engine::Engine(const Federation& federation, std::unique_ptr<algo::Algorithm> algorithm,
               sim::Simulator simulator, EngineConfig config, std::uint64_t seed)
    : federation_(federation),
      algorithm_(std::move(algorithm)),
      simulator_(std::move(simulator)),
      config_(config),
      seed_(seed),
      in_flight_(federation.num_clients()) {
  config_.validate();
  if (simulator_.num_clients() != federation_.num_clients()) {
    throw ConfigError("simulator has " + std::to_string(simulator_.num_clients()) +
                      " clients, task has " + std::to_string(federation_.num_clients()));
  }
  switch (config_.mode) {
    case EngineMode::automatic:
      async_ = algorithm_->is_async();
      break;
    case EngineMode::sync:
      async_ = false;
      break;
    case EngineMode::async:
      async_ = true;
      break;
  }
  if (async_ != algorithm_->is_async()) {
    throw UnsupportedError(std::string(algorithm_->name()) + " cannot run in " +
                           (async_ ? "async" : "sync") + " mode");
  }

  state_.global = federation_.initial_params();
  algorithm_->initialize(state_, federation_.num_clients());

  network_.add_party(kServerParty);
  for (ClientId k = 0; k < federation_.num_clients(); ++k) {
    network_.add_party(k).register_action("train", [this, k](const Message& m) {
      algo::LocalTask t;
      t.objective = &federation_.client(k);
      t.global = m.get<core::ParamVector>("model");
      t.steps = static_cast<std::size_t>(m.get<std::int64_t>("steps"));
      t.seed = std::bit_cast<std::uint64_t>(m.get<std::int64_t>("seed"));
      t.round_sent = static_cast<std::uint64_t>(m.get<std::int64_t>("round"));
      t.client_id = k;
      if (m.has("control")) t.server_control = m.get<core::ParamVector>("control");
      if (m.has("client_control")) t.client_control = m.get<core::ParamVector>("client_control");
      const algo::ClientUpdate u = algorithm_->local_train(t);
      Message r("update");
      r.set("delta", u.delta)
          .set("num_steps", static_cast<std::int64_t>(u.num_steps))
          .set("num_samples", static_cast<std::int64_t>(u.num_samples))
          .set("round_sent", static_cast<std::int64_t>(t.round_sent));
      if (u.aux) r.set("aux", *u.aux);
      return r;
    });
  }
}

std::size_t Engine::planned_steps(ClientId k) const {
  const auto& cfg = algorithm_->config();
  return core::steps_per_epochs(federation_.client(k).num_samples(), cfg.batch_size, cfg.epochs);
}

algo::ClientUpdate Engine::request_update(ClientId k, std::size_t steps, std::uint64_t key) {
  algo::LocalTask req;
  req.client_id = k;
  req.global = state_.global;
  req.steps = steps;
  req.seed = derive_seed(seed_, {static_cast<std::uint64_t>(StreamTag::training), k, key});
  req.round_sent = state_.round;
  algorithm_->prepare_request(state_, req);

  Message m("train");
  m.set("model", req.global)
      .set("steps", static_cast<std::int64_t>(req.steps))
      .set("seed", std::bit_cast<std::int64_t>(req.seed))
      .set("round", static_cast<std::int64_t>(req.round_sent));
  if (req.server_control) m.set("control", *req.server_control);
  if (req.client_control) m.set("client_control", *req.client_control);
  const Message r = network_.communicate(kServerParty, k, m);

  algo::ClientUpdate u;
  u.client_id = k;
  u.delta = r.get<core::ParamVector>("delta");
  u.num_steps = static_cast<std::size_t>(r.get<std::int64_t>("num_steps"));
  u.num_samples = static_cast<std::size_t>(r.get<std::int64_t>("num_samples"));
  u.round_sent = static_cast<std::uint64_t>(r.get<std::int64_t>("round_sent"));
  u.base = state_.global;
  if (r.has("aux")) u.aux = r.get<core::ParamVector>("aux");
  return u;
}

RoundOutcome Engine::run_sync_round() {
  if (async_) throw UnsupportedError("run_sync_round called on an asynchronous engine");
  RoundOutcome out;
  out.round = sync_round_ + 1;
  const VirtualTime wait_start = simulator_.now();
  std::vector<ClientId> idle;
  while (true) {
    if (simulator_.now() >= config_.max_time) {
      out.horizon_reached = true;
      out.wait = simulator_.now() - wait_start;
      out.virtual_time_end = simulator_.now();
      return out;
    }
    simulator_.tick_availability();
    idle = simulator_.idle_clients();
    if (!idle.empty()) break;
    simulator_.advance(1);
  }
  ++sync_round_;
  out.wait = simulator_.now() - wait_start;

  const std::size_t n = federation_.num_clients();
  std::size_t want = idle.size();
  if (config_.sample == SamplePolicy::uniform_available) {
    const double p = algorithm_->config().proportion;
    want = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
    want = std::clamp<std::size_t>(want, 1, n);
  }
  if (want < idle.size()) {
    Rng rng = make_stream(seed_, StreamTag::selection, {out.round});
    std::shuffle(idle.begin(), idle.end(), rng);
    idle.resize(want);
    std::sort(idle.begin(), idle.end());
  }
  out.selected = idle;

  for (ClientId k : out.selected) simulator_.select(k);
  std::vector<algo::ClientUpdate> updates;
  VirtualTime slowest = 0;
  for (ClientId k : out.selected) {
    const sim::Assignment a = simulator_.dispatch(k, planned_steps(k), out.round);
    if (a.dropped) {
      out.dropped.push_back(k);
      continue;
    }
    out.responded.push_back(k);
    slowest = std::max(slowest, a.latency);
    updates.push_back(request_update(k, a.steps, out.round));
  }
  out.round_duration = slowest + (out.dropped.empty() ? 0 : config_.drop_timeout);
  simulator_.advance(out.round_duration);
  for (ClientId k : simulator_.due()) simulator_.finish(k);
  for (ClientId k : simulator_.dropped_clients()) simulator_.release(k);
  out.virtual_time_end = simulator_.now();

  if (updates.empty()) {
    spdlog::warn("round {}: all {} selected clients dropped; skipping aggregation", out.round,
                 out.selected.size());
  } else {
    algorithm_->aggregate(state_, updates, n);
    out.aggregated = true;
  }
  return out;
}

AsyncTick Engine::run_async_step(std::uint64_t max_aggregations) {
  if (!async_) throw UnsupportedError("run_async_step called on a synchronous engine");
  AsyncTick tick;
  tick.time = simulator_.now();
  for (ClientId k : simulator_.due()) {
    simulator_.finish(k);
    algo::ClientUpdate u = std::move(*in_flight_[k]);
    in_flight_[k].reset();
    if (state_.round >= max_aggregations) continue;
    Arrival a;
    a.client = k;
    a.staleness = state_.round - u.round_sent;
    a.weight = algorithm_->apply_async(state_, u);
    tick.arrivals.push_back(a);
  }
  for (ClientId k : simulator_.dropped_clients()) simulator_.release(k);
  simulator_.tick_availability();

  std::size_t busy = 0;
  for (const auto& s : simulator_.states()) {
    if (s.kind == sim::StateKind::working) ++busy;
  }
  for (ClientId k : simulator_.idle_clients()) {
    if (config_.max_concurrency != 0 && busy >= config_.max_concurrency) break;
    simulator_.select(k);
    const sim::Assignment a = simulator_.dispatch(k, planned_steps(k), tick.time);
    if (a.dropped) {
      tick.dropped.push_back(k);
      continue;
    }
    in_flight_[k] = request_update(k, a.steps, tick.time);
    tick.dispatched.push_back(k);
    ++busy;
  }
  simulator_.advance(1);
  return tick;
}

}  // namespace fedsim::engine
