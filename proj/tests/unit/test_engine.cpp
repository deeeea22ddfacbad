#include <doctest.h>

#include <cmath>

#include "fedsim/engine/engine.hpp"
#include "fedsim/engine/runner.hpp"
#include "fedsim/error.hpp"
#include "fedsim/experiment/record.hpp"
#include "helpers.hpp"

using namespace fedsim;
using namespace fedsim::engine;
using fedsim::testing::TempDir;

namespace {

sim::ClientProfile latency_profile(double latency, double drop = 0.0, double p_avail = 1.0) {
  sim::ClientProfile p;
  p.latency = sim::ConstantLatency{latency};
  p.drop_prob = drop;
  p.availability = sim::AvailabilityProbability{p_avail};
  return p;
}

// A QP task with one component per client, loaded once per fixture.
struct QpFixture {
  TempDir dir;
  bench::LoadedTask task;
  Federation federation;

  explicit QpFixture(std::size_t clients, std::size_t dim = 4)
      : task(bench::load_task(testing::make_task(
            dir, "t", "qp:N=" + std::to_string(clients) + ",d=" + std::to_string(dim), "iid", 1))),
        federation(task, ModelConfig{}, 1) {}

  Engine make(const std::string& algorithm, std::vector<sim::ClientProfile> profiles,
              EngineConfig config = {}) {
    algo::AlgoConfig a;
    a.name = algorithm;
    a.lr = 0.1;
    return Engine(federation, algo::make_algorithm(a), sim::Simulator(std::move(profiles), 2),
                  config, 3);
  }
};

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("messages are dispatched to registered actions") {
  Network net;
  net.add_party(0);
  net.add_party(1).register_action("echo", [](const Message& m) {
    Message r("echo");
    r.set("res", m.get<std::string>("text") + "!");
    return r;
  });
  Message m("echo");
  m.set("text", "hi");
  const Message r = net.communicate(0, 1, m);
  CHECK(r.get<std::string>("res") == "hi!");
  CHECK(net.messages_sent() == 1);
  CHECK_THROWS_AS(net.communicate(0, 1, Message("forward")), DispatchError);
  CHECK_THROWS_AS(net.communicate(0, 7, m), DispatchError);
  CHECK_THROWS_AS(r.get<double>("res"), DispatchError);
  CHECK_THROWS_AS(r.get<std::string>("missing"), DispatchError);
}

TEST_CASE("a synchronous round lasts as long as its slowest responder") {
  QpFixture fx(2);
  auto engine = fx.make("fedavg", {latency_profile(3), latency_profile(4)});
  const auto out = engine.run_sync_round();
  CHECK(out.selected == std::vector<ClientId>{0, 1});
  CHECK(out.responded == std::vector<ClientId>{0, 1});
  CHECK(out.round_duration == 4);
  CHECK(out.virtual_time_end == 4);
  CHECK(out.aggregated);
}

TEST_CASE("one slow client stretches the round beyond a uniform one") {
  QpFixture fx(3);
  auto skewed = fx.make("fedavg", {latency_profile(2), latency_profile(2), latency_profile(5)});
  auto uniform = fx.make("fedavg", {latency_profile(3), latency_profile(3), latency_profile(3)});
  const auto a = skewed.run_sync_round();
  const auto b = uniform.run_sync_round();
  CHECK(a.round_duration == 5);
  CHECK(b.round_duration == 3);
  CHECK(a.round_duration > b.round_duration);
}

TEST_CASE("a fully dropped round waits the timeout and keeps the model") {
  QpFixture fx(2);
  EngineConfig cfg;
  cfg.drop_timeout = 1;
  auto engine = fx.make("fedavg", {latency_profile(3, 1.0), latency_profile(4, 1.0)}, cfg);
  const auto before = engine.state().global;
  const auto out = engine.run_sync_round();
  CHECK(out.dropped.size() == 2);
  CHECK(out.responded.empty());
  CHECK(out.round_duration == 1);
  CHECK_FALSE(out.aggregated);
  CHECK(engine.state().global == before);
  CHECK(engine.state().round == 0);
}

TEST_CASE("partial participation selects ceil(p N) idle clients") {
  QpFixture fx(10);
  algo::AlgoConfig a;
  a.proportion = 0.25;
  Engine engine(fx.federation, algo::make_algorithm(a),
                sim::Simulator(std::vector<sim::ClientProfile>(10), 1), EngineConfig{}, 1);
  for (int r = 0; r < 5; ++r) CHECK(engine.run_sync_round().selected.size() == 3);
}

TEST_CASE("async engine without available clients never aggregates") {
  QpFixture fx(2);
  EngineConfig cfg;
  cfg.mode = EngineMode::async;
  auto engine = fx.make("fedasync", {latency_profile(1, 0.0, 0.0), latency_profile(1, 0.0, 0.0)}, cfg);
  for (int t = 0; t < 100; ++t) {
    const auto tick = engine.run_async_step(10);
    CHECK(tick.arrivals.empty());
    CHECK(tick.dispatched.empty());
  }
  CHECK(engine.state().round == 0);
  CHECK(engine.simulator().now() == 100);
}

TEST_CASE("async engine aggregates on each arrival") {
  QpFixture fx(1);
  EngineConfig cfg;
  cfg.mode = EngineMode::async;
  cfg.max_concurrency = 1;
  auto engine = fx.make("fedasync", {latency_profile(2)}, cfg);
  std::vector<VirtualTime> arrivals;
  for (int t = 0; t < 7; ++t) {
    const auto tick = engine.run_async_step(100);
    for (const auto& a : tick.arrivals) {
      arrivals.push_back(tick.time);
      CHECK(a.staleness == 0);
    }
  }
  CHECK(arrivals == std::vector<VirtualTime>{2, 4, 6});
  CHECK(engine.state().round == 3);
}

TEST_CASE("async staleness counts aggregations since dispatch") {
  QpFixture fx(2);
  EngineConfig cfg;
  cfg.mode = EngineMode::async;
  auto engine = fx.make("fedasync", {latency_profile(2), latency_profile(3)}, cfg);
  std::vector<std::pair<ClientId, std::uint64_t>> seen;
  for (int t = 0; t < 4; ++t) {
    for (const auto& a : engine.run_async_step(100).arrivals) seen.emplace_back(a.client, a.staleness);
  }
  REQUIRE(seen.size() == 2);
  CHECK(seen[0] == std::pair<ClientId, std::uint64_t>{0, 0});
  CHECK(seen[1] == std::pair<ClientId, std::uint64_t>{1, 1});
}

TEST_CASE("mode and algorithm must agree") {
  QpFixture fx(2);
  EngineConfig async_cfg;
  async_cfg.mode = EngineMode::async;
  CHECK_THROWS_AS(fx.make("fedavg", {latency_profile(1), latency_profile(1)}, async_cfg),
                  UnsupportedError);
  EngineConfig sync_cfg;
  sync_cfg.mode = EngineMode::sync;
  CHECK_THROWS_AS(fx.make("fedasync", {latency_profile(1), latency_profile(1)}, sync_cfg),
                  UnsupportedError);
}

TEST_CASE("every observed transition in a heterogeneous run is legal") {
  QpFixture fx(6);
  std::vector<sim::ClientProfile> profiles;
  for (int k = 0; k < 6; ++k) {
    sim::ClientProfile p;
    p.availability = sim::AvailabilityProbability{0.3 + 0.1 * k};
    p.latency = sim::UniformLatency{1.0, 6.0};
    p.drop_prob = 0.2;
    p.completeness = sim::UniformStepsCompleteness{};
    profiles.push_back(p);
  }
  for (const char* name : {"fedavg", "fedasync"}) {
    EngineConfig cfg;
    cfg.mode = std::string(name) == "fedasync" ? EngineMode::async : EngineMode::sync;
    auto engine = fx.make(name, profiles, cfg);
    std::size_t transitions = 0;
    VirtualTime last = 0;
    engine.simulator().set_observer([&](ClientId, sim::StateKind a, sim::StateKind b, VirtualTime t) {
      CHECK(sim::is_legal_transition(a, b));
      CHECK(t >= last);
      last = t;
      ++transitions;
    });
    for (int i = 0; i < 60; ++i) {
      if (engine.is_async()) {
        engine.run_async_step(1000);
      } else {
        engine.run_sync_round();
      }
    }
    CHECK(transitions > 100);
  }
}

TEST_CASE("runner with zero rounds logs only the initial evaluation") {
  TempDir dir;
  RunnerConfig cfg;
  cfg.task = testing::make_task(dir, "t", "qp:N=3,d=4", "iid", 1).string();
  cfg.algo.rounds = 0;
  const auto rec = run(cfg);
  REQUIRE(rec.entries.size() == 1);
  CHECK(rec.entries[0].round == 0);
  CHECK(rec.entries[0].virtual_time == 0);
  CHECK(rec.status == exp::RunStatus::completed);
}

TEST_CASE("identical runner configs give byte-identical records") {
  TempDir dir;
  RunnerConfig cfg;
  cfg.task = testing::make_task(dir, "t", "synthetic:clients=5,samples=30,dim=6,classes=3",
                                "dirichlet:clients=5,alpha=0.5", 2).string();
  cfg.algo.name = "scaffold";
  cfg.algo.rounds = 15;
  cfg.algo.proportion = 0.6;
  cfg.simulator.availability = sim::ConstantAvailabilityModel{0.7};
  cfg.simulator.latency = sim::LogNormalLatency::from_mean_var(5.0, 4.0);
  cfg.simulator.drop_prob = 0.2;
  cfg.simulator.completeness = sim::UniformStepsCompleteness{};
  const auto a = exp::serialize_record(run(cfg));
  CHECK(a == exp::serialize_record(run(cfg)));
  cfg.seed = 1;
  CHECK(a != exp::serialize_record(run(cfg)));
}

TEST_CASE("sync and async records have strictly increasing virtual time") {
  TempDir dir;
  RunnerConfig cfg;
  cfg.task = testing::make_task(dir, "t", "qp:N=6,d=5", "iid", 2).string();
  cfg.algo.rounds = 30;
  cfg.simulator.latency = sim::UniformLatency{1.0, 8.0};
  cfg.simulator.availability = sim::ConstantAvailabilityModel{0.5};
  for (const char* name : {"fedavg", "fedprox", "scaffold", "fednova", "fedasync"}) {
    CAPTURE(name);
    cfg.algo.name = name;
    const auto rec = run(cfg);
    REQUIRE(rec.entries.size() > 2);
    for (std::size_t i = 1; i < rec.entries.size(); ++i) {
      CHECK(rec.entries[i].virtual_time > rec.entries[i - 1].virtual_time);
      CHECK(rec.entries[i].round > rec.entries[i - 1].round);
    }
  }
}

TEST_CASE("full-participation fedavg converges on the quadratic benchmark") {
  TempDir dir;
  RunnerConfig cfg;
  cfg.task = testing::make_task(dir, "t", "qp:N=4,d=10", "iid", 3).string();
  cfg.algo.rounds = 200;
  cfg.algo.lr = 0.1;
  cfg.algo.batch_size = 1;
  cfg.engine.eval_interval = 50;
  const auto rec = run(cfg);
  CHECK(rec.entries.size() == 5);
  CHECK(*rec.final_metric("rel_dist_to_opt") < 1e-3);
}

TEST_CASE("an exploding learning rate marks the record diverged") {
  TempDir dir;
  RunnerConfig cfg;
  cfg.task = testing::make_task(dir, "t", "qp:N=2,d=4,conditioning=10", "iid", 3).string();
  cfg.algo.rounds = 400;
  cfg.algo.lr = 5.0;
  const auto rec = run(cfg);
  CHECK(rec.status == exp::RunStatus::diverged);
  CHECK(rec.error.has_value());
}

TEST_CASE("engine config round-trips and validates") {
  EngineConfig cfg;
  cfg.mode = EngineMode::async;
  cfg.sample = SamplePolicy::full;
  cfg.max_concurrency = 4;
  CHECK(engine_config_from_json(to_json(cfg)) == cfg);
  CHECK_THROWS_AS(engine_config_from_json(nlohmann::json{{"mode", "hierarchical"}}), ConfigError);
  CHECK_THROWS_AS(engine_config_from_json(nlohmann::json{{"eval_interval", 0}}).validate(), ConfigError);
}

TEST_CASE("runner config hash is stable and sensitive") {
  RunnerConfig a;
  a.task = "x";
  RunnerConfig b = a;
  CHECK(runner_hash(a) == runner_hash(b));
  CHECK(runner_hash(a).size() == 16);
  b.algo.lr = 0.2;
  CHECK(runner_hash(a) != runner_hash(b));
  CHECK(runner_config_from_json(to_json(b)) == b);
}

}
