#include <doctest.h>

#include <cmath>

#include "fedsim/engine/runner.hpp"
#include "fedsim/error.hpp"
#include "fedsim/simulator/simulator.hpp"
#include "fedsim/simulator/trace.hpp"
#include "fedsim/util/json_util.hpp"
#include "helpers.hpp"

using namespace fedsim;
using namespace fedsim::sim;
using fedsim::testing::TempDir;

namespace {

ClientProfile profile_with(LatencySpec latency, double drop = 0.0) {
  ClientProfile p;
  p.latency = std::move(latency);
  p.drop_prob = drop;
  return p;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("availability probability 1 keeps every client idle") {
  std::vector<ClientProfile> profiles(5);
  std::vector<ClientState> states(5);
  for (VirtualTime t = 0; t < 200; ++t) {
    tick_availability(profiles, states, t, 3);
    for (const auto& s : states) CHECK(s.kind == StateKind::idle);
  }
}

TEST_CASE("lognormal availability frequency matches each clipped draw") {
  SimulatorConfig cfg;
  cfg.availability = LogNormalAvailabilityModel{0.0, -std::log(0.1)};
  const auto profiles = build_profiles(cfg, 6, 21);
  std::vector<ClientState> states(profiles.size());
  std::vector<std::size_t> idle(profiles.size(), 0);
  constexpr VirtualTime kTicks = 100000;
  for (VirtualTime t = 0; t < kTicks; ++t) {
    tick_availability(profiles, states, t, 21);
    for (std::size_t k = 0; k < states.size(); ++k) idle[k] += states[k].kind == StateKind::idle;
  }
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    const double p = std::get<AvailabilityProbability>(profiles[k].availability).p;
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(std::abs(static_cast<double>(idle[k]) / kTicks - p) < 0.02);
  }
}

TEST_CASE("trace interval [5,10) is idle exactly at 5..9") {
  ClientProfile p;
  p.availability = AvailabilityIntervals{{{5, 10}}};
  std::vector<ClientProfile> profiles{p};
  std::vector<ClientState> states(1);
  for (VirtualTime t = 0; t < 20; ++t) {
    tick_availability(profiles, states, t, 0);
    CHECK((states[0].kind == StateKind::idle) == (t >= 5 && t <= 9));
  }
}

TEST_CASE("constant latency is taken verbatim") {
  Rng rng(1);
  CHECK(sample_latency(profile_with(ConstantLatency{3.0}), rng) == 3);
  CHECK(sample_latency(profile_with(ConstantLatency{4.0}), rng) == 4);
  CHECK(sample_latency(profile_with(ConstantLatency{2.2}), rng) == 3);
  CHECK(sample_latency(profile_with(ConstantLatency{0.3}), rng) == 1);
}

TEST_CASE("moment-matched lognormal latency has the requested mean") {
  const auto spec = LogNormalLatency::from_mean_var(200.0, 50.0);
  CHECK(spec.mu == doctest::Approx(std::log(200.0 * 200.0 / std::sqrt(200.0 * 200.0 + 50.0))));
  CHECK(spec.sigma * spec.sigma == doctest::Approx(std::log(1.0 + 50.0 / (200.0 * 200.0))));
  const auto profile = profile_with(spec);
  Rng rng(derive_seed(5, {1}));
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto v = sample_latency(profile, rng);
    CHECK_GE(v, 1u);
    sum += static_cast<double>(v);
  }
  const double mean = sum / 100000.0;
  // Rounding up adds about half a unit on top of the continuous mean.
  CHECK(mean >= 195.0);
  CHECK(mean <= 205.0);
}

TEST_CASE("uniform latency stays inside its rounded support") {
  Rng rng(2);
  const auto p = profile_with(UniformLatency{2.0, 5.0});
  for (int i = 0; i < 1000; ++i) {
    const auto v = sample_latency(p, rng);
    CHECK(v >= 2);
    CHECK(v <= 5);
  }
}

TEST_CASE("per-round latency is indexed by participation and clamps at the end") {
  Rng rng(0);
  const auto p = profile_with(PerRoundLatency{{3, 1, 4}});
  CHECK(sample_latency(p, rng, 0) == 3);
  CHECK(sample_latency(p, rng, 1) == 1);
  CHECK(sample_latency(p, rng, 2) == 4);
  CHECK(sample_latency(p, rng, 9) == 4);
}

TEST_CASE("completeness: full, uniform mean and the single-step case") {
  Rng rng(3);
  ClientProfile full;
  CHECK(sample_completeness(full, 7, rng) == 7);
  ClientProfile uni;
  uni.completeness = UniformStepsCompleteness{};
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const auto s = sample_completeness(uni, 5, rng);
    CHECK(s >= 1);
    CHECK(s <= 5);
    sum += static_cast<double>(s);
  }
  CHECK(std::abs(sum / 100000.0 - 3.0) < 0.05);
  for (int i = 0; i < 100; ++i) CHECK(sample_completeness(uni, 1, rng) == 1);
  CHECK_THROWS_AS(sample_completeness(uni, 0, rng), ConfigError);
}

TEST_CASE("drop rolls follow drop_prob") {
  Rng rng(4);
  const auto never = profile_with(ConstantLatency{1.0}, 0.0);
  const auto always = profile_with(ConstantLatency{1.0}, 1.0);
  const auto half = profile_with(ConstantLatency{1.0}, 0.5);
  std::size_t drops = 0;
  for (int i = 0; i < 100000; ++i) {
    CHECK_FALSE(roll_drop(never, rng));
    CHECK(roll_drop(always, rng));
    drops += roll_drop(half, rng);
  }
  CHECK(std::abs(static_cast<double>(drops) / 100000.0 - 0.5) < 0.01);
}

TEST_CASE("profile validation rejects out-of-range fields") {
  ClientProfile p;
  p.drop_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ClientProfile{};
  p.availability = AvailabilityProbability{-0.1};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = ClientProfile{};
  p.latency = UniformLatency{3.0, 2.0};
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("trace files parse into interval profiles") {
  const auto profiles = load_trace(testing::data_path("traces/valid.json"));
  REQUIRE(profiles.size() == 2);
  CHECK(std::get<AvailabilityIntervals>(profiles[1].availability).intervals ==
        std::vector<Interval>{{5, 10}, {20, 40}});
  CHECK(std::get<PerRoundLatency>(profiles[1].latency).values == std::vector<VirtualTime>{3, 1, 4});
  CHECK(std::get<ConstantLatency>(profiles[0].latency).value == 2.0);
}

TEST_CASE("trace with an empty client list is a config error") {
  CHECK_THROWS_AS(parse_trace(R"({"schema_version": 1, "clients": []})"), ConfigError);
}

TEST_CASE("trace with overlapping intervals is a parse error") {
  CHECK_THROWS_AS(
      parse_trace(R"({"schema_version": 1, "clients": [{"id": 0, "availability": [[0, 10], [5, 20]]}]})"),
      ParseError);
}

TEST_CASE("malformed trace fixtures report the offending line") {
  const auto expected = util::read_json_file(testing::data_path("traces/malformed_lines.json"));
  REQUIRE(expected.size() == 5);
  for (const auto& [file, line] : expected.items()) {
    CAPTURE(file);
    try {
      load_trace(testing::data_path("traces/malformed/" + file));
      FAIL("trace was accepted");
    } catch (const ParseError& e) {
      CHECK(e.line() == line.get<std::size_t>());
      CHECK(std::string(e.what()).find(file) != std::string::npos);
    }
  }
}

TEST_CASE("state machine only permits the legal transitions") {
  using S = StateKind;
  const std::vector<std::pair<S, S>> legal{{S::offline, S::idle},  {S::idle, S::offline},
                                           {S::idle, S::selected}, {S::selected, S::working},
                                           {S::selected, S::dropped}, {S::working, S::idle},
                                           {S::working, S::offline}, {S::dropped, S::idle},
                                           {S::dropped, S::offline}};
  const S all[] = {S::offline, S::idle, S::selected, S::working, S::dropped};
  for (S a : all) {
    for (S b : all) {
      const bool expect = std::find(legal.begin(), legal.end(), std::pair{a, b}) != legal.end();
      CHECK(is_legal_transition(a, b) == expect);
    }
  }
  Simulator sim(std::vector<ClientProfile>(1), 0);
  CHECK_THROWS_AS(sim.dispatch(0, 1, 0), Error);
}

TEST_CASE("simulator drives a client through select, dispatch and finish") {
  std::vector<ClientProfile> profiles{profile_with(ConstantLatency{3.0})};
  Simulator sim(profiles, 7);
  std::vector<std::pair<StateKind, StateKind>> seen;
  sim.set_observer([&](ClientId, StateKind from, StateKind to, VirtualTime) { seen.emplace_back(from, to); });
  sim.tick_availability();
  REQUIRE(sim.idle_clients() == std::vector<ClientId>{0});
  sim.select(0);
  const auto a = sim.dispatch(0, 5, 0);
  CHECK_FALSE(a.dropped);
  CHECK(a.latency == 3);
  CHECK(a.finish_at == 3);
  CHECK(a.steps == 5);
  CHECK(sim.participation(0) == 1);
  sim.advance(2);
  CHECK(sim.due().empty());
  sim.advance(1);
  CHECK(sim.due() == std::vector<ClientId>{0});
  sim.finish(0);
  CHECK(sim.state(0).kind == StateKind::idle);
  for (const auto& [from, to] : seen) CHECK(is_legal_transition(from, to));
}

TEST_CASE("simulator trajectories are seed-deterministic") {
  SimulatorConfig cfg;
  cfg.availability = ConstantAvailabilityModel{0.6};
  cfg.latency = LogNormalLatency{1.0, 0.5};
  cfg.drop_prob = 0.2;
  const auto profiles = build_profiles(cfg, 8, 1);
  auto trajectory = [&](std::uint64_t seed) {
    Simulator sim(profiles, seed);
    std::vector<std::tuple<ClientId, StateKind, StateKind, VirtualTime>> log;
    sim.set_observer([&](ClientId k, StateKind a, StateKind b, VirtualTime t) { log.emplace_back(k, a, b, t); });
    for (std::uint64_t round = 0; round < 50; ++round) {
      sim.tick_availability();
      for (auto k : sim.idle_clients()) {
        sim.select(k);
        sim.dispatch(k, 3, round);
      }
      sim.advance(2);
      for (auto k : sim.due()) sim.finish(k);
      for (auto k : sim.dropped_clients()) sim.release(k);
    }
    return log;
  };
  CHECK(trajectory(9) == trajectory(9));
  CHECK(trajectory(9) != trajectory(10));
}

TEST_CASE("a client's draws do not depend on other clients") {
  SimulatorConfig cfg;
  cfg.availability = ConstantAvailabilityModel{0.5};
  cfg.latency = UniformLatency{1.0, 6.0};
  cfg.drop_prob = 0.3;
  auto a = build_profiles(cfg, 3, 1);
  auto b = a;
  b[1].drop_prob = 0.9;
  b[2].latency = ConstantLatency{1.0};
  b[2].availability = AvailabilityProbability{1.0};
  auto run_client0 = [](const std::vector<ClientProfile>& profiles) {
    Simulator sim(profiles, 4);
    std::vector<std::pair<StateKind, VirtualTime>> log;
    sim.set_observer([&](ClientId k, StateKind, StateKind to, VirtualTime t) {
      if (k == 0) log.emplace_back(to, t);
    });
    for (VirtualTime t = 0; t < 300; ++t) {
      sim.tick_availability();
      for (auto k : sim.idle_clients()) {
        sim.select(k);
        sim.dispatch(k, 1, t);
      }
      sim.advance(1);
      for (auto k : sim.due()) sim.finish(k);
      for (auto k : sim.dropped_clients()) sim.release(k);
    }
    return log;
  };
  CHECK(run_client0(a) == run_client0(b));
}

TEST_CASE("single-client trace matches the equivalent synthetic scenario") {
  TempDir dir;
  const auto task = testing::make_task(dir, "t", "qp:N=1,d=4", "iid:clients=1", 3);
  util::write_text_file(dir / "trace.json", R"({
  "schema_version": 1,
  "clients": [{"id": 0, "availability": [[0, 100]], "latency": {"kind": "constant", "value": 2}}]
})");

  engine::RunnerConfig synthetic;
  synthetic.task = task.string();
  synthetic.seed = 5;
  synthetic.algo.rounds = 40;
  synthetic.algo.lr = 0.05;
  synthetic.engine.max_time = 100;
  synthetic.simulator.latency = ConstantLatency{2.0};
  engine::RunnerConfig trace = synthetic;
  trace.simulator = SimulatorConfig{};
  trace.simulator.kind = SimulatorKind::trace;
  trace.simulator.trace_path = (dir / "trace.json").string();

  const auto a = engine::run(synthetic);
  const auto b = engine::run(trace);
  REQUIRE(a.status == exp::RunStatus::completed);
  REQUIRE(b.status == exp::RunStatus::completed);
  REQUIRE(a.entries.size() == 41);
  CHECK(a.entries.back().virtual_time == 80);
  CHECK(a.entries == b.entries);
}

TEST_CASE("simulator config round-trips through json") {
  SimulatorConfig cfg;
  cfg.availability = LogNormalAvailabilityModel{0.0, 2.0};
  cfg.latency = LogNormalLatency::from_mean_var(200.0, 50.0);
  cfg.completeness = UniformStepsCompleteness{};
  cfg.drop_prob = 0.5;
  cfg.overrides[2] = ProfileOverride{0.3, ConstantLatency{4.0}, std::nullopt, 0.1};
  cfg.seed = 8;
  CHECK(simulator_config_from_json(to_json(cfg)) == cfg);
  CHECK_THROWS_AS(build_profiles(cfg, 2, 0), ConfigError);
}

}
