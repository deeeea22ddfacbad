#include "fedsim/engine/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"
#include "fedsim/util/sha256.hpp"
#include "fedsim/version.hpp"

namespace fedsim::engine {

using nlohmann::json;

json to_json(const RunnerConfig& c) {
  return json{{"task", c.task},
              {"algorithm", c.algo.name},
              {"seed", c.seed},
              {"model", to_json(c.model)},
              {"algo", algo::to_json(c.algo)},
              {"engine", to_json(c.engine)},
              {"simulator", sim::to_json(c.simulator)}};
}

RunnerConfig runner_config_from_json(const json& j, RunnerConfig c) {
  util::reject_unknown_keys(j, {"task", "algorithm", "seed", "model", "algo", "engine", "simulator"},
                            "runner");
  c.task = util::get_string(j, "task", c.task);
  c.algo.name = util::get_string(j, "algorithm", c.algo.name);
  const long long seed = util::get_integer(j, "seed", static_cast<long long>(c.seed));
  if (seed < 0) throw ConfigError("seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  if (j.contains("model")) c.model = model_config_from_json(j["model"], c.model);
  if (j.contains("algo")) c.algo = algo::algo_config_from_json(j["algo"], c.algo);
  if (j.contains("engine")) c.engine = engine_config_from_json(j["engine"], c.engine);
  if (j.contains("simulator")) c.simulator = sim::simulator_config_from_json(j["simulator"]);
  return c;
}

std::string runner_hash(const RunnerConfig& config) {
  return util::sha256_hex(to_json(config).dump()).substr(0, 16);
}

exp::Record run(const RunnerConfig& config, exp::RecordLogger* logger) {
  if (config.task.empty()) throw ConfigError("runner has no task path");
  return run(config, bench::load_task(config.task), logger);
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class EntryLog {
 public:
  EntryLog(exp::Record& record, exp::RecordLogger* logger) : record_(record), logger_(logger) {}

  // Returns false when a logged value was non-finite.
  bool log(std::uint64_t round, std::uint64_t time, const std::map<std::string, double>& metrics) {
    for (const auto& [name, value] : metrics) exp::log_metric(record_, round, time, name, value);
    if (logger_ != nullptr) logger_->on_entry(record_.entries.back());
    return record_.status != exp::RunStatus::diverged;
  }

 private:
  exp::Record& record_;
  exp::RecordLogger* logger_;
};

}  // namespace

exp::Record run(const RunnerConfig& config, const bench::LoadedTask& task,
                exp::RecordLogger* logger) {
  config.algo.validate();
  config.engine.validate();

  exp::Record record;
  record.config = to_json(config);
  if (config.stamp) record.start_timestamp = utc_now();
  record.artifact_version = kArtifactVersion;
  record.task_sha256 = task.task_sha256;

  const Federation federation(task, config.model, config.seed);
  auto profiles = sim::build_profiles(config.simulator, federation.num_clients(),
                                      config.simulator.seed.value_or(config.seed));
  Engine engine(federation, algo::make_algorithm(config.algo),
                sim::Simulator(std::move(profiles), config.simulator.seed.value_or(config.seed)),
                config.engine, config.seed);

  if (logger != nullptr) logger->on_header(record);
  EntryLog log(record, logger);
  const std::uint64_t rounds = config.algo.rounds;
  const std::uint64_t every = config.engine.eval_interval;
  auto metrics_for = [&](const core::ParamVector& params) {
    auto m = federation.evaluate(params);
    if (!params.all_finite()) m["train_loss"] = std::nan("");
    return m;
  };

  bool ok = log.log(0, 0, metrics_for(engine.state().global));
  if (!engine.is_async()) {
    for (std::uint64_t r = 1; ok && r <= rounds; ++r) {
      const RoundOutcome out = engine.run_sync_round();
      if (out.horizon_reached) break;
      if (r % every != 0 && r != rounds && engine.state().global.all_finite()) continue;
      auto m = metrics_for(engine.state().global);
      m["selected"] = static_cast<double>(out.selected.size());
      m["responded"] = static_cast<double>(out.responded.size());
      m["dropped"] = static_cast<double>(out.dropped.size());
      m["round_duration"] = static_cast<double>(out.round_duration);
      m["aggregations"] = static_cast<double>(engine.state().round);
      ok = log.log(r, out.virtual_time_end, m);
    }
  } else {
    std::uint64_t logged_round = 0;
    while (ok && engine.state().round < rounds &&
           engine.simulator().now() < config.engine.max_time) {
      const AsyncTick tick = engine.run_async_step(rounds);
      if (tick.arrivals.empty()) continue;
      const std::uint64_t round = engine.state().round;
      const bool due = round / every > logged_round / every || round >= rounds ||
                       !engine.state().global.all_finite();
      if (!due) continue;
      std::uint64_t max_staleness = 0;
      for (const auto& a : tick.arrivals) max_staleness = std::max(max_staleness, a.staleness);
      auto m = metrics_for(engine.state().global);
      m["aggregations"] = static_cast<double>(round);
      m["arrivals"] = static_cast<double>(tick.arrivals.size());
      m["max_staleness"] = static_cast<double>(max_staleness);
      ok = log.log(round, tick.time, m);
      logged_round = round;
    }
  }
  if (!ok) {
    record.status = exp::RunStatus::diverged;
    record.error = "non-finite metric; the model diverged";
  }
  if (logger != nullptr) logger->on_finish(record);
  return record;
}

}  // namespace fedsim::engine
