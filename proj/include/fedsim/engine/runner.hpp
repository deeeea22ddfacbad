#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "fedsim/algorithms/algorithms.hpp"
#include "fedsim/benchmark/task.hpp"
#include "fedsim/engine/engine.hpp"
#include "fedsim/engine/federation.hpp"
#include "fedsim/experiment/record.hpp"
#include "fedsim/simulator/profile.hpp"

namespace fedsim::engine {

// The tuple (algorithm, initial model, hyperparameters, task, simulator, seed).
struct RunnerConfig {
  std::string task;  // task directory
  std::uint64_t seed = 0;
  ModelConfig model;
  algo::AlgoConfig algo;  // algo.name is the algorithm
  EngineConfig engine;
  sim::SimulatorConfig simulator;
  bool stamp = false;  // record the wall-clock start time in the header

  bool operator==(const RunnerConfig&) const = default;
};

// {"task", "algorithm", "seed", "model", "algo", "engine", "simulator"}.
// Every field is written, so the JSON alone re-runs the runner exactly.
nlohmann::json to_json(const RunnerConfig& config);
// Absent fields keep their value in `base`; unknown keys are rejected.
RunnerConfig runner_config_from_json(const nlohmann::json& j, RunnerConfig base = {});

// First 16 hex digits of SHA-256 over the canonical config JSON.
std::string runner_hash(const RunnerConfig& config);

// Loads the task and runs to the horizon. Divergence ends the run with a
// diverged record; configuration errors propagate.
exp::Record run(const RunnerConfig& config, exp::RecordLogger* logger = nullptr);
exp::Record run(const RunnerConfig& config, const bench::LoadedTask& task,
                exp::RecordLogger* logger = nullptr);

}  // namespace fedsim::engine
