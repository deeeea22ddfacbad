#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/benchmark/dataset.hpp"
#include "fedsim/benchmark/registry.hpp"
#include "fedsim/partition/partition.hpp"

namespace fedsim::bench {

inline constexpr int kTaskSchemaVersion = 1;

// Static federated task. Holds sample indices and the benchmark regeneration
// config, never the data itself; the content hash detects dataset drift.
struct FederatedTask {
  int schema_version = kTaskSchemaVersion;
  std::string task_name;
  BenchmarkConfig benchmark;  // resolved params
  std::string benchmark_sha256;
  partition::PartitionerConfig partitioner;  // resolved clients and seed
  std::size_t num_clients = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> partition;
  std::optional<std::vector<std::vector<double>>> feature_noise;

  bool operator==(const FederatedTask&) const = default;
};

nlohmann::json to_json(const FederatedTask& task);
// Structural parse only; see validate_task for checks against the dataset.
FederatedTask task_from_json(const nlohmann::json& j);

// Every client list non-empty, indices valid, pairwise disjoint, inside the train split.
void validate_task(const FederatedTask& task, const Dataset& dataset);

// Generates the dataset, partitions its train split, and writes `out`
// (task.json + README.txt). Refuses a non-empty existing `out`.
FederatedTask gen_task(const BenchmarkConfig& benchmark,
                       const partition::PartitionerConfig& partitioner,
                       const std::filesystem::path& out, std::uint64_t seed);

struct LoadedTask {
  FederatedTask task;
  Dataset dataset;
  std::string task_sha256;  // hash of the task.json bytes
};

// Reads task.json, regenerates the dataset, and validates both.
LoadedTask load_task(const std::filesystem::path& dir);

// Client count, sizes, and per-client label histograms for humans.
std::string describe_task(const FederatedTask& task, const Dataset& dataset);

}  // namespace fedsim::bench
