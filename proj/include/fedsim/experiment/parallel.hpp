#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "fedsim/engine/runner.hpp"
#include "fedsim/experiment/record.hpp"

namespace fedsim::exp {

using Executor = std::function<Record(const engine::RunnerConfig&)>;

struct ParallelOptions {
  std::size_t num_workers = 1;
  std::size_t max_retries = 3;
  // Defaults to engine::run.
  Executor executor;
  // When set, each record is also written to <records_dir>/<runner_hash>.jsonl.
  std::optional<std::filesystem::path> records_dir;
};

// Runs every runner on a worker pool. ResourceExhausted and std::bad_alloc
// re-enqueue the runner at the back of the queue, at most `max_retries`
// times; any other failure yields an aborted record. Results are in input
// order and do not depend on the worker count.
std::vector<Record> run_parallel(const std::vector<engine::RunnerConfig>& runners,
                                 const ParallelOptions& options = {});

std::filesystem::path record_path(const std::filesystem::path& records_dir,
                                  const engine::RunnerConfig& runner);

// Record for a runner that never produced one.
Record aborted_record(const engine::RunnerConfig& runner, const std::string& error);

}  // namespace fedsim::exp
