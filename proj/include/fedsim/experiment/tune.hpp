#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedsim/engine/runner.hpp"
#include "fedsim/experiment/parallel.hpp"
#include "fedsim/experiment/record.hpp"

namespace fedsim::exp {

struct Grid {
  // Sorted by key; the product varies the last key fastest.
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> params;
  std::string metric = "val_loss";
  bool maximize = false;
  bool best_over_rounds = false;  // default: final logged value
};

// Either {"params": {...}, "metric": "...", "mode": "min|max",
// "best_over_rounds": bool} or a bare {"name": [values...]} map.
Grid grid_from_json(const nlohmann::json& j);

// Resolves a grid key to a dotted runner path. Bare names are looked up as
// top-level runner keys, then under algo, engine and model.
std::string resolve_grid_key(const engine::RunnerConfig& base, const std::string& key);

std::vector<engine::RunnerConfig> expand_grid(const engine::RunnerConfig& base, const Grid& grid);

struct TuneResult {
  std::vector<engine::RunnerConfig> runners;
  std::vector<Record> records;
  std::size_t best_index = 0;
  double best_value = 0.0;
  const engine::RunnerConfig& best() const { return runners.at(best_index); }
};

// Runs the full product and picks the best selection metric among runners
// that completed with a finite value; ties go to the earlier runner. Throws
// TuningError when no runner qualifies.
TuneResult tune(const engine::RunnerConfig& base, const Grid& grid,
                const ParallelOptions& options = {});

}  // namespace fedsim::exp
