#include "fedsim/experiment/tune.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::exp {

using nlohmann::json;

Grid grid_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object");
  Grid g;
  const json* params = &j;
  if (j.contains("params")) {
    util::reject_unknown_keys(j, {"params", "metric", "mode", "best_over_rounds"}, "grid");
    params = &j["params"];
    g.metric = util::get_string(j, "metric", g.metric);
    const std::string mode = util::get_string(j, "mode", "min");
    if (mode != "min" && mode != "max") throw ConfigError("grid mode must be 'min' or 'max'");
    g.maximize = mode == "max";
    g.best_over_rounds = util::get_bool(j, "best_over_rounds", false);
  }
  if (!params->is_object() || params->empty()) {
    throw ConfigError("grid needs at least one hyperparameter");
  }
  for (const auto& item : params->items()) {
    if (!item.value().is_array() || item.value().empty()) {
      throw ConfigError("grid values for '" + item.key() + "' must be a non-empty list");
    }
    g.params.emplace_back(item.key(), std::vector<json>(item.value().begin(), item.value().end()));
  }
  std::sort(g.params.begin(), g.params.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return g;
}

std::string resolve_grid_key(const engine::RunnerConfig& base, const std::string& key) {
  if (key.find('.') != std::string::npos) return key;
  const json j = engine::to_json(base);
  if (j.contains(key) && !j[key].is_object()) return key;
  for (const char* section : {"algo", "engine", "model"}) {
    if (j[section].contains(key)) return std::string(section) + "." + key;
  }
  throw ConfigError("unknown grid hyperparameter '" + key + "'");
}

std::vector<engine::RunnerConfig> expand_grid(const engine::RunnerConfig& base, const Grid& grid) {
  std::vector<std::string> paths;
  for (const auto& [key, values] : grid.params) paths.push_back(resolve_grid_key(base, key));
  const json base_json = engine::to_json(base);
  std::vector<engine::RunnerConfig> out;
  std::vector<std::size_t> idx(grid.params.size(), 0);
  while (true) {
    json j = base_json;
    for (std::size_t i = 0; i < idx.size(); ++i) util::set_dotted(j, paths[i], grid.params[i].second[idx[i]]);
    engine::RunnerConfig c = engine::runner_config_from_json(j);
    c.stamp = base.stamp;
    out.push_back(std::move(c));
    std::size_t pos = idx.size();
    while (pos > 0) {
      --pos;
      if (++idx[pos] < grid.params[pos].second.size()) break;
      idx[pos] = 0;
      if (pos == 0) return out;
    }
    if (idx.empty()) return out;
  }
}

TuneResult tune(const engine::RunnerConfig& base, const Grid& grid, const ParallelOptions& options) {
  TuneResult result;
  result.runners = expand_grid(base, grid);
  result.records = run_parallel(result.runners, options);

  std::optional<std::size_t> best;
  std::string statuses;
  bool metric_seen = false;
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const Record& r = result.records[i];
    statuses += (statuses.empty() ? "" : ", ") + std::to_string(i) + ":" +
                std::string(to_string(r.status));
    if (r.status != RunStatus::completed) continue;
    std::optional<double> value;
    if (grid.best_over_rounds) {
      for (const auto& e : r.entries) {
        auto m = e.metrics.find(grid.metric);
        if (m == e.metrics.end() || !m->second) continue;
        metric_seen = true;
        const double v = *m->second;
        if (!value || (grid.maximize ? v > *value : v < *value)) value = v;
      }
    } else {
      value = r.final_metric(grid.metric);
      if (value) metric_seen = true;
    }
    if (!value || !std::isfinite(*value)) continue;
    if (!best || (grid.maximize ? *value > result.best_value : *value < result.best_value)) {
      best = i;
      result.best_value = *value;
    }
  }
  if (!best) {
    if (!metric_seen && !result.records.empty()) {
      throw TuningError("no completed runner logged metric '" + grid.metric +
                        "' (statuses: " + statuses + ")");
    }
    throw TuningError("no runner completed with a finite '" + grid.metric +
                      "' (statuses: " + statuses + ")");
  }
  result.best_index = *best;
  return result;
}

}  // namespace fedsim::exp
