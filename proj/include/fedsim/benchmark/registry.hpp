#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fedsim/benchmark/dataset.hpp"

namespace fedsim::bench {

struct BenchmarkConfig {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const BenchmarkConfig&) const = default;
};

// "qp:N=4,d=10" -> {name: "qp", params: {N: 4, d: 10}}
BenchmarkConfig parse_benchmark_spec(std::string_view spec);

struct BenchmarkDefinition {
  // Fills defaults and rejects unknown keys.
  std::function<nlohmann::json(const nlohmann::json& params)> resolve;
  // Deterministic in (resolved params, seed).
  std::function<Dataset(const nlohmann::json& resolved, std::uint64_t seed)> generate;
  // Client count implied by the benchmark (0 when it has none).
  std::function<std::size_t(const nlohmann::json& resolved)> natural_clients;
};

// Name -> benchmark plugin. Built-ins: qp, synthetic, csv.
class BenchmarkRegistry {
 public:
  static BenchmarkRegistry& instance();

  void add(const std::string& name, BenchmarkDefinition definition);
  bool contains(const std::string& name) const;
  const BenchmarkDefinition& get(const std::string& name) const;
  std::vector<std::string> names() const;

  BenchmarkConfig resolve(const BenchmarkConfig& config) const;
  Dataset generate(const BenchmarkConfig& resolved, std::uint64_t seed) const;

 private:
  BenchmarkRegistry();
  std::map<std::string, BenchmarkDefinition> defs_;
};

}  // namespace fedsim::bench
