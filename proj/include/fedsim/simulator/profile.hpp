#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fedsim/rng.hpp"

namespace fedsim::sim {

using VirtualTime = std::uint64_t;
using ClientId = std::size_t;

// Responsiveness. Real-valued draws are rounded up; every latency is >= 1.
struct ConstantLatency {
  double value = 1.0;
  bool operator==(const ConstantLatency&) const = default;
};
struct UniformLatency {
  double lo = 1.0;
  double hi = 1.0;
  bool operator==(const UniformLatency&) const = default;
};
struct LogNormalLatency {
  double mu = 0.0;
  double sigma = 0.0;
  // Moment matching: sigma^2 = ln(1 + var/mean^2), mu = ln(mean^2 / sqrt(mean^2 + var)).
  static LogNormalLatency from_mean_var(double mean, double var);
  bool operator==(const LogNormalLatency&) const = default;
};
// The i-th participation of a client waits values[min(i, size - 1)].
struct PerRoundLatency {
  std::vector<VirtualTime> values;
  bool operator==(const PerRoundLatency&) const = default;
};
using LatencySpec = std::variant<ConstantLatency, UniformLatency, LogNormalLatency, PerRoundLatency>;

// Completeness: how many of the planned local steps a client finishes.
struct FullCompleteness {
  bool operator==(const FullCompleteness&) const = default;
};
struct UniformStepsCompleteness {
  bool operator==(const UniformStepsCompleteness&) const = default;
};
using CompletenessSpec = std::variant<FullCompleteness, UniformStepsCompleteness>;

// Availability: memoryless per-unit probability, or [start, end) intervals.
struct AvailabilityProbability {
  double p = 1.0;
  bool operator==(const AvailabilityProbability&) const = default;
};
struct Interval {
  VirtualTime start = 0;
  VirtualTime end = 0;
  bool operator==(const Interval&) const = default;
};
struct AvailabilityIntervals {
  std::vector<Interval> intervals;  // sorted, non-overlapping
  bool contains(VirtualTime t) const;
  bool operator==(const AvailabilityIntervals&) const = default;
};
using Availability = std::variant<AvailabilityProbability, AvailabilityIntervals>;

struct ClientProfile {
  Availability availability = AvailabilityProbability{1.0};
  LatencySpec latency = ConstantLatency{1.0};
  CompletenessSpec completeness = FullCompleteness{};
  double drop_prob = 0.0;

  void validate() const;
  bool operator==(const ClientProfile&) const = default;
};

bool draw_available(const ClientProfile& profile, VirtualTime now, Rng& rng);
VirtualTime sample_latency(const ClientProfile& profile, Rng& rng, std::size_t participation = 0);
std::size_t sample_completeness(const ClientProfile& profile, std::size_t planned_steps, Rng& rng);
bool roll_drop(const ClientProfile& profile, Rng& rng);

nlohmann::json to_json(const LatencySpec& spec);
LatencySpec latency_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CompletenessSpec& spec);
CompletenessSpec completeness_from_json(const nlohmann::json& j);

// Population-level availability for the synthetic simulator.
struct ConstantAvailabilityModel {
  double p = 1.0;
  bool operator==(const ConstantAvailabilityModel&) const = default;
};
// p_k = clip(lognormal(mu, sigma), 0, 1), drawn once per client.
struct LogNormalAvailabilityModel {
  double mu = 0.0;
  double sigma = 0.0;
  bool operator==(const LogNormalAvailabilityModel&) const = default;
};
using AvailabilityModel = std::variant<ConstantAvailabilityModel, LogNormalAvailabilityModel>;

struct ProfileOverride {
  std::optional<double> p_avail;
  std::optional<LatencySpec> latency;
  std::optional<CompletenessSpec> completeness;
  std::optional<double> drop_prob;
  bool operator==(const ProfileOverride&) const = default;
};

enum class SimulatorKind { synthetic, trace };

struct SimulatorConfig {
  SimulatorKind kind = SimulatorKind::synthetic;
  AvailabilityModel availability = ConstantAvailabilityModel{1.0};
  LatencySpec latency = ConstantLatency{1.0};
  CompletenessSpec completeness = FullCompleteness{};
  double drop_prob = 0.0;
  std::map<ClientId, ProfileOverride> overrides;
  std::string trace_path;  // trace kind only
  std::optional<std::uint64_t> seed;  // defaults to the runner seed

  bool operator==(const SimulatorConfig&) const = default;
};

nlohmann::json to_json(const SimulatorConfig& config);
SimulatorConfig simulator_config_from_json(const nlohmann::json& j);

// Per-client profiles for `num_clients` task clients.
std::vector<ClientProfile> build_profiles(const SimulatorConfig& config, std::size_t num_clients,
                                          std::uint64_t seed);

}  // namespace fedsim::sim
