#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fedsim::partition {

enum class PartitionerKind { iid, diversity, dirichlet, gaussian_perturb, id, vertical, node_louvain };

std::string_view to_string(PartitionerKind kind);
PartitionerKind parse_partitioner_kind(std::string_view name);

struct PartitionerConfig {
  PartitionerKind kind = PartitionerKind::iid;
  // 0 means "use the benchmark's natural client count".
  std::size_t num_clients = 0;
  double div = 1.0;
  double alpha = 1.0;
  double sigma_feature = 0.0;
  double imbalance_sigma = 0.0;
  std::optional<std::uint64_t> seed;

  // Range checks; throws ConfigError (UnsupportedError for reserved kinds).
  void validate() const;

  bool operator==(const PartitionerConfig&) const = default;
};

nlohmann::json to_json(const PartitionerConfig& config);
PartitionerConfig partitioner_from_json(const nlohmann::json& j);
// "dirichlet:alpha=0.3,clients=10"
PartitionerConfig parse_partitioner_spec(std::string_view spec);

struct Partition {
  std::vector<std::vector<std::size_t>> clients;
  // gaussian_perturb only: additive noise vector per client.
  std::optional<std::vector<std::vector<double>>> feature_noise;

  std::size_t num_clients() const { return clients.size(); }
  std::vector<std::size_t> sizes() const;

  bool operator==(const Partition&) const = default;
};

// Quantity-skewed IID split: sizes follow normalized lognormal(0, imbalance_sigma)
// weights, every client gets at least one sample, and with sigma = 0 the
// remainder goes to the lowest client ids.
Partition partition_iid(std::span<const std::size_t> indices, std::size_t num_clients,
                        double imbalance_sigma, std::uint64_t seed);

// Per class, Dir(alpha) proportions over clients; class members are cut at
// rounded cumulative proportions. Empty clients take one sample from the
// largest client.
Partition partition_dirichlet(std::span<const std::size_t> indices,
                              std::span<const std::size_t> labels, std::size_t num_clients,
                              double alpha, std::uint64_t seed);

// Each client holds max(1, round(div * C)) classes assigned round-robin over a
// shuffled class list; a class's samples are split evenly among its holders.
Partition partition_diversity(std::span<const std::size_t> indices,
                              std::span<const std::size_t> labels, std::size_t num_clients,
                              double div, std::uint64_t seed);

// IID split plus e_k ~ N(0, sigma^2 I) per client, applied to features at load time.
Partition partition_gaussian_perturb(std::span<const std::size_t> indices,
                                     std::size_t num_clients, double sigma_feature,
                                     std::size_t feature_dim, std::uint64_t seed,
                                     double imbalance_sigma = 0.0);

// One client per distinct owner, ordered by sorted owner id.
Partition partition_by_id(std::span<const std::size_t> indices,
                          std::span<const std::string> owner_ids);

struct PartitionInput {
  std::span<const std::size_t> indices;
  std::optional<std::span<const std::size_t>> labels;  // aligned with indices
  std::optional<std::span<const std::string>> owner_ids;  // aligned with indices
  std::size_t feature_dim = 0;
};

// Dispatches on config.kind. num_clients and seed must already be resolved.
Partition apply_partitioner(const PartitionerConfig& config, const PartitionInput& input);

// Non-empty lists, indices below `dataset_size`, pairwise disjoint.
void validate_partition(const Partition& partition, std::size_t dataset_size);

// Statistics over client label histograms. `label_of` maps a dataset index to its class.
std::vector<std::vector<std::size_t>> label_histograms(const Partition& partition,
                                                       std::span<const std::size_t> label_of,
                                                       std::size_t num_classes);
// Mean over clients of TV(client label distribution, pooled distribution).
double mean_label_tv_distance(const std::vector<std::vector<std::size_t>>& histograms);
// Mean over clients of the Shannon entropy (nats) of the label distribution.
double mean_label_entropy(const std::vector<std::vector<std::size_t>>& histograms);

}  // namespace fedsim::partition
