#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/core/matrix.hpp"

namespace fedsim::bench {

enum class TaskKind { regression, classification, quadratic };

std::string_view to_string(TaskKind kind);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  bool operator==(const Split&) const = default;
};

// Distributed quadratic benchmark: component i contributes
// f_i(x) = 1/2 x^T A_i x + b_i^T x with A_i symmetric positive definite.
struct QPSpec {
  std::size_t dim = 0;
  std::vector<core::Matrix> a;
  std::vector<std::vector<double>> b;

  std::size_t num_components() const { return a.size(); }
  bool operator==(const QPSpec&) const = default;
};

// Tabular datasets fill features/targets; the quadratic benchmark fills `qp`
// and treats each component as one sample.
struct Dataset {
  std::string name;
  TaskKind kind = TaskKind::classification;
  core::Matrix features;
  std::vector<double> targets;
  std::size_t num_classes = 0;
  std::vector<std::string> feature_names;
  Split split;
  std::optional<std::vector<std::string>> owner_ids;
  std::optional<QPSpec> qp;

  std::size_t num_samples() const;
  std::size_t feature_dim() const { return features.cols(); }

  // Class index per sample (classification only).
  std::vector<std::size_t> labels() const;

  // Splits disjoint and covering; targets valid for the task kind.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// Seeded 80/10/10 shuffle split; val and test get floor(n/10) each.
Split seeded_split(std::size_t n, std::uint64_t seed);

// SHA-256 over every field of the dataset.
std::string content_hash(const Dataset& dataset);

}  // namespace fedsim::bench
