#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/benchmark/task.hpp"
#include "fedsim/core/model.hpp"
#include "fedsim/core/objective.hpp"

namespace fedsim::engine {

struct ModelConfig {
  std::string kind = "auto";  // auto | linreg | logreg | mlp1
  std::size_t hidden_dim = 16;
  std::string init = "zeros";  // zeros | random
  double init_scale = 0.1;
  std::optional<std::uint64_t> init_seed;  // defaults to a stream of the runner seed

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

// Per-client objectives plus the centralized evaluator for one task.
// Quadratic tasks optimize x directly; tabular tasks train a model whose
// shape follows from the dataset.
class Federation {
 public:
  Federation(const bench::LoadedTask& task, const ModelConfig& model, std::uint64_t seed);

  std::size_t num_clients() const { return clients_.size(); }
  std::size_t dim() const { return initial_.dim(); }
  const core::Objective& client(std::size_t k) const { return *clients_.at(k); }
  const core::ParamVector& initial_params() const { return initial_; }
  bool is_quadratic() const { return qp_optimum_.has_value(); }
  const std::optional<core::ParamVector>& qp_optimum() const { return qp_optimum_; }
  const std::optional<core::ModelShape>& model_shape() const { return shape_; }

  // Quadratic: train_loss, val_loss (both the global mean objective),
  // dist_to_opt, rel_dist_to_opt. Tabular: train_loss over the clients'
  // samples, and val_/test_ loss (plus accuracy for classification) on the
  // held-out splits when they are non-empty.
  std::map<std::string, double> evaluate(const core::ParamVector& params) const;

 private:
  std::vector<std::unique_ptr<core::Objective>> clients_;
  core::ParamVector initial_;
  std::optional<core::ModelShape> shape_;
  std::optional<core::ParamVector> qp_optimum_;
  std::optional<bench::QPSpec> qp_;
  std::optional<core::Batch> val_;
  std::optional<core::Batch> test_;
  bool classification_ = false;
};

}  // namespace fedsim::engine
