#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fedsim/core/matrix.hpp"
#include "fedsim/core/objective.hpp"
#include "fedsim/core/param_vector.hpp"

namespace fedsim::core {

enum class ModelKind { linreg, logreg, mlp1 };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Parameter layout, row-major blocks in this order:
//   linreg: w[d], b
//   logreg: W[C x d], b[C]
//   mlp1:   W1[H x d], b1[H], W2[C x H], b2[C]   (tanh hidden layer)
struct ModelShape {
  ModelKind kind = ModelKind::linreg;
  std::size_t input_dim = 1;
  std::size_t num_classes = 1;
  std::size_t hidden_dim = 0;

  std::size_t param_count() const;
  void validate() const;

  bool operator==(const ModelShape&) const = default;
};

struct Batch {
  Matrix features;
  std::vector<double> targets;  // class index for logreg/mlp1, real value for linreg

  std::size_t size() const { return targets.size(); }
};

class Model {
 public:
  Model(ModelShape shape, ParamVector params);

  static Model zeros(const ModelShape& shape);
  // N(0, scale^2) entries from a seeded stream.
  static Model random(const ModelShape& shape, double scale, std::uint64_t seed);

  const ModelShape& shape() const { return shape_; }
  const ParamVector& params() const { return params_; }

  // Replacement must keep the dimension.
  void set_params(ParamVector params);

 private:
  ModelShape shape_;
  ParamVector params_;
};

// Mean squared error (halved) for linreg, mean cross-entropy otherwise.
double loss(const Model& model, const Batch& batch);
ParamVector gradient(const Model& model, const Batch& batch);

// Class scores (logits) or the regression prediction for one feature row.
std::vector<double> predict(const ModelShape& shape, std::span<const double> params,
                            std::span<const double> features);

// Objective over a client's materialized batch.
class ModelObjective final : public Objective {
 public:
  ModelObjective(ModelShape shape, Batch data);

  std::size_t dim() const override { return shape_.param_count(); }
  std::size_t num_samples() const override { return data_.size(); }

  double loss(std::span<const double> params, std::span<const std::size_t> rows) const override;
  double loss_and_gradient(std::span<const double> params, std::span<const std::size_t> rows,
                           std::span<double> grad) const override;

  const ModelShape& shape() const { return shape_; }
  const Batch& data() const { return data_; }

 private:
  ModelShape shape_;
  Batch data_;
};

}  // namespace fedsim::core
