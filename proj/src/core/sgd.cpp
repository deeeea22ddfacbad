#include "fedsim/core/sgd.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::core {

std::size_t steps_per_epochs(std::size_t num_samples, std::size_t batch_size, std::size_t epochs) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  return epochs * ((num_samples + batch_size - 1) / batch_size);
}

ParamVector sgd_steps(const Objective& objective, ParamVector start, const SgdOptions& options) {
  if (options.lr < 0.0) throw ConfigError("learning rate must be non-negative");
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (start.dim() != objective.dim()) {
    throw ShapeError("start point has dimension " + std::to_string(start.dim()) +
                     ", objective expects " + std::to_string(objective.dim()));
  }
  if (options.prox && options.prox->anchor.dim() != start.dim()) {
    throw ShapeError("prox anchor dimension mismatch");
  }
  if (options.correction && options.correction->dim() != start.dim()) {
    throw ShapeError("gradient correction dimension mismatch");
  }
  if (options.steps == 0) return start;

  const std::size_t n = objective.num_samples();
  if (n == 0) throw ShapeError("objective has no samples");
  const std::size_t batch = std::min(options.batch_size, n);

  Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(StreamTag::training)}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;  // forces a shuffle before the first step

  ParamVector grad(start.dim());
  auto params = start.values();
  for (std::size_t step = 0; step < options.steps; ++step) {
    if (cursor >= n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    const std::size_t take = std::min(batch, n - cursor);
    std::span<const std::size_t> rows(order.data() + cursor, take);
    cursor += take;

    objective.loss_and_gradient(params, rows, grad.values());
    if (options.prox && options.prox->mu != 0.0) {
      const double mu = options.prox->mu;
      const auto& anchor = options.prox->anchor;
      for (std::size_t i = 0; i < grad.dim(); ++i) grad[i] += mu * (params[i] - anchor[i]);
    }
    if (options.correction) grad += *options.correction;
    for (std::size_t i = 0; i < grad.dim(); ++i) params[i] -= options.lr * grad[i];
  }
  return start;
}

Model sgd_steps(const Model& model, const Batch& data, const SgdOptions& options) {
  ModelObjective objective(model.shape(), data);
  return Model(model.shape(), sgd_steps(objective, model.params(), options));
}

}  // namespace fedsim::core
