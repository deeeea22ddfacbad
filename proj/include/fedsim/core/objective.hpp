#pragma once

#include <cstddef>
#include <span>

#include "fedsim/core/param_vector.hpp"

namespace fedsim::core {

// A differentiable mean-over-samples objective owned by one client.
// `rows` selects local sample positions in [0, num_samples()).
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t num_samples() const = 0;

  virtual double loss(std::span<const double> params,
                      std::span<const std::size_t> rows) const = 0;

  // Writes the gradient of the mean loss over `rows` into `grad` and returns the loss.
  virtual double loss_and_gradient(std::span<const double> params,
                                   std::span<const std::size_t> rows,
                                   std::span<double> grad) const = 0;

  double full_loss(const ParamVector& params) const;
  ParamVector full_gradient(const ParamVector& params) const;
};

}  // namespace fedsim::core
