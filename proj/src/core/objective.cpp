#include "fedsim/core/objective.hpp"

#include <numeric>
#include <vector>

namespace fedsim::core {

namespace {
std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}
}  // namespace

double Objective::full_loss(const ParamVector& params) const {
  const auto rows = all_rows(num_samples());
  return loss(params.values(), rows);
}

ParamVector Objective::full_gradient(const ParamVector& params) const {
  const auto rows = all_rows(num_samples());
  ParamVector grad(dim());
  loss_and_gradient(params.values(), rows, grad.values());
  return grad;
}

}  // namespace fedsim::core
