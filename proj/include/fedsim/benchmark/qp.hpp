#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedsim/benchmark/dataset.hpp"
#include "fedsim/core/objective.hpp"

namespace fedsim::bench {

// Random SPD components A_i = Q diag(lambda) Q^T with eigenvalues log-uniform
// in [1, conditioning], b_i ~ N(0, I). conditioning == 1 gives A_i = I exactly.
QPSpec gen_qp(std::size_t num_components, std::size_t dim, double conditioning,
              std::uint64_t seed);

// Symmetry and minimum eigenvalue >= tol::kSpdEpsilon; throws ConfigError.
void validate_qp(const QPSpec& spec);

// x* = -(sum A_i)^-1 (sum b_i), by dense solve.
std::vector<double> qp_optimum(const QPSpec& spec);

// Sum over all components of grad f_i(x).
std::vector<double> qp_total_gradient(const QPSpec& spec, std::span<const double> x);

// Mean of f_i over all components.
double qp_objective(const QPSpec& spec, std::span<const double> x);

Dataset qp_dataset(QPSpec spec);

// Mean of the selected components' f_i.
class QuadraticObjective final : public core::Objective {
 public:
  QuadraticObjective(const QPSpec& spec, std::span<const std::size_t> components);

  std::size_t dim() const override { return dim_; }
  std::size_t num_samples() const override { return a_.size(); }

  double loss(std::span<const double> params, std::span<const std::size_t> rows) const override;
  double loss_and_gradient(std::span<const double> params, std::span<const std::size_t> rows,
                           std::span<double> grad) const override;

 private:
  std::size_t dim_;
  std::vector<core::Matrix> a_;
  std::vector<std::vector<double>> b_;
};

}  // namespace fedsim::bench
