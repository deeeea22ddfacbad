#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "fedsim/core/model.hpp"
#include "fedsim/core/objective.hpp"
#include "fedsim/core/param_vector.hpp"

namespace fedsim::core {

struct ProxTerm {
  double mu = 0.0;
  ParamVector anchor;
};

struct SgdOptions {
  double lr = 0.1;
  std::size_t steps = 0;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  // Adds mu * (params - anchor) to every gradient.
  std::optional<ProxTerm> prox;
  // Constant added to every gradient (control-variate correction).
  std::optional<ParamVector> correction;
};

// Number of minibatch steps in `epochs` passes over `num_samples` samples.
std::size_t steps_per_epochs(std::size_t num_samples, std::size_t batch_size, std::size_t epochs);

// Plain minibatch SGD. Sample order is reshuffled at the start of every
// epoch from a stream keyed by `seed`; the last batch of an epoch may be short.
ParamVector sgd_steps(const Objective& objective, ParamVector start, const SgdOptions& options);

Model sgd_steps(const Model& model, const Batch& data, const SgdOptions& options);

}  // namespace fedsim::core
