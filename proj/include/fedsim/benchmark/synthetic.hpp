#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fedsim/benchmark/dataset.hpp"
#include "fedsim/core/matrix.hpp"

namespace fedsim::bench {

// synthetic(alpha, beta): per client k,
//   u_k ~ N(0, alpha), W_k, b_k ~ N(u_k, 1)          (model heterogeneity)
//   B_k ~ N(0, beta),  v_k ~ N(B_k, 1)                (feature heterogeneity)
//   x ~ N(v_k, diag(j^-1.2)),  y = argmax(W_k x + b_k)
struct SyntheticConfig {
  double alpha = 0.0;
  double beta = 0.0;
  std::size_t num_clients = 10;
  std::size_t dim = 60;
  std::size_t num_classes = 10;
  std::size_t samples_per_client = 100;
  // Client sizes are samples_per_client * lognormal(0, samples_sigma), at least 1.
  double samples_sigma = 0.0;
};

struct SyntheticResult {
  Dataset dataset;  // owner_ids set to the generating client
  std::vector<core::Matrix> client_weights;
  std::vector<std::vector<double>> client_bias;
  std::vector<std::size_t> client_sizes;
};

SyntheticResult gen_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Mean squared Frobenius distance of each client's generating (W_k, b_k) from
// the clients' mean model.
double model_divergence(const SyntheticResult& result);

}  // namespace fedsim::bench
