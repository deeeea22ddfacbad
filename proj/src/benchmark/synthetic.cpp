#include "fedsim/benchmark/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::bench {

SyntheticResult gen_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.num_clients == 0) throw ConfigError("synthetic: clients must be >= 1");
  if (cfg.samples_per_client == 0) throw ConfigError("synthetic: samples must be positive");
  if (cfg.dim == 0 || cfg.num_classes < 2) throw ConfigError("synthetic: bad dim or classes");
  if (cfg.alpha < 0.0 || cfg.beta < 0.0 || cfg.samples_sigma < 0.0) {
    throw ConfigError("synthetic: alpha, beta and samples_sigma must be >= 0");
  }

  const std::size_t d = cfg.dim;
  const std::size_t nc = cfg.num_classes;
  std::vector<double> feature_sd(d);
  for (std::size_t j = 0; j < d; ++j) {
    feature_sd[j] = std::sqrt(std::pow(static_cast<double>(j + 1), -1.2));
  }

  SyntheticResult out;
  Dataset& ds = out.dataset;
  ds.name = "synthetic";
  ds.kind = TaskKind::classification;
  ds.num_classes = nc;
  ds.owner_ids.emplace();
  std::vector<double> x(d), z(nc);
  for (std::size_t k = 0; k < cfg.num_clients; ++k) {
    Rng rng = make_stream(seed, StreamTag::benchmark, {k});
    std::normal_distribution<double> normal(0.0, 1.0);
    const double u = std::sqrt(cfg.alpha) * normal(rng);
    const double big_b = std::sqrt(cfg.beta) * normal(rng);

    core::Matrix w(nc, d);
    for (double& v : w.data()) v = u + normal(rng);
    std::vector<double> bias(nc);
    for (double& v : bias) v = u + normal(rng);
    std::vector<double> centre(d);
    for (double& v : centre) v = big_b + normal(rng);

    std::size_t n = cfg.samples_per_client;
    if (cfg.samples_sigma > 0.0) {
      std::lognormal_distribution<double> size_dist(0.0, cfg.samples_sigma);
      n = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * size_dist(rng))));
    }

    char owner[32];
    std::snprintf(owner, sizeof owner, "client_%05zu", k);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t j = 0; j < d; ++j) x[j] = centre[j] + feature_sd[j] * normal(rng);
      for (std::size_t c = 0; c < nc; ++c) {
        double acc = bias[c];
        for (std::size_t j = 0; j < d; ++j) acc += w(c, j) * x[j];
        z[c] = acc;
      }
      const auto label = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
      ds.features.push_row(x);
      ds.targets.push_back(static_cast<double>(label));
      ds.owner_ids->push_back(owner);
    }
    out.client_weights.push_back(std::move(w));
    out.client_bias.push_back(std::move(bias));
    out.client_sizes.push_back(n);
  }
  for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
  ds.split = seeded_split(ds.targets.size(), seed);
  return out;
}

double model_divergence(const SyntheticResult& r) {
  const std::size_t k = r.client_weights.size();
  if (k == 0) return 0.0;
  const std::size_t nw = r.client_weights.front().data().size();
  const std::size_t nb = r.client_bias.front().size();
  std::vector<double> mean(nw + nb, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    auto w = r.client_weights[i].data();
    for (std::size_t j = 0; j < nw; ++j) mean[j] += w[j];
    for (std::size_t j = 0; j < nb; ++j) mean[nw + j] += r.client_bias[i][j];
  }
  for (double& v : mean) v /= static_cast<double>(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    auto w = r.client_weights[i].data();
    for (std::size_t j = 0; j < nw; ++j) total += (w[j] - mean[j]) * (w[j] - mean[j]);
    for (std::size_t j = 0; j < nb; ++j) {
      const double diff = r.client_bias[i][j] - mean[nw + j];
      total += diff * diff;
    }
  }
  return total / static_cast<double>(k);
}

}  // namespace fedsim::bench
