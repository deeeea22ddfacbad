#include "fedsim/partition/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::partition {

using nlohmann::json;

std::string_view to_string(PartitionerKind kind) {
  switch (kind) {
    case PartitionerKind::iid:
      return "iid";
    case PartitionerKind::diversity:
      return "diversity";
    case PartitionerKind::dirichlet:
      return "dirichlet";
    case PartitionerKind::gaussian_perturb:
      return "gaussian_perturb";
    case PartitionerKind::id:
      return "id";
    case PartitionerKind::vertical:
      return "vertical";
    case PartitionerKind::node_louvain:
      return "node_louvain";
  }
  return "?";
}

PartitionerKind parse_partitioner_kind(std::string_view name) {
  if (name == "iid") return PartitionerKind::iid;
  if (name == "diversity") return PartitionerKind::diversity;
  if (name == "dirichlet") return PartitionerKind::dirichlet;
  if (name == "gaussian_perturb" || name == "gaussian") return PartitionerKind::gaussian_perturb;
  if (name == "id") return PartitionerKind::id;
  if (name == "vertical") return PartitionerKind::vertical;
  if (name == "node_louvain" || name == "louvain") return PartitionerKind::node_louvain;
  throw ConfigError("unknown partitioner '" + std::string(name) +
                    "' (available: iid, diversity, dirichlet, gaussian_perturb, id)");
}

void PartitionerConfig::validate() const {
  if (kind == PartitionerKind::vertical || kind == PartitionerKind::node_louvain) {
    throw UnsupportedError("partitioner '" + std::string(to_string(kind)) +
                           "' is reserved but not supported");
  }
  if (kind == PartitionerKind::dirichlet && !(alpha > 0.0)) {
    throw ConfigError("dirichlet alpha must be > 0");
  }
  if (kind == PartitionerKind::diversity && !(div > 0.0 && div <= 1.0)) {
    throw ConfigError("diversity div must be in (0, 1]");
  }
  if (!(sigma_feature >= 0.0)) throw ConfigError("sigma_feature must be >= 0");
  if (!(imbalance_sigma >= 0.0)) throw ConfigError("imbalance_sigma must be >= 0");
}

json to_json(const PartitionerConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["num_clients"] = c.num_clients;
  if (c.seed) j["seed"] = *c.seed;
  switch (c.kind) {
    case PartitionerKind::iid:
      j["imbalance_sigma"] = c.imbalance_sigma;
      break;
    case PartitionerKind::dirichlet:
      j["alpha"] = c.alpha;
      break;
    case PartitionerKind::diversity:
      j["div"] = c.div;
      break;
    case PartitionerKind::gaussian_perturb:
      j["sigma_feature"] = c.sigma_feature;
      j["imbalance_sigma"] = c.imbalance_sigma;
      break;
    default:
      break;
  }
  return j;
}

PartitionerConfig partitioner_from_json(const json& j) {
  util::reject_unknown_keys(
      j, {"kind", "num_clients", "seed", "div", "alpha", "sigma_feature", "imbalance_sigma"},
      "partitioner");
  PartitionerConfig c;
  c.kind = parse_partitioner_kind(util::get_string(j, "kind", "iid"));
  const long long n = util::get_integer(j, "num_clients", 0);
  if (n < 0) throw ConfigError("num_clients must be >= 0");
  c.num_clients = static_cast<std::size_t>(n);
  c.div = util::get_number(j, "div", c.div);
  c.alpha = util::get_number(j, "alpha", c.alpha);
  c.sigma_feature = util::get_number(j, "sigma_feature", c.sigma_feature);
  c.imbalance_sigma = util::get_number(j, "imbalance_sigma", c.imbalance_sigma);
  if (j.contains("seed") && !j["seed"].is_null()) {
    c.seed = static_cast<std::uint64_t>(util::get_integer(j, "seed", 0));
  }
  c.validate();
  return c;
}

PartitionerConfig parse_partitioner_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  json j;
  j["kind"] = std::string(spec.substr(0, colon));
  if (colon != std::string_view::npos) {
    const json kv = util::parse_kv_list(spec.substr(colon + 1));
    for (const auto& item : kv.items()) {
      const std::string& k = item.key();
      if (k == "clients" || k == "num_clients") {
        j["num_clients"] = item.value();
      } else if (k == "sigma" || k == "sigma_feature") {
        j["sigma_feature"] = item.value();
      } else if (k == "imbalance" || k == "imbalance_sigma") {
        j["imbalance_sigma"] = item.value();
      } else {
        j[k] = item.value();
      }
    }
  }
  return partitioner_from_json(j);
}

std::vector<std::size_t> Partition::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(clients.size());
  for (const auto& c : clients) out.push_back(c.size());
  return out;
}

namespace {

void require_clients(std::size_t num_clients) {
  if (num_clients == 0) throw ConfigError("num_clients must be >= 1");
}

void sort_clients(Partition& p) {
  for (auto& c : p.clients) std::sort(c.begin(), c.end());
}

// Moves one sample from the largest client (lowest id on ties) into each empty client.
void repair_empty_clients(Partition& p) {
  for (std::size_t k = 0; k < p.clients.size(); ++k) {
    if (!p.clients[k].empty()) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < p.clients.size(); ++j) {
      if (p.clients[j].size() > p.clients[donor].size()) donor = j;
    }
    if (p.clients[donor].size() < 2) {
      throw PartitionError("not enough samples to give every client at least one");
    }
    p.clients[k].push_back(p.clients[donor].back());
    p.clients[donor].pop_back();
  }
}

// Groups positions by label, labels in ascending order.
std::map<std::size_t, std::vector<std::size_t>> group_by_label(
    std::span<const std::size_t> indices, std::span<const std::size_t> labels) {
  if (labels.size() != indices.size()) {
    throw PartitionError("labels and indices differ in length");
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < indices.size(); ++i) groups[labels[i]].push_back(indices[i]);
  return groups;
}

std::vector<std::size_t> iid_sizes(std::size_t n, std::size_t num_clients, double sigma,
                                   Rng& rng) {
  if (n < num_clients) {
    throw PartitionError("cannot split " + std::to_string(n) + " samples over " +
                         std::to_string(num_clients) + " clients");
  }
  const std::size_t rest = n - num_clients;
  std::vector<std::size_t> sizes(num_clients, 1);
  if (sigma == 0.0) {
    for (std::size_t k = 0; k < num_clients; ++k) {
      sizes[k] += rest / num_clients + (k < rest % num_clients ? 1 : 0);
    }
    return sizes;
  }
  std::lognormal_distribution<double> lognormal(0.0, sigma);
  std::vector<double> w(num_clients);
  for (double& v : w) v = lognormal(rng);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<double> frac(num_clients);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < num_clients; ++k) {
    const double quota = static_cast<double>(rest) * w[k] / total;
    const auto whole = static_cast<std::size_t>(std::floor(quota));
    sizes[k] += whole;
    assigned += whole;
    frac[k] = quota - static_cast<double>(whole);
  }
  std::vector<std::size_t> order(num_clients);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned + i < rest; ++i) sizes[order[i % num_clients]] += 1;
  return sizes;
}

}  // namespace

Partition partition_iid(std::span<const std::size_t> indices, std::size_t num_clients,
                        double imbalance_sigma, std::uint64_t seed) {
  require_clients(num_clients);
  if (!(imbalance_sigma >= 0.0)) throw ConfigError("imbalance_sigma must be >= 0");
  Rng rng = make_stream(seed, StreamTag::partition, {0});
  std::vector<std::size_t> shuffled(indices.begin(), indices.end());
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto sizes = iid_sizes(shuffled.size(), num_clients, imbalance_sigma, rng);

  Partition p;
  p.clients.resize(num_clients);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < num_clients; ++k) {
    p.clients[k].assign(shuffled.begin() + static_cast<std::ptrdiff_t>(cursor),
                        shuffled.begin() + static_cast<std::ptrdiff_t>(cursor + sizes[k]));
    cursor += sizes[k];
  }
  sort_clients(p);
  return p;
}

Partition partition_dirichlet(std::span<const std::size_t> indices,
                              std::span<const std::size_t> labels, std::size_t num_clients,
                              double alpha, std::uint64_t seed) {
  require_clients(num_clients);
  if (!(alpha > 0.0)) throw ConfigError("dirichlet alpha must be > 0");
  auto groups = group_by_label(indices, labels);
  if (groups.empty()) throw PartitionError("no samples to partition");

  Rng rng = make_stream(seed, StreamTag::partition, {1});
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Partition p;
  p.clients.resize(num_clients);
  std::vector<double> prop(num_clients);
  for (auto& [label, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    double total = 0.0;
    for (double& v : prop) {
      v = gamma(rng);
      total += v;
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      // All draws underflowed; the limit of Dir(alpha -> 0) is a one-hot vector.
      std::fill(prop.begin(), prop.end(), 0.0);
      prop[std::uniform_int_distribution<std::size_t>(0, num_clients - 1)(rng)] = 1.0;
      total = 1.0;
    }
    const double n = static_cast<double>(members.size());
    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t k = 0; k < num_clients; ++k) {
      cumulative += prop[k] / total;
      std::size_t end = k + 1 == num_clients
                            ? members.size()
                            : std::min(members.size(), static_cast<std::size_t>(
                                                           std::llround(cumulative * n)));
      end = std::max(end, begin);
      p.clients[k].insert(p.clients[k].end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                          members.begin() + static_cast<std::ptrdiff_t>(end));
      begin = end;
    }
  }
  repair_empty_clients(p);
  sort_clients(p);
  return p;
}

Partition partition_diversity(std::span<const std::size_t> indices,
                              std::span<const std::size_t> labels, std::size_t num_clients,
                              double div, std::uint64_t seed) {
  require_clients(num_clients);
  if (!(div > 0.0 && div <= 1.0)) throw ConfigError("diversity div must be in (0, 1]");
  auto groups = group_by_label(indices, labels);
  if (groups.empty()) throw PartitionError("no samples to partition");

  std::vector<std::size_t> classes;
  for (const auto& g : groups) classes.push_back(g.first);
  const std::size_t num_classes = classes.size();
  const std::size_t per_client = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(div * static_cast<double>(num_classes))), 1,
      num_classes);

  Rng rng = make_stream(seed, StreamTag::partition, {2});
  std::shuffle(classes.begin(), classes.end(), rng);

  std::map<std::size_t, std::vector<std::size_t>> holders;
  for (std::size_t k = 0; k < num_clients; ++k) {
    for (std::size_t j = 0; j < per_client; ++j) {
      holders[classes[(k * per_client + j) % num_classes]].push_back(k);
    }
  }

  Partition p;
  p.clients.resize(num_clients);
  for (auto& [label, members] : groups) {
    auto it = holders.find(label);
    if (it == holders.end()) continue;
    const auto& owners = it->second;
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t base = members.size() / owners.size();
    const std::size_t extra = members.size() % owners.size();
    std::size_t cursor = 0;
    for (std::size_t h = 0; h < owners.size(); ++h) {
      const std::size_t take = base + (h < extra ? 1 : 0);
      auto& dst = p.clients[owners[h]];
      dst.insert(dst.end(), members.begin() + static_cast<std::ptrdiff_t>(cursor),
                 members.begin() + static_cast<std::ptrdiff_t>(cursor + take));
      cursor += take;
    }
  }
  repair_empty_clients(p);
  sort_clients(p);
  return p;
}

Partition partition_gaussian_perturb(std::span<const std::size_t> indices,
                                     std::size_t num_clients, double sigma_feature,
                                     std::size_t feature_dim, std::uint64_t seed,
                                     double imbalance_sigma) {
  if (!(sigma_feature >= 0.0)) throw ConfigError("sigma_feature must be >= 0");
  Partition p = partition_iid(indices, num_clients, imbalance_sigma, seed);
  if (sigma_feature == 0.0) return p;
  std::vector<std::vector<double>> noise(num_clients, std::vector<double>(feature_dim));
  for (std::size_t k = 0; k < num_clients; ++k) {
    Rng rng = make_stream(seed, StreamTag::feature_noise, {k});
    std::normal_distribution<double> normal(0.0, sigma_feature);
    for (double& v : noise[k]) v = normal(rng);
  }
  p.feature_noise = std::move(noise);
  return p;
}

Partition partition_by_id(std::span<const std::size_t> indices,
                          std::span<const std::string> owner_ids) {
  if (owner_ids.size() != indices.size()) {
    throw PartitionError("owner ids and indices differ in length");
  }
  std::map<std::string, std::vector<std::size_t>> owners;
  for (std::size_t i = 0; i < indices.size(); ++i) owners[owner_ids[i]].push_back(indices[i]);
  if (owners.empty()) throw PartitionError("no samples to partition");
  Partition p;
  for (auto& [id, members] : owners) p.clients.push_back(std::move(members));
  sort_clients(p);
  return p;
}

Partition apply_partitioner(const PartitionerConfig& config, const PartitionInput& input) {
  config.validate();
  if (!config.seed) throw ConfigError("partitioner seed must be resolved before use");
  const std::uint64_t seed = *config.seed;
  auto need_labels = [&]() {
    if (!input.labels) {
      throw UnsupportedError("partitioner '" + std::string(to_string(config.kind)) +
                             "' needs class labels; benchmark has none");
    }
    return *input.labels;
  };
  switch (config.kind) {
    case PartitionerKind::iid:
      return partition_iid(input.indices, config.num_clients, config.imbalance_sigma, seed);
    case PartitionerKind::dirichlet:
      return partition_dirichlet(input.indices, need_labels(), config.num_clients, config.alpha,
                                 seed);
    case PartitionerKind::diversity:
      return partition_diversity(input.indices, need_labels(), config.num_clients, config.div,
                                 seed);
    case PartitionerKind::gaussian_perturb:
      if (input.feature_dim == 0 && config.sigma_feature > 0.0) {
        throw UnsupportedError("gaussian_perturb needs a feature-based benchmark");
      }
      return partition_gaussian_perturb(input.indices, config.num_clients, config.sigma_feature,
                                        input.feature_dim, seed, config.imbalance_sigma);
    case PartitionerKind::id:
      if (!input.owner_ids) {
        throw UnsupportedError("id partitioner needs per-sample owner ids; benchmark has none");
      }
      return partition_by_id(input.indices, *input.owner_ids);
    default:
      break;
  }
  throw UnsupportedError("partitioner '" + std::string(to_string(config.kind)) +
                         "' is not supported");
}

void validate_partition(const Partition& partition, std::size_t dataset_size) {
  if (partition.clients.empty()) throw PartitionError("partition has no clients");
  std::vector<char> seen(dataset_size, 0);
  for (std::size_t k = 0; k < partition.clients.size(); ++k) {
    const auto& c = partition.clients[k];
    if (c.empty()) throw PartitionError("client " + std::to_string(k) + " has no samples");
    for (std::size_t idx : c) {
      if (idx >= dataset_size) {
        throw PartitionError("client " + std::to_string(k) + " references index " +
                             std::to_string(idx) + " outside the dataset");
      }
      if (seen[idx]) {
        throw PartitionError("index " + std::to_string(idx) + " assigned to more than one client");
      }
      seen[idx] = 1;
    }
  }
  if (partition.feature_noise && partition.feature_noise->size() != partition.clients.size()) {
    throw PartitionError("feature noise must have one vector per client");
  }
}

std::vector<std::vector<std::size_t>> label_histograms(const Partition& partition,
                                                       std::span<const std::size_t> label_of,
                                                       std::size_t num_classes) {
  std::vector<std::vector<std::size_t>> out(partition.num_clients(),
                                            std::vector<std::size_t>(num_classes, 0));
  for (std::size_t k = 0; k < partition.num_clients(); ++k) {
    for (std::size_t idx : partition.clients[k]) out[k].at(label_of[idx]) += 1;
  }
  return out;
}

double mean_label_tv_distance(const std::vector<std::vector<std::size_t>>& histograms) {
  if (histograms.empty()) return 0.0;
  const std::size_t nc = histograms.front().size();
  std::vector<double> pooled(nc, 0.0);
  double total = 0.0;
  for (const auto& h : histograms) {
    for (std::size_t c = 0; c < nc; ++c) {
      pooled[c] += static_cast<double>(h[c]);
      total += static_cast<double>(h[c]);
    }
  }
  for (double& v : pooled) v /= total;
  double sum = 0.0;
  for (const auto& h : histograms) {
    const double n = static_cast<double>(std::accumulate(h.begin(), h.end(), std::size_t{0}));
    double tv = 0.0;
    for (std::size_t c = 0; c < nc; ++c) tv += std::abs(static_cast<double>(h[c]) / n - pooled[c]);
    sum += 0.5 * tv;
  }
  return sum / static_cast<double>(histograms.size());
}

double mean_label_entropy(const std::vector<std::vector<std::size_t>>& histograms) {
  if (histograms.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& h : histograms) {
    const double n = static_cast<double>(std::accumulate(h.begin(), h.end(), std::size_t{0}));
    double ent = 0.0;
    for (std::size_t count : h) {
      if (count == 0) continue;
      const double q = static_cast<double>(count) / n;
      ent -= q * std::log(q);
    }
    sum += ent;
  }
  return sum / static_cast<double>(histograms.size());
}

}  // namespace fedsim::partition
