#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedsim/error.hpp"
#include "fedsim/partition/partition.hpp"

using namespace fedsim;
using namespace fedsim::partition;

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Balanced labels: sample i has class i % num_classes.
std::vector<std::size_t> cyclic_labels(std::size_t n, std::size_t num_classes) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % num_classes;
  return v;
}

void check_cover_disjoint(const Partition& p, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& c : p.clients) {
    CHECK(!c.empty());
    CHECK(std::is_sorted(c.begin(), c.end()));
    for (auto i : c) ++seen[i];
  }
  for (int v : seen) CHECK(v == 1);
}

std::size_t num_labels_present(const std::vector<std::size_t>& hist) {
  return static_cast<std::size_t>(std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }));
}

}  // namespace

TEST_SUITE("partition") {

TEST_CASE("iid splits evenly with the remainder on the lowest ids") {
  const auto idx = iota_indices(100);
  CHECK(partition_iid(idx, 4, 0.0, 1).sizes() == std::vector<std::size_t>{25, 25, 25, 25});
  const auto ten = iota_indices(10);
  CHECK(partition_iid(ten, 3, 0.0, 1).sizes() == std::vector<std::size_t>{4, 3, 3});
}

TEST_CASE("iid imbalance spreads client sizes") {
  const auto idx = iota_indices(1000);
  const auto sizes = partition_iid(idx, 10, 0.5, 3).sizes();
  double mean = 0.0;
  for (auto s : sizes) mean += static_cast<double>(s);
  mean /= 10.0;
  double var = 0.0;
  for (auto s : sizes) var += (static_cast<double>(s) - mean) * (static_cast<double>(s) - mean);
  CHECK(std::sqrt(var / 10.0) / mean > 0.0);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 1000);
}

TEST_CASE("iid refuses more clients than samples") {
  const auto idx = iota_indices(3);
  CHECK_THROWS_AS(partition_iid(idx, 4, 0.0, 1), PartitionError);
  CHECK_THROWS_AS(partition_iid(idx, 0, 0.0, 1), ConfigError);
}

TEST_CASE("dirichlet with one client owns everything") {
  const auto idx = iota_indices(50);
  const auto labels = cyclic_labels(50, 5);
  const auto p = partition_dirichlet(idx, labels, 1, 0.5, 2);
  REQUIRE(p.num_clients() == 1);
  CHECK(p.clients[0] == idx);
}

TEST_CASE("dirichlet with huge alpha approaches the global label mix") {
  const auto idx = iota_indices(2000);
  const auto labels = cyclic_labels(2000, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p = partition_dirichlet(idx, labels, 5, 10000.0, seed);
    CHECK(mean_label_tv_distance(label_histograms(p, labels, 4)) < 0.05);
  }
}

TEST_CASE("dirichlet label entropy grows with alpha") {
  const auto idx = iota_indices(2000);
  const auto labels = cyclic_labels(2000, 10);
  const std::vector<double> alphas{0.1, 1.0, 10.0, 10000.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<double> entropy;
    std::vector<double> tv;
    for (double a : alphas) {
      const auto h = label_histograms(partition_dirichlet(idx, labels, 10, a, seed), labels, 10);
      entropy.push_back(mean_label_entropy(h));
      tv.push_back(mean_label_tv_distance(h));
    }
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      CHECK(entropy[i] > entropy[i - 1]);
      CHECK(tv[i] < tv[i - 1]);
    }
  }
}

TEST_CASE("dirichlet rejects non-positive alpha") {
  const auto idx = iota_indices(10);
  const auto labels = cyclic_labels(10, 2);
  CHECK_THROWS_AS(partition_dirichlet(idx, labels, 2, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(partition_dirichlet(idx, labels, 2, -1.0, 1), ConfigError);
}

TEST_CASE("diversity 1 gives every client every class") {
  const auto idx = iota_indices(400);
  const auto labels = cyclic_labels(400, 10);
  const auto h = label_histograms(partition_diversity(idx, labels, 8, 1.0, 4), labels, 10);
  for (const auto& row : h) CHECK(num_labels_present(row) == 10);
}

TEST_CASE("diversity 0.2 over ten classes gives two classes per client") {
  const auto idx = iota_indices(1000);
  const auto labels = cyclic_labels(1000, 10);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = partition_diversity(idx, labels, 10, 0.2, seed);
    check_cover_disjoint(p, 1000);
    for (const auto& row : label_histograms(p, labels, 10)) CHECK(num_labels_present(row) == 2);
  }
}

TEST_CASE("diversity handles the tiny two-by-two case") {
  const auto idx = iota_indices(4);
  const std::vector<std::size_t> labels{0, 1, 0, 1};
  const auto p = partition_diversity(idx, labels, 2, 0.5, 1);
  check_cover_disjoint(p, 4);
  for (const auto& row : label_histograms(p, labels, 2)) CHECK(num_labels_present(row) == 1);
}

TEST_CASE("gaussian perturbation with sigma 0 equals iid") {
  const auto idx = iota_indices(60);
  const auto g = partition_gaussian_perturb(idx, 4, 0.0, 5, 9);
  CHECK(g == partition_iid(idx, 4, 0.0, 9));
  CHECK(!g.feature_noise);
}

TEST_CASE("gaussian perturbation gives each client its own noise vector") {
  const auto idx = iota_indices(60);
  const auto g = partition_gaussian_perturb(idx, 4, 1.0, 5, 9);
  REQUIRE(g.feature_noise);
  REQUIRE(g.feature_noise->size() == 4);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) CHECK((*g.feature_noise)[a] != (*g.feature_noise)[b]);
  }
  // Client k's noise depends only on (seed, k).
  const auto more = partition_gaussian_perturb(iota_indices(60), 6, 1.0, 5, 9);
  CHECK((*more.feature_noise)[2] == (*g.feature_noise)[2]);
}

TEST_CASE("gaussian perturbation noise has the requested scale") {
  const auto idx = iota_indices(500);
  const auto g = partition_gaussian_perturb(idx, 200, 0.5, 50, 3);
  double sum = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
  for (const auto& v : *g.feature_noise) {
    for (double x : v) {
      sum += x;
      sq += x * x;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::sqrt(sq / static_cast<double>(n) - mean * mean) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("id partitioner groups by owner in lexicographic order") {
  const auto idx = iota_indices(10);
  std::vector<std::string> owners;
  for (int i = 0; i < 10; ++i) owners.push_back("u" + std::to_string(i % 5));
  CHECK(partition_by_id(idx, owners).num_clients() == 5);

  const std::vector<std::string> same(4, "x");
  const auto one = partition_by_id(iota_indices(4), same);
  REQUIRE(one.num_clients() == 1);
  CHECK(one.clients[0].size() == 4);

  const std::vector<std::string> ba{"b", "a", "b"};
  const auto p = partition_by_id(iota_indices(3), ba);
  CHECK(p.clients[0] == std::vector<std::size_t>{1});
  CHECK(p.clients[1] == std::vector<std::size_t>{0, 2});
}

TEST_CASE("all partitioners cover the data disjointly and are deterministic") {
  const auto idx = iota_indices(300);
  const auto labels = cyclic_labels(300, 6);
  std::vector<std::string> owners;
  for (std::size_t i = 0; i < 300; ++i) owners.push_back(std::to_string(i % 7));
  PartitionInput input{idx, std::span<const std::size_t>(labels),
                       std::span<const std::string>(owners), 4};
  for (const char* spec : {"iid:clients=6", "iid:clients=6,imbalance_sigma=1",
                           "dirichlet:clients=6,alpha=0.1", "diversity:clients=6,div=0.3",
                           "gaussian_perturb:clients=6,sigma=0.1", "id"}) {
    CAPTURE(spec);
    auto cfg = parse_partitioner_spec(spec);
    cfg.seed = 11;
    const auto p = apply_partitioner(cfg, input);
    check_cover_disjoint(p, 300);
    CHECK_NOTHROW(validate_partition(p, 300));
    CHECK(apply_partitioner(cfg, input) == p);
  }
}

TEST_CASE("validate_partition rejects overlap, gaps in range and empty clients") {
  Partition p;
  p.clients = {{0, 1}, {1, 2}};
  CHECK_THROWS_AS(validate_partition(p, 3), PartitionError);
  p.clients = {{0, 1}, {}};
  CHECK_THROWS_AS(validate_partition(p, 3), PartitionError);
  p.clients = {{0, 5}};
  CHECK_THROWS_AS(validate_partition(p, 3), PartitionError);
}

TEST_CASE("partitioner specs parse, round-trip and reject unknown kinds") {
  auto cfg = parse_partitioner_spec("dirichlet:alpha=0.3,clients=6,seed=4");
  CHECK(cfg.kind == PartitionerKind::dirichlet);
  CHECK(cfg.alpha == 0.3);
  CHECK(cfg.num_clients == 6);
  CHECK(partitioner_from_json(to_json(cfg)) == cfg);
  CHECK_THROWS_AS(parse_partitioner_spec("shards"), ConfigError);
  CHECK_THROWS_AS(parse_partitioner_spec("vertical:clients=2"), UnsupportedError);
  CHECK_THROWS_AS(parse_partitioner_spec("dirichlet:alpha=-1"), ConfigError);
}

}
