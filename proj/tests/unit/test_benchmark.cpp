#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fedsim/benchmark/csv.hpp"
#include "fedsim/benchmark/qp.hpp"
#include "fedsim/benchmark/registry.hpp"
#include "fedsim/benchmark/synthetic.hpp"
#include "fedsim/benchmark/task.hpp"
#include "fedsim/core/tolerances.hpp"
#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"
#include "helpers.hpp"

using namespace fedsim;
using namespace fedsim::bench;
using fedsim::testing::TempDir;

namespace {

// Gaussian elimination with partial pivoting; independent of the library solve.
std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

std::vector<double> oracle_optimum(const QPSpec& spec) {
  const std::size_t d = spec.dim;
  std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < spec.num_components(); ++i) {
    for (std::size_t r = 0; r < d; ++r) {
      b[r] -= spec.b[i][r];
      for (std::size_t c = 0; c < d; ++c) a[r][c] += spec.a[i](r, c);
    }
  }
  return solve_dense(a, b);
}

std::string write_file(const TempDir& dir, const std::string& name, const std::string& text) {
  const auto p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST_SUITE("benchmark") {

TEST_CASE("qp optimum of a single identity component with b = 0 is zero") {
  QPSpec spec;
  spec.dim = 3;
  core::Matrix eye(3, 3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
  spec.a.push_back(eye);
  spec.b.push_back({0.0, 0.0, 0.0});
  for (double v : qp_optimum(spec)) CHECK(v == 0.0);
}

TEST_CASE("qp optimum matches an independent dense solve and is stationary") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const QPSpec spec = gen_qp(8, 20, 10.0, seed);
    validate_qp(spec);
    const auto x = qp_optimum(spec);
    const auto oracle = oracle_optimum(spec);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
    for (double g : qp_total_gradient(spec, x)) CHECK(std::abs(g) < tol::kQpStationarity);
  }
}

TEST_CASE("qp with conditioning 1 produces exact identity components") {
  const QPSpec spec = gen_qp(3, 5, 1.0, 9);
  for (const auto& a : spec.a) {
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 5; ++c) CHECK(a(r, c) == (r == c ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("qp eigenvalues lie in [1, conditioning]") {
  const QPSpec spec = gen_qp(2, 6, 50.0, 4);
  // Rayleigh quotients of random directions are bounded by the spectrum.
  for (const auto& a : spec.a) {
    for (std::size_t trial = 0; trial < 20; ++trial) {
      std::vector<double> v(6);
      for (std::size_t i = 0; i < 6; ++i) v[i] = std::sin(1.0 + static_cast<double>(trial * 6 + i));
      double num = 0.0;
      double den = 0.0;
      for (std::size_t r = 0; r < 6; ++r) {
        den += v[r] * v[r];
        for (std::size_t c = 0; c < 6; ++c) num += v[r] * a(r, c) * v[c];
      }
      CHECK(num / den >= 1.0 - 1e-9);
      CHECK(num / den <= 50.0 + 1e-9);
    }
  }
}

TEST_CASE("qp rejects conditioning below 1 and empty dims") {
  CHECK_THROWS_AS(gen_qp(2, 2, 0.5, 0), ConfigError);
  CHECK_THROWS_AS(gen_qp(0, 2, 2.0, 0), ConfigError);
}

TEST_CASE("synthetic heterogeneity grows with alpha and beta") {
  SyntheticConfig low;
  low.num_clients = 10;
  SyntheticConfig high = low;
  high.alpha = 1.0;
  high.beta = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(model_divergence(gen_synthetic(low, seed)) < model_divergence(gen_synthetic(high, seed)));
  }
}

TEST_CASE("synthetic with one client has a constant owner and is deterministic") {
  SyntheticConfig c;
  c.num_clients = 1;
  c.samples_per_client = 30;
  const auto a = gen_synthetic(c, 5);
  REQUIRE(a.dataset.owner_ids);
  for (const auto& o : *a.dataset.owner_ids) CHECK(o == a.dataset.owner_ids->front());
  CHECK(gen_synthetic(c, 5).dataset == a.dataset);
  c.samples_per_client = 0;
  CHECK_THROWS_AS(gen_synthetic(c, 5), ConfigError);
}

TEST_CASE("csv numeric columns pass through") {
  std::istringstream in("x,y\n1.5,0\n-2,1\n");
  const Dataset d = load_csv(in, CsvSchema{"y", {}, TaskKind::classification, {}}, 0);
  REQUIRE(d.features.rows() == 2);
  REQUIRE(d.features.cols() == 1);
  CHECK(d.features(0, 0) == 1.5);
  CHECK(d.features(1, 0) == -2.0);
  CHECK(d.targets == std::vector<double>{0, 1});
}

TEST_CASE("csv categorical columns are one-hot in lexicographic order") {
  std::istringstream in("c,y\nb,1\na,0\nb,0\n");
  const Dataset d = load_csv(in, CsvSchema{"y", {"c"}, TaskKind::classification, {}}, 0);
  REQUIRE(d.features.cols() == 2);
  CHECK(d.feature_names == std::vector<std::string>{"c=a", "c=b"});
  CHECK(d.features(0, 0) == 0.0);
  CHECK(d.features(0, 1) == 1.0);
  CHECK(d.features(1, 0) == 1.0);
}

TEST_CASE("csv rows with a missing cell are dropped") {
  std::string text = "age,work,y\n";
  for (int i = 0; i < 10; ++i) {
    text += (i == 4 ? std::string("?") : std::to_string(20 + i)) + "," + (i % 2 ? "priv" : "gov") +
            "," + (i % 3 ? "<=50K" : ">50K") + "\n";
  }
  std::istringstream in(text);
  const Dataset d = load_csv(in, CsvSchema{"y", {"work"}, TaskKind::classification, {}}, 1);
  CHECK(d.num_samples() == 9);
  CHECK(d.num_classes == 2);
}

TEST_CASE("csv errors carry row and column") {
  {
    std::istringstream in("x,y\n1,0\n");
    CHECK_THROWS_AS(load_csv(in, CsvSchema{"z", {}, TaskKind::classification, {}}, 0),
                    IngestionError);
  }
  {
    std::istringstream in("");
    CHECK_THROWS_AS(load_csv(in, CsvSchema{"y", {}, TaskKind::classification, {}}, 0),
                    IngestionError);
  }
  std::istringstream in("x,w,y\n1,2,0\n3,abc,1\n");
  try {
    load_csv(in, CsvSchema{"y", {}, TaskKind::classification, {}}, 0);
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(e.row() == 3);
    CHECK(e.col() == 2);
  }
}

TEST_CASE("seeded split is 80/10/10, disjoint and covering") {
  const Split s = seeded_split(124, 3);
  CHECK(s.train.size() == 100);
  CHECK(s.val.size() == 12);
  CHECK(s.test.size() == 12);
  std::vector<int> seen(124, 0);
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    for (auto i : *part) ++seen[i];
  }
  for (int v : seen) CHECK(v == 1);
}

TEST_CASE("iid task over 100 train samples and 4 clients gives lists of 25") {
  TempDir dir;
  const auto out = testing::make_task(dir, "t", "synthetic:clients=4,samples=31,dim=5,classes=3",
                                      "iid:clients=4", 1);
  const LoadedTask t = load_task(out);
  REQUIRE(t.dataset.split.train.size() == 100);
  REQUIRE(t.task.partition.size() == 4);
  for (const auto& c : t.task.partition) CHECK(c.size() == 25);
}

TEST_CASE("gen_task is byte-identical across runs and refuses to overwrite") {
  TempDir dir;
  TempDir other;
  const auto a = testing::make_task(dir, "a", "qp:N=4,d=10", "iid", 1);
  const auto b = testing::make_task(other, "a", "qp:N=4,d=10", "iid", 1);
  CHECK(util::read_text_file(a / "task.json") == util::read_text_file(b / "task.json"));
  CHECK(util::read_text_file(a / "README.txt") == util::read_text_file(b / "README.txt"));
  CHECK_THROWS_AS(testing::make_task(dir, "a", "qp:N=4,d=10", "iid", 1), ExistsError);
  std::filesystem::create_directories(dir / "empty");
  CHECK_NOTHROW(testing::make_task(dir, "empty", "qp:N=4,d=10", "iid", 1));
}

TEST_CASE("task round-trips through json field for field") {
  TempDir dir;
  const auto out = testing::make_task(dir, "t", "synthetic:clients=3,samples=20,dim=4,classes=3",
                                      "gaussian_perturb:clients=3,sigma=0.2", 5);
  const LoadedTask t = load_task(out);
  CHECK(task_from_json(to_json(t.task)) == t.task);
  CHECK(task_from_json(nlohmann::json::parse(util::read_text_file(out / "task.json"))) == t.task);
}

TEST_CASE("load_task validates the partition instead of trusting it") {
  TempDir dir;
  const auto out = testing::make_task(dir, "t", "qp:N=4,d=3", "iid", 2);
  auto j = nlohmann::json::parse(util::read_text_file(out / "task.json"));
  j["partition"][1] = j["partition"][0];
  util::write_text_file(out / "task.json", j.dump(2));
  CHECK_THROWS_AS(load_task(out), LoadError);

  j["partition"][1] = nlohmann::json::array();
  util::write_text_file(out / "task.json", j.dump(2));
  CHECK_THROWS_AS(load_task(out), LoadError);
}

TEST_CASE("load_task detects dataset drift through the content hash") {
  TempDir dir;
  const auto out = testing::make_task(dir, "t", "qp:N=4,d=3", "iid", 2);
  auto j = nlohmann::json::parse(util::read_text_file(out / "task.json"));
  j["benchmark"]["sha256"] = std::string(64, '0');
  util::write_text_file(out / "task.json", j.dump(2));
  CHECK_THROWS_AS(load_task(out), LoadError);
}

TEST_CASE("dirichlet 0.3 task matches the recorded golden histograms") {
  TempDir dir;
  const auto out = testing::make_task(
      dir, "t", "synthetic:clients=4,samples=50,dim=5,classes=4", "dirichlet:alpha=0.3,clients=6",
      7);
  const LoadedTask t = load_task(out);
  const auto labels = t.dataset.labels();
  partition::Partition p;
  p.clients = t.task.partition;
  const auto hist = partition::label_histograms(p, labels, t.dataset.num_classes);
  const auto golden_path = testing::data_path("dirichlet_golden.json");
  if (std::getenv("FEDSIM_REGEN_GOLDEN") != nullptr) {
    util::write_text_file(golden_path, nlohmann::json{{"histograms", hist}}.dump(1) + "\n");
  }
  const auto golden = util::read_json_file(golden_path);
  CHECK(nlohmann::json(hist) == golden["histograms"]);
  CHECK(t.task.partitioner.alpha == 0.3);
}

TEST_CASE("registry lists built-ins and rejects unknown benchmarks") {
  auto& reg = BenchmarkRegistry::instance();
  CHECK(reg.contains("qp"));
  CHECK(reg.contains("synthetic"));
  CHECK(reg.contains("csv"));
  CHECK_THROWS_AS(reg.get("cifar10"), ConfigError);
  CHECK_THROWS_AS(reg.resolve(parse_benchmark_spec("qp:N=4,bogus=1")), ConfigError);
  CHECK_THROWS_AS(reg.resolve(parse_benchmark_spec("qp:conditioning=0.5")), ConfigError);
}

TEST_CASE("csv benchmark reads a file through the registry") {
  TempDir dir;
  std::string text = "a,b,label\n";
  for (int i = 0; i < 30; ++i) text += std::to_string(i) + "," + std::to_string(i % 7) + "," + (i % 2 ? "x" : "y") + "\n";
  const std::string path = write_file(dir, "d.csv", text);
  BenchmarkConfig bc{"csv", {{"path", path}, {"target", "label"}}};
  const auto out = dir / "task";
  gen_task(bc, partition::parse_partitioner_spec("iid:clients=3"), out, 1);
  const LoadedTask t = load_task(out);
  CHECK(t.task.num_clients == 3);
  CHECK(t.dataset.num_classes == 2);
}

}
