#include "fedsim/benchmark/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fedsim/core/tolerances.hpp"
#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::bench {

namespace {

Eigen::MatrixXd to_eigen(const core::Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

core::Matrix from_eigen(const Eigen::MatrixXd& m) {
  core::Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
  }
  return out;
}

double quad_form(const core::Matrix& a, std::span<const double> b, std::span<const double> x,
                 std::span<double> grad_accum) {
  const std::size_t d = x.size();
  double value = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    auto row = a.row(r);
    double ax = 0.0;
    for (std::size_t c = 0; c < d; ++c) ax += row[c] * x[c];
    value += 0.5 * x[r] * ax + b[r] * x[r];
    if (!grad_accum.empty()) grad_accum[r] += ax + b[r];
  }
  return value;
}

}  // namespace

QPSpec gen_qp(std::size_t num_components, std::size_t dim, double conditioning,
              std::uint64_t seed) {
  if (num_components == 0 || dim == 0) throw ConfigError("qp needs N >= 1 and d >= 1");
  if (!(conditioning >= 1.0)) throw ConfigError("qp conditioning must be >= 1");
  QPSpec spec;
  spec.dim = dim;
  const auto d = static_cast<Eigen::Index>(dim);
  for (std::size_t i = 0; i < num_components; ++i) {
    Rng rng = make_stream(seed, StreamTag::benchmark, {i});
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) g(r, c) = normal(rng);
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd lambda(d);
    for (Eigen::Index k = 0; k < d; ++k) lambda(k) = std::exp(unit(rng) * std::log(conditioning));

    Eigen::MatrixXd a;
    if (conditioning == 1.0) {
      a = Eigen::MatrixXd::Identity(d, d);
    } else {
      Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
      a = q * lambda.asDiagonal() * q.transpose();
      a = 0.5 * (a + a.transpose()).eval();
    }
    std::vector<double> b(dim);
    for (double& v : b) v = normal(rng);
    spec.a.push_back(from_eigen(a));
    spec.b.push_back(std::move(b));
  }
  validate_qp(spec);
  return spec;
}

void validate_qp(const QPSpec& spec) {
  if (spec.a.size() != spec.b.size() || spec.a.empty()) {
    throw ConfigError("qp spec needs matching, non-empty A and b lists");
  }
  for (std::size_t i = 0; i < spec.a.size(); ++i) {
    const auto& a = spec.a[i];
    if (a.rows() != spec.dim || a.cols() != spec.dim || spec.b[i].size() != spec.dim) {
      throw ShapeError("qp component " + std::to_string(i) + " has the wrong shape");
    }
    const Eigen::MatrixXd m = to_eigen(a);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw ConfigError("qp component " + std::to_string(i) + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < tol::kSpdEpsilon) {
      throw ConfigError("qp component " + std::to_string(i) + " is not positive definite");
    }
  }
}

std::vector<double> qp_optimum(const QPSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Eigen::MatrixXd a_sum = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b_sum = Eigen::VectorXd::Zero(d);
  for (std::size_t i = 0; i < spec.num_components(); ++i) {
    a_sum += to_eigen(spec.a[i]);
    for (Eigen::Index k = 0; k < d; ++k) b_sum(k) += spec.b[i][static_cast<std::size_t>(k)];
  }
  const Eigen::VectorXd x = a_sum.ldlt().solve(-b_sum);
  return {x.data(), x.data() + x.size()};
}

std::vector<double> qp_total_gradient(const QPSpec& spec, std::span<const double> x) {
  std::vector<double> g(spec.dim, 0.0);
  for (std::size_t i = 0; i < spec.num_components(); ++i) quad_form(spec.a[i], spec.b[i], x, g);
  return g;
}

double qp_objective(const QPSpec& spec, std::span<const double> x) {
  if (x.size() != spec.dim) throw ShapeError("qp objective: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < spec.num_components(); ++i) {
    total += quad_form(spec.a[i], spec.b[i], x, {});
  }
  return total / static_cast<double>(spec.num_components());
}

Dataset qp_dataset(QPSpec spec) {
  Dataset d;
  d.name = "qp";
  d.kind = TaskKind::quadratic;
  d.split.train.resize(spec.num_components());
  for (std::size_t i = 0; i < spec.num_components(); ++i) d.split.train[i] = i;
  d.qp = std::move(spec);
  return d;
}

QuadraticObjective::QuadraticObjective(const QPSpec& spec,
                                       std::span<const std::size_t> components)
    : dim_(spec.dim) {
  for (std::size_t c : components) {
    if (c >= spec.num_components()) throw ShapeError("qp component index out of range");
    a_.push_back(spec.a[c]);
    b_.push_back(spec.b[c]);
  }
}

double QuadraticObjective::loss(std::span<const double> params,
                                std::span<const std::size_t> rows) const {
  if (params.size() != dim_) throw ShapeError("qp objective: dimension mismatch");
  if (rows.empty()) throw ShapeError("batch must contain at least one sample");
  double total = 0.0;
  for (std::size_t r : rows) total += quad_form(a_.at(r), b_.at(r), params, {});
  return total / static_cast<double>(rows.size());
}

double QuadraticObjective::loss_and_gradient(std::span<const double> params,
                                             std::span<const std::size_t> rows,
                                             std::span<double> grad) const {
  if (params.size() != dim_ || grad.size() != dim_) {
    throw ShapeError("qp objective: dimension mismatch");
  }
  if (rows.empty()) throw ShapeError("batch must contain at least one sample");
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t r : rows) total += quad_form(a_.at(r), b_.at(r), params, grad);
  const double n = static_cast<double>(rows.size());
  for (double& g : grad) g /= n;
  return total / n;
}

}  // namespace fedsim::bench
