#include "fedsim/core/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"

namespace fedsim::core {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linreg:
      return "linreg";
    case ModelKind::logreg:
      return "logreg";
    case ModelKind::mlp1:
      return "mlp1";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linreg") return ModelKind::linreg;
  if (name == "logreg") return ModelKind::logreg;
  if (name == "mlp1") return ModelKind::mlp1;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::size_t ModelShape::param_count() const {
  switch (kind) {
    case ModelKind::linreg:
      return input_dim + 1;
    case ModelKind::logreg:
      return num_classes * (input_dim + 1);
    case ModelKind::mlp1:
      return hidden_dim * (input_dim + 1) + num_classes * (hidden_dim + 1);
  }
  return 0;
}

void ModelShape::validate() const {
  if (input_dim == 0) throw ShapeError("model input_dim must be positive");
  if (kind != ModelKind::linreg && num_classes < 2) {
    throw ShapeError("classification models need at least 2 classes");
  }
  if (kind == ModelKind::mlp1 && hidden_dim == 0) throw ShapeError("mlp1 needs hidden_dim > 0");
}

Model::Model(ModelShape shape, ParamVector params) : shape_(shape), params_(std::move(params)) {
  shape_.validate();
  if (params_.dim() != shape_.param_count()) {
    throw ShapeError("model expects " + std::to_string(shape_.param_count()) +
                     " parameters, got " + std::to_string(params_.dim()));
  }
}

Model Model::zeros(const ModelShape& shape) { return Model(shape, ParamVector(shape.param_count())); }

Model Model::random(const ModelShape& shape, double scale, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::model_init);
  std::normal_distribution<double> normal(0.0, scale);
  ParamVector p(shape.param_count());
  for (double& v : p.values()) v = normal(rng);
  return Model(shape, std::move(p));
}

void Model::set_params(ParamVector params) {
  if (params.dim() != params_.dim()) throw ShapeError("model parameter dimension is fixed");
  params_ = std::move(params);
}

namespace {

void check_inputs(const ModelShape& shape, std::span<const double> params, const Matrix& x,
                  std::span<const double> y) {
  if (params.size() != shape.param_count()) {
    throw ShapeError("parameter count " + std::to_string(params.size()) + " does not match model (" +
                     std::to_string(shape.param_count()) + ")");
  }
  if (x.rows() != y.size()) throw ShapeError("feature rows and targets differ in length");
  if (x.rows() > 0 && x.cols() != shape.input_dim) {
    throw ShapeError("batch has " + std::to_string(x.cols()) + " features, model expects " +
                     std::to_string(shape.input_dim));
  }
}

std::size_t class_of(const ModelShape& shape, double target) {
  const auto c = static_cast<std::size_t>(target);
  if (target < 0.0 || static_cast<double>(c) != target || c >= shape.num_classes) {
    throw ShapeError("target " + std::to_string(target) + " is not a class index below " +
                     std::to_string(shape.num_classes));
  }
  return c;
}

// Softmax cross-entropy on logits `z` for class `label`; overwrites z with
// (softmax - onehot) and returns the loss.
double softmax_xent(std::span<double> z, std::size_t label) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - zmax);
  const double lse = zmax + std::log(sum);
  const double loss = lse - z[label];
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = std::exp(z[c] - lse);
  z[label] -= 1.0;
  return loss;
}

// Summed loss over `rows`; when `grad` is non-empty the summed gradient is
// accumulated into it.
double accumulate(const ModelShape& shape, std::span<const double> p, const Matrix& x,
                  std::span<const double> y, std::span<const std::size_t> rows,
                  std::span<double> grad) {
  const std::size_t d = shape.input_dim;
  const std::size_t nc = shape.num_classes;
  const bool want_grad = !grad.empty();
  double total = 0.0;

  switch (shape.kind) {
    case ModelKind::linreg: {
      for (std::size_t r : rows) {
        auto xr = x.row(r);
        double pred = p[d];
        for (std::size_t j = 0; j < d; ++j) pred += p[j] * xr[j];
        const double resid = pred - y[r];
        total += 0.5 * resid * resid;
        if (want_grad) {
          for (std::size_t j = 0; j < d; ++j) grad[j] += resid * xr[j];
          grad[d] += resid;
        }
      }
      break;
    }
    case ModelKind::logreg: {
      const double* w = p.data();
      const double* b = p.data() + nc * d;
      std::vector<double> z(nc);
      for (std::size_t r : rows) {
        auto xr = x.row(r);
        const std::size_t label = class_of(shape, y[r]);
        for (std::size_t c = 0; c < nc; ++c) {
          double s = b[c];
          for (std::size_t j = 0; j < d; ++j) s += w[c * d + j] * xr[j];
          z[c] = s;
        }
        total += softmax_xent(z, label);
        if (want_grad) {
          for (std::size_t c = 0; c < nc; ++c) {
            for (std::size_t j = 0; j < d; ++j) grad[c * d + j] += z[c] * xr[j];
            grad[nc * d + c] += z[c];
          }
        }
      }
      break;
    }
    case ModelKind::mlp1: {
      const std::size_t h = shape.hidden_dim;
      const std::size_t o_b1 = h * d;
      const std::size_t o_w2 = o_b1 + h;
      const std::size_t o_b2 = o_w2 + nc * h;
      std::vector<double> act(h), z(nc), back(h);
      for (std::size_t r : rows) {
        auto xr = x.row(r);
        const std::size_t label = class_of(shape, y[r]);
        for (std::size_t k = 0; k < h; ++k) {
          double s = p[o_b1 + k];
          for (std::size_t j = 0; j < d; ++j) s += p[k * d + j] * xr[j];
          act[k] = std::tanh(s);
        }
        for (std::size_t c = 0; c < nc; ++c) {
          double s = p[o_b2 + c];
          for (std::size_t k = 0; k < h; ++k) s += p[o_w2 + c * h + k] * act[k];
          z[c] = s;
        }
        total += softmax_xent(z, label);
        if (!want_grad) continue;
        std::fill(back.begin(), back.end(), 0.0);
        for (std::size_t c = 0; c < nc; ++c) {
          for (std::size_t k = 0; k < h; ++k) {
            grad[o_w2 + c * h + k] += z[c] * act[k];
            back[k] += z[c] * p[o_w2 + c * h + k];
          }
          grad[o_b2 + c] += z[c];
        }
        for (std::size_t k = 0; k < h; ++k) {
          const double da = back[k] * (1.0 - act[k] * act[k]);
          for (std::size_t j = 0; j < d; ++j) grad[k * d + j] += da * xr[j];
          grad[o_b1 + k] += da;
        }
      }
      break;
    }
  }
  return total;
}

double mean_loss(const ModelShape& shape, std::span<const double> p, const Matrix& x,
                 std::span<const double> y, std::span<const std::size_t> rows,
                 std::span<double> grad) {
  check_inputs(shape, p, x, y);
  if (rows.empty()) throw ShapeError("batch must contain at least one sample");
  if (!grad.empty()) {
    if (grad.size() != p.size()) throw ShapeError("gradient buffer has wrong dimension");
    std::fill(grad.begin(), grad.end(), 0.0);
  }
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw ShapeError("sample row out of range");
  }
  const double n = static_cast<double>(rows.size());
  const double total = accumulate(shape, p, x, y, rows, grad);
  for (double& g : grad) g /= n;
  return total / n;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

double loss(const Model& model, const Batch& batch) {
  const auto rows = iota_rows(batch.size());
  return mean_loss(model.shape(), model.params().values(), batch.features, batch.targets, rows, {});
}

ParamVector gradient(const Model& model, const Batch& batch) {
  const auto rows = iota_rows(batch.size());
  ParamVector g(model.params().dim());
  mean_loss(model.shape(), model.params().values(), batch.features, batch.targets, rows,
            g.values());
  return g;
}

std::vector<double> predict(const ModelShape& shape, std::span<const double> p,
                            std::span<const double> xr) {
  if (xr.size() != shape.input_dim || p.size() != shape.param_count()) {
    throw ShapeError("predict: dimension mismatch");
  }
  const std::size_t d = shape.input_dim;
  const std::size_t nc = shape.num_classes;
  switch (shape.kind) {
    case ModelKind::linreg: {
      double pred = p[d];
      for (std::size_t j = 0; j < d; ++j) pred += p[j] * xr[j];
      return {pred};
    }
    case ModelKind::logreg: {
      std::vector<double> z(nc);
      for (std::size_t c = 0; c < nc; ++c) {
        double s = p[nc * d + c];
        for (std::size_t j = 0; j < d; ++j) s += p[c * d + j] * xr[j];
        z[c] = s;
      }
      return z;
    }
    case ModelKind::mlp1: {
      const std::size_t h = shape.hidden_dim;
      const std::size_t o_b1 = h * d;
      const std::size_t o_w2 = o_b1 + h;
      const std::size_t o_b2 = o_w2 + nc * h;
      std::vector<double> act(h), z(nc);
      for (std::size_t k = 0; k < h; ++k) {
        double s = p[o_b1 + k];
        for (std::size_t j = 0; j < d; ++j) s += p[k * d + j] * xr[j];
        act[k] = std::tanh(s);
      }
      for (std::size_t c = 0; c < nc; ++c) {
        double s = p[o_b2 + c];
        for (std::size_t k = 0; k < h; ++k) s += p[o_w2 + c * h + k] * act[k];
        z[c] = s;
      }
      return z;
    }
  }
  return {};
}

ModelObjective::ModelObjective(ModelShape shape, Batch data)
    : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  check_inputs(shape_, std::vector<double>(shape_.param_count()), data_.features, data_.targets);
}

double ModelObjective::loss(std::span<const double> params,
                            std::span<const std::size_t> rows) const {
  return mean_loss(shape_, params, data_.features, data_.targets, rows, {});
}

double ModelObjective::loss_and_gradient(std::span<const double> params,
                                         std::span<const std::size_t> rows,
                                         std::span<double> grad) const {
  if (grad.empty()) throw ShapeError("gradient buffer is empty");
  return mean_loss(shape_, params, data_.features, data_.targets, rows, grad);
}

}  // namespace fedsim::core
