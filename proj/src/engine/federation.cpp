#include "fedsim/engine/federation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fedsim/benchmark/qp.hpp"
#include "fedsim/error.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::engine {

using nlohmann::json;

json to_json(const ModelConfig& c) {
  json j{{"kind", c.kind},
         {"hidden_dim", c.hidden_dim},
         {"init", c.init},
         {"init_scale", c.init_scale}};
  j["init_seed"] = c.init_seed ? json(*c.init_seed) : json(nullptr);
  return j;
}

ModelConfig model_config_from_json(const json& j, ModelConfig c) {
  util::reject_unknown_keys(j, {"kind", "hidden_dim", "init", "init_scale", "init_seed"}, "model");
  c.kind = util::get_string(j, "kind", c.kind);
  if (c.kind != "auto") core::parse_model_kind(c.kind);
  const long long h = util::get_integer(j, "hidden_dim", static_cast<long long>(c.hidden_dim));
  if (h < 1) throw ConfigError("model.hidden_dim must be >= 1");
  c.hidden_dim = static_cast<std::size_t>(h);
  c.init = util::get_string(j, "init", c.init);
  if (c.init != "zeros" && c.init != "random") {
    throw ConfigError("model.init must be 'zeros' or 'random'");
  }
  c.init_scale = util::get_number(j, "init_scale", c.init_scale);
  if (!(c.init_scale >= 0.0)) throw ConfigError("model.init_scale must be >= 0");
  if (j.contains("init_seed")) {
    if (j["init_seed"].is_null()) {
      c.init_seed.reset();
    } else {
      c.init_seed = static_cast<std::uint64_t>(util::get_integer(j, "init_seed", 0));
    }
  }
  return c;
}

namespace {

core::Batch make_batch(const bench::Dataset& ds, std::span<const std::size_t> rows,
                       const std::vector<double>* noise) {
  core::Batch b;
  b.features = ds.features.select_rows(rows);
  b.targets.reserve(rows.size());
  for (std::size_t r : rows) b.targets.push_back(ds.targets[r]);
  if (noise != nullptr) {
    for (std::size_t i = 0; i < b.features.rows(); ++i) {
      auto row = b.features.row(i);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += (*noise)[c];
    }
  }
  return b;
}

}  // namespace

Federation::Federation(const bench::LoadedTask& loaded, const ModelConfig& model,
                       std::uint64_t seed) {
  const bench::FederatedTask& task = loaded.task;
  const bench::Dataset& ds = loaded.dataset;
  const std::uint64_t init_seed = model.init_seed.value_or(seed);

  if (ds.kind == bench::TaskKind::quadratic) {
    if (!ds.qp) throw LoadError("quadratic dataset carries no components");
    if (model.kind != "auto") {
      throw ConfigError("quadratic tasks optimize x directly; model.kind must be 'auto'");
    }
    qp_ = *ds.qp;
    for (const auto& rows : task.partition) {
      clients_.push_back(std::make_unique<bench::QuadraticObjective>(*qp_, rows));
    }
    initial_ = core::ParamVector(qp_->dim);
    if (model.init == "random") {
      Rng rng = make_stream(init_seed, StreamTag::model_init);
      std::normal_distribution<double> normal(0.0, model.init_scale);
      for (double& v : initial_.values()) v = normal(rng);
    }
    qp_optimum_ = core::ParamVector(bench::qp_optimum(*qp_));
    return;
  }

  core::ModelShape shape;
  classification_ = ds.kind == bench::TaskKind::classification;
  if (model.kind == "auto") {
    shape.kind = classification_ ? core::ModelKind::logreg : core::ModelKind::linreg;
  } else {
    shape.kind = core::parse_model_kind(model.kind);
  }
  if (classification_ == (shape.kind == core::ModelKind::linreg)) {
    throw ConfigError("model kind '" + std::string(core::to_string(shape.kind)) +
                      "' does not fit a " + std::string(bench::to_string(ds.kind)) + " task");
  }
  shape.input_dim = ds.feature_dim();
  shape.num_classes = classification_ ? ds.num_classes : 1;
  shape.hidden_dim = shape.kind == core::ModelKind::mlp1 ? model.hidden_dim : 0;
  shape.validate();
  shape_ = shape;

  for (std::size_t k = 0; k < task.partition.size(); ++k) {
    const std::vector<double>* noise =
        task.feature_noise ? &(*task.feature_noise)[k] : nullptr;
    clients_.push_back(
        std::make_unique<core::ModelObjective>(shape, make_batch(ds, task.partition[k], noise)));
  }
  initial_ = model.init == "random"
                 ? core::Model::random(shape, model.init_scale, init_seed).params()
                 : core::Model::zeros(shape).params();
  if (!ds.split.val.empty()) val_ = make_batch(ds, ds.split.val, nullptr);
  if (!ds.split.test.empty()) test_ = make_batch(ds, ds.split.test, nullptr);
}

std::map<std::string, double> Federation::evaluate(const core::ParamVector& params) const {
  std::map<std::string, double> m;
  if (qp_) {
    const double f = bench::qp_objective(*qp_, params.values());
    m["train_loss"] = f;
    m["val_loss"] = f;
    const double d = (params - *qp_optimum_).norm();
    const double d0 = (initial_ - *qp_optimum_).norm();
    m["dist_to_opt"] = d;
    m["rel_dist_to_opt"] = d0 > 0.0 ? d / d0 : d;
    return m;
  }
  double total = 0.0;
  double weighted = 0.0;
  for (const auto& c : clients_) {
    const double n = static_cast<double>(c->num_samples());
    weighted += n * c->full_loss(params);
    total += n;
  }
  m["train_loss"] = weighted / total;
  const core::Model model(*shape_, params);
  auto score = [&](const core::Batch& b, const std::string& prefix) {
    m[prefix + "_loss"] = core::loss(model, b);
    if (!classification_) return;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto z = core::predict(*shape_, params.values(), b.features.row(i));
      const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
      if (best == static_cast<std::size_t>(b.targets[i])) ++correct;
    }
    m[prefix + "_accuracy"] = static_cast<double>(correct) / static_cast<double>(b.size());
  };
  if (val_) score(*val_, "val");
  if (test_) score(*test_, "test");
  return m;
}

}  // namespace fedsim::engine
