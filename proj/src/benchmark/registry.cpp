#include "fedsim/benchmark/registry.hpp"

#include "fedsim/benchmark/csv.hpp"
#include "fedsim/benchmark/qp.hpp"
#include "fedsim/benchmark/synthetic.hpp"
#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::bench {

using nlohmann::json;

BenchmarkConfig parse_benchmark_spec(std::string_view spec) {
  BenchmarkConfig c;
  const auto colon = spec.find(':');
  c.name = std::string(spec.substr(0, colon));
  if (c.name.empty()) throw ConfigError("benchmark name is empty");
  if (colon != std::string_view::npos) c.params = util::parse_kv_list(spec.substr(colon + 1));
  return c;
}

namespace {

std::size_t positive(const json& p, const char* key, long long fallback) {
  const long long v = util::get_integer(p, key, fallback);
  if (v <= 0) throw ConfigError(std::string("benchmark parameter '") + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

BenchmarkDefinition qp_definition() {
  BenchmarkDefinition def;
  def.resolve = [](const json& p) {
    util::reject_unknown_keys(p, {"N", "d", "conditioning"}, "qp benchmark");
    json r;
    r["N"] = positive(p, "N", 8);
    r["d"] = positive(p, "d", 10);
    r["conditioning"] = util::get_number(p, "conditioning", 10.0);
    if (!(r["conditioning"].get<double>() >= 1.0)) {
      throw ConfigError("qp conditioning must be >= 1");
    }
    return r;
  };
  def.generate = [](const json& r, std::uint64_t seed) {
    Dataset d = qp_dataset(gen_qp(r["N"].get<std::size_t>(), r["d"].get<std::size_t>(),
                                  r["conditioning"].get<double>(), seed));
    return d;
  };
  def.natural_clients = [](const json& r) { return r["N"].get<std::size_t>(); };
  return def;
}

BenchmarkDefinition synthetic_definition() {
  BenchmarkDefinition def;
  def.resolve = [](const json& p) {
    util::reject_unknown_keys(
        p, {"alpha", "beta", "clients", "dim", "classes", "samples", "samples_sigma"},
        "synthetic benchmark");
    json r;
    r["alpha"] = util::get_number(p, "alpha", 0.0);
    r["beta"] = util::get_number(p, "beta", 0.0);
    r["clients"] = positive(p, "clients", 10);
    r["dim"] = positive(p, "dim", 60);
    r["classes"] = positive(p, "classes", 10);
    r["samples"] = positive(p, "samples", 100);
    r["samples_sigma"] = util::get_number(p, "samples_sigma", 0.0);
    return r;
  };
  def.generate = [](const json& r, std::uint64_t seed) {
    SyntheticConfig c;
    c.alpha = r["alpha"].get<double>();
    c.beta = r["beta"].get<double>();
    c.num_clients = r["clients"].get<std::size_t>();
    c.dim = r["dim"].get<std::size_t>();
    c.num_classes = r["classes"].get<std::size_t>();
    c.samples_per_client = r["samples"].get<std::size_t>();
    c.samples_sigma = r["samples_sigma"].get<double>();
    return gen_synthetic(c, seed).dataset;
  };
  def.natural_clients = [](const json& r) { return r["clients"].get<std::size_t>(); };
  return def;
}

std::vector<std::string> split_list(const json& v) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<std::string>());
  } else if (v.is_string()) {
    std::string s = v.get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto semi = s.find(';', start);
      std::string item = s.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
      if (!item.empty()) out.push_back(item);
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
  } else if (!v.is_null()) {
    throw ConfigError("csv 'categorical' must be a list or a ';'-separated string");
  }
  return out;
}

BenchmarkDefinition csv_definition() {
  BenchmarkDefinition def;
  def.resolve = [](const json& p) {
    util::reject_unknown_keys(p, {"path", "target", "categorical", "task", "owner"},
                              "csv benchmark");
    json r;
    r["path"] = util::get_string(p, "path", "");
    r["target"] = util::get_string(p, "target", "");
    if (r["path"].get<std::string>().empty() || r["target"].get<std::string>().empty()) {
      throw ConfigError("csv benchmark needs 'path' and 'target'");
    }
    r["categorical"] = split_list(p.value("categorical", json()));
    r["task"] = util::get_string(p, "task", "classification");
    if (r["task"] != "classification" && r["task"] != "regression") {
      throw ConfigError("csv task must be classification or regression");
    }
    r["owner"] = p.contains("owner") ? json(util::get_string(p, "owner", "")) : json();
    return r;
  };
  def.generate = [](const json& r, std::uint64_t seed) {
    CsvSchema schema;
    schema.target = r["target"].get<std::string>();
    schema.categorical = r["categorical"].get<std::vector<std::string>>();
    schema.kind = r["task"] == "regression" ? TaskKind::regression : TaskKind::classification;
    if (!r["owner"].is_null()) schema.owner = r["owner"].get<std::string>();
    return load_csv(std::filesystem::path(r["path"].get<std::string>()), schema, seed);
  };
  def.natural_clients = [](const json&) { return std::size_t{0}; };
  return def;
}

}  // namespace

BenchmarkRegistry::BenchmarkRegistry() {
  defs_["qp"] = qp_definition();
  defs_["synthetic"] = synthetic_definition();
  defs_["csv"] = csv_definition();
}

BenchmarkRegistry& BenchmarkRegistry::instance() {
  static BenchmarkRegistry registry;
  return registry;
}

void BenchmarkRegistry::add(const std::string& name, BenchmarkDefinition definition) {
  if (!definition.resolve || !definition.generate || !definition.natural_clients) {
    throw ConfigError("benchmark '" + name + "' definition is incomplete");
  }
  defs_[name] = std::move(definition);
}

bool BenchmarkRegistry::contains(const std::string& name) const { return defs_.count(name) > 0; }

const BenchmarkDefinition& BenchmarkRegistry::get(const std::string& name) const {
  auto it = defs_.find(name);
  if (it == defs_.end()) {
    std::string known;
    for (const auto& [n, d] : defs_) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown benchmark '" + name + "' (available: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> BenchmarkRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [n, d] : defs_) out.push_back(n);
  return out;
}

BenchmarkConfig BenchmarkRegistry::resolve(const BenchmarkConfig& config) const {
  return {config.name, get(config.name).resolve(config.params)};
}

Dataset BenchmarkRegistry::generate(const BenchmarkConfig& resolved, std::uint64_t seed) const {
  Dataset d = get(resolved.name).generate(resolved.params, seed);
  d.validate();
  return d;
}

}  // namespace fedsim::bench
