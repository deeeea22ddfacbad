#include "fedsim/benchmark/task.hpp"

#include <sstream>

#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"
#include "fedsim/util/sha256.hpp"

namespace fedsim::bench {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const FederatedTask& t) {
  json j;
  j["schema_version"] = t.schema_version;
  j["task_name"] = t.task_name;
  j["benchmark"] = {{"name", t.benchmark.name},
                    {"config", t.benchmark.params},
                    {"sha256", t.benchmark_sha256}};
  j["partitioner"] = partition::to_json(t.partitioner);
  j["num_clients"] = t.num_clients;
  j["seed"] = t.seed;
  j["partition"] = t.partition;
  if (t.feature_noise) j["feature_noise"] = *t.feature_noise;
  return j;
}

FederatedTask task_from_json(const json& j) {
  try {
    util::reject_unknown_keys(j,
                              {"schema_version", "task_name", "benchmark", "partitioner",
                               "num_clients", "seed", "partition", "feature_noise"},
                              "task.json");
    FederatedTask t;
    t.schema_version = j.at("schema_version").get<int>();
    if (t.schema_version != kTaskSchemaVersion) {
      throw LoadError("unsupported task schema_version " + std::to_string(t.schema_version));
    }
    t.task_name = j.value("task_name", "");
    const json& b = j.at("benchmark");
    util::reject_unknown_keys(b, {"name", "config", "sha256"}, "task.json benchmark");
    t.benchmark.name = b.at("name").get<std::string>();
    t.benchmark.params = b.at("config");
    t.benchmark_sha256 = b.at("sha256").get<std::string>();
    t.partitioner = partition::partitioner_from_json(j.at("partitioner"));
    t.num_clients = j.at("num_clients").get<std::size_t>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.partition = j.at("partition").get<std::vector<std::vector<std::size_t>>>();
    if (j.contains("feature_noise")) {
      t.feature_noise = j["feature_noise"].get<std::vector<std::vector<double>>>();
    }
    return t;
  } catch (const json::exception& e) {
    throw LoadError(std::string("malformed task.json: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(std::string("malformed task.json: ") + e.what());
  }
}

void validate_task(const FederatedTask& task, const Dataset& dataset) {
  if (task.partition.size() != task.num_clients) {
    throw LoadError("task num_clients does not match the partition");
  }
  partition::Partition p{task.partition, task.feature_noise};
  try {
    partition::validate_partition(p, dataset.num_samples());
  } catch (const PartitionError& e) {
    throw LoadError(std::string("invalid partition: ") + e.what());
  }
  std::vector<char> is_train(dataset.num_samples(), 0);
  for (std::size_t i : dataset.split.train) is_train[i] = 1;
  for (const auto& client : task.partition) {
    for (std::size_t idx : client) {
      if (!is_train[idx]) throw LoadError("partition uses non-training index " + std::to_string(idx));
    }
  }
  if (task.feature_noise) {
    for (const auto& e : *task.feature_noise) {
      if (e.size() != dataset.feature_dim()) throw LoadError("feature noise has the wrong width");
    }
  }
}

namespace {

std::string readme_text(const FederatedTask& task, const Dataset& dataset) {
  std::ostringstream os;
  os << "Federated task '" << task.task_name << "'\n";
  os << "benchmark: " << task.benchmark.name << " " << task.benchmark.params.dump() << "\n";
  os << "partitioner: " << partition::to_json(task.partitioner).dump() << "\n";
  os << "seed: " << task.seed << "\n\n";
  os << describe_task(task, dataset);
  return os.str();
}

}  // namespace

std::string describe_task(const FederatedTask& task, const Dataset& dataset) {
  std::ostringstream os;
  os << "clients: " << task.num_clients << "\n";
  os << "samples: train " << dataset.split.train.size() << ", val " << dataset.split.val.size()
     << ", test " << dataset.split.test.size() << "\n";
  const bool labelled = dataset.kind == TaskKind::classification;
  std::vector<std::size_t> labels;
  if (labelled) labels = dataset.labels();
  for (std::size_t k = 0; k < task.partition.size(); ++k) {
    os << "client " << k << ": " << task.partition[k].size() << " samples";
    if (labelled) {
      std::vector<std::size_t> hist(dataset.num_classes, 0);
      for (std::size_t idx : task.partition[k]) ++hist[labels[idx]];
      os << ", labels [";
      for (std::size_t c = 0; c < hist.size(); ++c) os << (c ? " " : "") << hist[c];
      os << "]";
    }
    os << "\n";
  }
  return os.str();
}

FederatedTask gen_task(const BenchmarkConfig& benchmark,
                       const partition::PartitionerConfig& partitioner, const fs::path& out,
                       std::uint64_t seed) {
  if (fs::exists(out) && !(fs::is_directory(out) && fs::is_empty(out))) {
    throw ExistsError("output path " + out.string() + " exists and is not an empty directory");
  }
  const auto& registry = BenchmarkRegistry::instance();
  const BenchmarkConfig resolved = registry.resolve(benchmark);
  Dataset dataset = registry.generate(resolved, seed);

  partition::PartitionerConfig part = partitioner;
  if (part.num_clients == 0) {
    part.num_clients = registry.get(resolved.name).natural_clients(resolved.params);
    if (part.num_clients == 0) {
      throw ConfigError("benchmark '" + resolved.name + "' needs an explicit client count");
    }
  }
  if (!part.seed) part.seed = seed;
  part.validate();

  std::vector<std::size_t> train_labels;
  std::vector<std::string> train_owners;
  partition::PartitionInput input;
  input.indices = dataset.split.train;
  input.feature_dim = dataset.feature_dim();
  if (dataset.kind == TaskKind::classification) {
    const auto all = dataset.labels();
    for (std::size_t i : dataset.split.train) train_labels.push_back(all[i]);
    input.labels = std::span<const std::size_t>(train_labels);
  }
  if (dataset.owner_ids) {
    for (std::size_t i : dataset.split.train) train_owners.push_back((*dataset.owner_ids)[i]);
    input.owner_ids = std::span<const std::string>(train_owners);
  }
  partition::Partition p = partition::apply_partitioner(part, input);
  if (part.kind == partition::PartitionerKind::id) part.num_clients = p.num_clients();

  FederatedTask task;
  task.task_name = out.filename().string();
  if (task.task_name.empty()) task.task_name = out.parent_path().filename().string();
  task.benchmark = resolved;
  task.benchmark_sha256 = content_hash(dataset);
  task.partitioner = part;
  task.num_clients = p.num_clients();
  task.seed = seed;
  task.partition = std::move(p.clients);
  task.feature_noise = std::move(p.feature_noise);
  validate_task(task, dataset);

  fs::create_directories(out);
  util::write_text_file(out / "task.json", to_json(task).dump(2) + "\n");
  util::write_text_file(out / "README.txt", readme_text(task, dataset));
  return task;
}

LoadedTask load_task(const fs::path& dir) {
  const fs::path file = dir / "task.json";
  if (!fs::exists(file)) throw LoadError("no task.json in " + dir.string());
  const std::string text = util::read_text_file(file);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(file.string() + ": " + e.what());
  }
  LoadedTask loaded;
  loaded.task = task_from_json(j);
  loaded.task_sha256 = util::sha256_hex(text);
  const auto& registry = BenchmarkRegistry::instance();
  loaded.dataset = registry.generate(loaded.task.benchmark, loaded.task.seed);
  const std::string hash = content_hash(loaded.dataset);
  if (hash != loaded.task.benchmark_sha256) {
    throw LoadError("dataset content hash mismatch for task " + dir.string() +
                    " (benchmark data changed since the task was generated)");
  }
  validate_task(loaded.task, loaded.dataset);
  return loaded;
}

}  // namespace fedsim::bench
