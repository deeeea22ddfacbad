#include "fedsim/cli/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <new>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fedsim/benchmark/task.hpp"
#include "fedsim/engine/runner.hpp"
#include "fedsim/error.hpp"
#include "fedsim/experiment/analyze.hpp"
#include "fedsim/experiment/parallel.hpp"
#include "fedsim/experiment/tune.hpp"
#include "fedsim/util/json_util.hpp"
#include "fedsim/version.hpp"

namespace fedsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_records_dir() {
  if (const char* env = std::getenv("FEDSIM_RECORDS_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return "records";
}

// Flags shared by run and tune. Unset optionals leave the config untouched.
struct RunnerFlags {
  std::string config;
  std::string task;
  std::string algorithm;
  std::string sim;
  std::optional<std::size_t> rounds;
  std::optional<double> lr;
  std::optional<double> proportion;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::string records = default_records_dir();
  bool stamp = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "Runner JSON file (defaults < file < flags)");
    app.add_option("--task", task, "Task directory written by gen-task");
    app.add_option("--algorithm", algorithm, "fedavg | fedprox | scaffold | fednova | fedasync");
    app.add_option("--sim", sim, "'ideal' or a simulator JSON file");
    app.add_option("--rounds", rounds, "Rounds (sync) or aggregations (async)");
    app.add_option("--lr", lr, "Local learning rate");
    app.add_option("--proportion", proportion, "Fraction of clients selected per round");
    app.add_option("--epochs", epochs, "Local epochs");
    app.add_option("--batch", batch, "Local minibatch size");
    app.add_option("--seed", seed, "Runner seed");
    app.add_option("--set", sets, "Override a runner field, e.g. algo.mu=0.01 (repeatable)");
    app.add_option("--records", records,
                   "Records directory (default: $FEDSIM_RECORDS_DIR or ./records)");
    app.add_flag("--stamp", stamp, "Store the wall-clock start time in the record header");
  }

  engine::RunnerConfig build() const {
    engine::RunnerConfig c;
    if (!config.empty()) c = engine::runner_config_from_json(util::read_json_file(config));
    if (!task.empty()) c.task = task;
    if (!algorithm.empty()) c.algo.name = algorithm;
    if (!sim.empty()) {
      c.simulator = sim == "ideal" ? sim::SimulatorConfig{}
                                   : sim::simulator_config_from_json(util::read_json_file(sim));
    }
    if (rounds) c.algo.rounds = *rounds;
    if (lr) c.algo.lr = *lr;
    if (proportion) c.algo.proportion = *proportion;
    if (epochs) c.algo.epochs = *epochs;
    if (batch) c.algo.batch_size = *batch;
    if (seed) c.seed = *seed;
    if (!sets.empty()) {
      json j = engine::to_json(c);
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw ConfigError("--set expects key=value, got '" + s + "'");
        }
        const std::string key = exp::resolve_grid_key(c, s.substr(0, eq));
        util::set_dotted(j, key, util::parse_scalar(s.substr(eq + 1)));
      }
      c = engine::runner_config_from_json(j);
    }
    c.stamp = stamp;
    if (c.task.empty()) throw ConfigError("no task given (--task or 'task' in --config)");
    c.algo.validate();
    c.engine.validate();
    algo::make_algorithm(c.algo);
    return c;
  }
};

std::string fmt_metric(const exp::MetricValue& v) {
  return v ? fmt::format("{:.6g}", *v) : std::string("null");
}

void print_final(const exp::Record& r, std::ostream& out) {
  if (r.entries.empty()) return;
  const auto& last = r.entries.back();
  out << "final (round " << last.round << ", virtual_time " << last.virtual_time << "):\n";
  for (const auto& [k, v] : last.metrics) out << "  " << k << " = " << fmt_metric(v) << "\n";
}

int cmd_gen_task(const std::string& config_path, std::optional<std::string> benchmark,
                 std::optional<std::string> partitioner, std::optional<std::string> out_dir,
                 std::optional<std::uint64_t> seed, std::ostream& out) {
  bench::BenchmarkConfig bc;
  partition::PartitionerConfig pc;
  std::string target;
  std::uint64_t s = 0;
  bool have_benchmark = false;
  if (!config_path.empty()) {
    const json j = util::read_json_file(config_path);
    util::reject_unknown_keys(j, {"benchmark", "partitioner", "out", "seed"}, "gen-task config");
    if (j.contains("benchmark")) {
      const json& b = j["benchmark"];
      if (b.is_string()) {
        bc = bench::parse_benchmark_spec(b.get<std::string>());
      } else {
        util::reject_unknown_keys(b, {"name", "params"}, "benchmark");
        bc.name = util::get_string(b, "name", "");
        bc.params = b.value("params", json::object());
      }
      have_benchmark = true;
    }
    if (j.contains("partitioner")) {
      const json& p = j["partitioner"];
      pc = p.is_string() ? partition::parse_partitioner_spec(p.get<std::string>())
                         : partition::partitioner_from_json(p);
    }
    target = util::get_string(j, "out", "");
    s = static_cast<std::uint64_t>(util::get_integer(j, "seed", 0));
  }
  if (benchmark) {
    bc = bench::parse_benchmark_spec(*benchmark);
    have_benchmark = true;
  }
  if (partitioner) pc = partition::parse_partitioner_spec(*partitioner);
  if (out_dir) target = *out_dir;
  if (seed) s = *seed;
  if (!have_benchmark) throw ConfigError("no benchmark given (--benchmark or --config)");
  if (target.empty()) throw ConfigError("no output directory given (--out or --config)");

  const bench::FederatedTask task = bench::gen_task(bc, pc, target, s);
  const bench::LoadedTask loaded = bench::load_task(target);
  out << "wrote " << (fs::path(target) / "task.json").string() << "\n";
  out << bench::describe_task(task, loaded.dataset);
  return kOk;
}

int cmd_run(const RunnerFlags& flags, std::ostream& out) {
  const engine::RunnerConfig c = flags.build();
  const fs::path path = exp::record_path(flags.records, c);
  exp::JsonlFileLogger logger(path);
  const exp::Record r = engine::run(c, &logger);
  out << "record: " << path.string() << "\n";
  out << "status: " << exp::to_string(r.status) << "\n";
  if (r.error) out << "error: " << *r.error << "\n";
  print_final(r, out);
  return r.status == exp::RunStatus::diverged ? kDiverged : kOk;
}

int cmd_tune(const RunnerFlags& flags, const std::string& grid_path, std::size_t workers,
             std::ostream& out) {
  const engine::RunnerConfig base = flags.build();
  const exp::Grid grid = exp::grid_from_json(util::read_json_file(grid_path));
  exp::ParallelOptions opts;
  opts.num_workers = workers;
  opts.records_dir = flags.records;
  const exp::TuneResult result = exp::tune(base, grid, opts);
  out << "launched " << result.runners.size() << " runners\n";
  for (std::size_t i = 0; i < result.runners.size(); ++i) {
    const auto& r = result.records[i];
    out << "  [" << i << "] " << exp::to_string(r.status);
    for (const auto& [key, values] : grid.params) {
      out << " " << key << "="
          << exp::config_value(r, exp::resolve_grid_key(result.runners[i], key));
    }
    out << " " << grid.metric << "=" << fmt_metric(r.final_metric(grid.metric)) << "  "
        << exp::record_path(flags.records, result.runners[i]).string() << "\n";
    if (r.error) out << "      error: " << *r.error << "\n";
  }
  out << "best: [" << result.best_index << "] " << grid.metric << "="
      << fmt::format("{:.6g}", result.best_value) << "\n";
  out << engine::to_json(result.best()).dump(2) << "\n";
  return kOk;
}

std::vector<fs::path> expand_record_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> paths;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
      continue;
    }
    glob_t g{};
    const int rc = ::glob(in.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) paths.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
  }
  return paths;
}

int cmd_analyze(const std::vector<std::string>& inputs, const std::vector<std::string>& group_by,
                const std::string& out_dir, bool plot, std::ostream& out) {
  const auto paths = expand_record_inputs(inputs);
  if (paths.empty()) throw EmptyInputError("no record files match the given --records");
  std::vector<exp::Record> records;
  for (const auto& p : paths) records.push_back(exp::read_record(p));
  std::vector<std::string> keys;
  for (const auto& g : group_by) {
    std::size_t start = 0;
    while (start <= g.size()) {
      const auto comma = g.find(',', start);
      const std::string k = g.substr(start, comma - start);
      if (!k.empty()) keys.push_back(k);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  const exp::Analysis a = exp::analyze(records, keys);
  const auto written = exp::write_analysis(a, out_dir, plot);
  out << "analyzed " << records.size() << " records into " << a.groups.size() << " groups\n";
  for (const auto& w : written) out << "wrote " << w.string() << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated learning simulator on a virtual clock", "fedsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kArtifactVersion);

  auto* gen = app.add_subcommand("gen-task", "Generate a static federated task directory");
  std::string gen_config;
  std::optional<std::string> gen_benchmark;
  std::optional<std::string> gen_partitioner;
  std::optional<std::string> gen_out;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--benchmark", gen_benchmark, "Benchmark spec, e.g. qp:N=4,d=10");
  gen->add_option("--partitioner", gen_partitioner,
                  "Partitioner spec, e.g. iid, dirichlet:alpha=0.3 (default iid)");
  gen->add_option("--out", gen_out, "Output directory (must be absent or empty)");
  gen->add_option("--seed", gen_seed, "Generation seed (default 0)");
  gen->add_option("--config", gen_config, "JSON file with benchmark, partitioner, out, seed");

  auto* run = app.add_subcommand("run", "Execute one runner and write its record");
  RunnerFlags run_flags;
  run_flags.attach(*run);

  auto* tune_cmd = app.add_subcommand("tune", "Grid-search hyperparameters on the validation metric");
  RunnerFlags tune_flags;
  tune_flags.attach(*tune_cmd);
  std::string grid_path;
  std::size_t workers = 1;
  tune_cmd->add_option("--grid", grid_path, "Grid JSON file")->required();
  tune_cmd->add_option("--workers", workers, "Parallel runners (default 1)");

  auto* analyze_cmd = app.add_subcommand("analyze", "Summarize records into CSV tables and curves");
  std::vector<std::string> record_inputs;
  std::vector<std::string> group_by;
  std::string analysis_out = "analysis";
  bool plot = false;
  analyze_cmd->add_option("--records", record_inputs, "Record files, directories or glob patterns")
      ->required();
  analyze_cmd->add_option("--group-by", group_by,
                          "Dotted config keys to group by, e.g. algorithm,algo.lr");
  analyze_cmd->add_option("--out", analysis_out, "Output directory (default ./analysis)");
  analyze_cmd->add_flag("--plot", plot, "Also write SVG curves");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_task(gen_config, gen_benchmark, gen_partitioner, gen_out, gen_seed, out);
    }
    if (run->parsed()) return cmd_run(run_flags, out);
    if (tune_cmd->parsed()) return cmd_tune(tune_flags, grid_path, workers, out);
    if (analyze_cmd->parsed()) {
      return cmd_analyze(record_inputs, group_by, analysis_out, plot, out);
    }
  } catch (const ExistsError& e) {
    err << "error: " << e.what() << "\n";
    return kExists;
  } catch (const EmptyInputError& e) {
    err << "error: " << e.what() << "\n";
    return kEmptyInput;
  } catch (const TuningError& e) {
    err << "error: " << e.what() << "\n";
    return kDiverged;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const LoadError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const PartitionError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace fedsim::cli
