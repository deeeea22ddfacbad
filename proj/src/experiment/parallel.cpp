#include "fedsim/experiment/parallel.hpp"

#include <deque>
#include <mutex>
#include <new>
#include <thread>

#include "fedsim/error.hpp"
#include "fedsim/version.hpp"

namespace fedsim::exp {

std::filesystem::path record_path(const std::filesystem::path& records_dir,
                                  const engine::RunnerConfig& runner) {
  return records_dir / (engine::runner_hash(runner) + ".jsonl");
}

Record aborted_record(const engine::RunnerConfig& runner, const std::string& error) {
  Record r;
  r.config = engine::to_json(runner);
  r.artifact_version = kArtifactVersion;
  r.status = RunStatus::aborted;
  r.error = error;
  return r;
}

std::vector<Record> run_parallel(const std::vector<engine::RunnerConfig>& runners,
                                 const ParallelOptions& options) {
  if (options.num_workers == 0) throw ConfigError("num_workers must be >= 1");
  const Executor exec = options.executor
                            ? options.executor
                            : Executor([](const engine::RunnerConfig& c) { return engine::run(c); });

  struct Job {
    std::size_t index;
    std::size_t attempts;
  };
  std::deque<Job> queue;
  for (std::size_t i = 0; i < runners.size(); ++i) queue.push_back({i, 0});
  std::vector<Record> results(runners.size());
  std::mutex mu;

  auto worker = [&] {
    while (true) {
      Job job;
      {
        std::lock_guard lock(mu);
        if (queue.empty()) return;
        job = queue.front();
        queue.pop_front();
      }
      const auto& runner = runners[job.index];
      std::optional<Record> rec;
      std::string transient;
      try {
        rec = exec(runner);
      } catch (const ResourceExhausted& e) {
        transient = e.what();
      } catch (const std::bad_alloc&) {
        transient = "out of memory";
      } catch (const std::exception& e) {
        rec = aborted_record(runner, e.what());
      }
      if (!rec) {
        if (job.attempts < options.max_retries) {
          std::lock_guard lock(mu);
          queue.push_back({job.index, job.attempts + 1});
          continue;
        }
        rec = aborted_record(runner, "retries exhausted: " + transient);
      }
      if (options.records_dir) {
        try {
          write_record(record_path(*options.records_dir, runner), *rec);
        } catch (const std::exception& e) {
          rec = aborted_record(runner, std::string("cannot write record: ") + e.what());
        }
      }
      results[job.index] = std::move(*rec);
    }
  };

  const std::size_t n = std::min(options.num_workers, std::max<std::size_t>(runners.size(), 1));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  return results;
}

}  // namespace fedsim::exp
