#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "fedsim/benchmark/task.hpp"

namespace fedsim::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fedsim_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(FEDSIM_TEST_DATA) / name;
}

// Writes a task under `dir`/name and returns its directory.
inline std::filesystem::path make_task(const TempDir& dir, const std::string& name,
                                       const std::string& benchmark,
                                       const std::string& partitioner, std::uint64_t seed) {
  const auto out = dir / name;
  bench::gen_task(bench::parse_benchmark_spec(benchmark),
                  partition::parse_partitioner_spec(partitioner), out, seed);
  return out;
}

}  // namespace fedsim::testing
