#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fedsim::exp {

enum class RunStatus { completed, diverged, aborted };

std::string_view to_string(RunStatus status);
RunStatus parse_run_status(std::string_view name);

// nullopt encodes a non-finite value; it is written as JSON null.
using MetricValue = std::optional<double>;

struct RecordEntry {
  std::uint64_t round = 0;
  std::uint64_t virtual_time = 0;
  std::map<std::string, MetricValue> metrics;
  bool operator==(const RecordEntry&) const = default;
};

struct Record {
  nlohmann::json config;  // fully resolved runner config
  std::optional<std::string> start_timestamp;
  std::string artifact_version;
  std::string task_sha256;
  std::vector<RecordEntry> entries;
  RunStatus status = RunStatus::completed;
  std::optional<std::string> error;

  // Value of `metric` in the last entry that carries it.
  MetricValue final_metric(const std::string& metric) const;
  bool operator==(const Record&) const = default;
};

// Appends a new entry when (round, virtual_time) are both past the last
// entry, merges into the last entry when both are equal, and raises
// OrderingError otherwise. A non-finite value is stored as null and marks the
// record diverged.
void log_metric(Record& record, std::uint64_t round, std::uint64_t virtual_time,
                const std::string& name, double value);

// JSON Lines: a header line, one line per entry, then a status line.
std::string serialize_record(const Record& record);
Record parse_record(std::string_view text);
void write_record(const std::filesystem::path& path, const Record& record);
Record read_record(const std::filesystem::path& path);

// Streams a record as it grows. The file backend is the only implementation.
class RecordLogger {
 public:
  virtual ~RecordLogger() = default;
  virtual void on_header(const Record& record) = 0;
  virtual void on_entry(const RecordEntry& entry) = 0;
  virtual void on_finish(const Record& record) = 0;
};

class JsonlFileLogger final : public RecordLogger {
 public:
  explicit JsonlFileLogger(std::filesystem::path path);
  ~JsonlFileLogger() override;

  void on_header(const Record& record) override;
  void on_entry(const RecordEntry& entry) override;
  void on_finish(const Record& record) override;

 private:
  void append(const std::string& line);

  std::filesystem::path path_;
  std::unique_ptr<std::ofstream> out_;
};

}  // namespace fedsim::exp
