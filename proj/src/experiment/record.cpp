#include "fedsim/experiment/record.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::exp {

using nlohmann::json;

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::completed:
      return "completed";
    case RunStatus::diverged:
      return "diverged";
    case RunStatus::aborted:
      return "aborted";
  }
  return "?";
}

RunStatus parse_run_status(std::string_view name) {
  if (name == "completed") return RunStatus::completed;
  if (name == "diverged") return RunStatus::diverged;
  if (name == "aborted") return RunStatus::aborted;
  throw ParseError("unknown record status '" + std::string(name) + "'");
}

MetricValue Record::final_metric(const std::string& metric) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    auto m = it->metrics.find(metric);
    if (m != it->metrics.end()) return m->second;
  }
  return std::nullopt;
}

void log_metric(Record& record, std::uint64_t round, std::uint64_t virtual_time,
                const std::string& name, double value) {
  if (name.empty()) throw ConfigError("metric name must be non-empty");
  RecordEntry* target = nullptr;
  if (!record.entries.empty()) {
    RecordEntry& last = record.entries.back();
    if (round == last.round && virtual_time == last.virtual_time) {
      target = &last;
    } else if (round <= last.round || virtual_time <= last.virtual_time) {
      throw OrderingError("entry (round " + std::to_string(round) + ", time " +
                          std::to_string(virtual_time) + ") does not follow (round " +
                          std::to_string(last.round) + ", time " +
                          std::to_string(last.virtual_time) + ")");
    }
  }
  if (target == nullptr) {
    record.entries.push_back(RecordEntry{round, virtual_time, {}});
    target = &record.entries.back();
  }
  if (std::isfinite(value)) {
    target->metrics[name] = value;
  } else {
    target->metrics[name] = std::nullopt;
    record.status = RunStatus::diverged;
  }
}

namespace {

json header_json(const Record& r) {
  json h;
  h["config"] = r.config;
  h["start_timestamp"] = r.start_timestamp ? json(*r.start_timestamp) : json(nullptr);
  h["artifact_version"] = r.artifact_version;
  h["task_sha256"] = r.task_sha256;
  return json{{"header", h}};
}

json entry_json(const RecordEntry& e) {
  json m = json::object();
  for (const auto& [k, v] : e.metrics) m[k] = v ? json(*v) : json(nullptr);
  return json{{"round", e.round}, {"virtual_time", e.virtual_time}, {"metrics", m}};
}

json status_json(const Record& r) {
  json s{{"status", std::string(to_string(r.status))}};
  if (r.error) s["error"] = *r.error;
  return s;
}

}  // namespace

std::string serialize_record(const Record& record) {
  std::string out = header_json(record).dump() + "\n";
  for (const auto& e : record.entries) out += entry_json(e).dump() + "\n";
  out += status_json(record).dump() + "\n";
  return out;
}

Record parse_record(std::string_view text) {
  Record r;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool have_status = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (have_status) throw ParseError("content after the status line", lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed record line: ") + e.what(), lineno);
    }
    try {
      if (!have_header) {
        if (!j.is_object() || !j.contains("header")) {
          throw ParseError("first record line must be the header", lineno);
        }
        const json& h = j["header"];
        util::reject_unknown_keys(h, {"config", "start_timestamp", "artifact_version", "task_sha256"},
                                  "record header");
        r.config = h.value("config", json::object());
        if (h.contains("start_timestamp") && !h["start_timestamp"].is_null()) {
          r.start_timestamp = util::get_string(h, "start_timestamp", "");
        }
        r.artifact_version = util::get_string(h, "artifact_version", "");
        r.task_sha256 = util::get_string(h, "task_sha256", "");
        have_header = true;
      } else if (j.contains("status")) {
        util::reject_unknown_keys(j, {"status", "error"}, "record status");
        r.status = parse_run_status(util::get_string(j, "status", ""));
        if (j.contains("error")) r.error = util::get_string(j, "error", "");
        have_status = true;
      } else {
        util::reject_unknown_keys(j, {"round", "virtual_time", "metrics"}, "record entry");
        RecordEntry e;
        e.round = static_cast<std::uint64_t>(util::get_integer(j, "round", 0));
        e.virtual_time = static_cast<std::uint64_t>(util::get_integer(j, "virtual_time", 0));
        if (j.contains("metrics")) {
          if (!j["metrics"].is_object()) throw ConfigError("'metrics' must be an object");
          for (const auto& item : j["metrics"].items()) {
            if (item.value().is_null()) {
              e.metrics[item.key()] = std::nullopt;
            } else if (item.value().is_number()) {
              e.metrics[item.key()] = item.value().get<double>();
            } else {
              throw ConfigError("metric '" + item.key() + "' must be a number or null");
            }
          }
        }
        r.entries.push_back(std::move(e));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!have_header) throw ParseError("record has no header line");
  if (!have_status) r.status = RunStatus::aborted;
  return r;
}

void write_record(const std::filesystem::path& path, const Record& record) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  util::write_text_file(path, serialize_record(record));
}

Record read_record(const std::filesystem::path& path) {
  try {
    return parse_record(util::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

JsonlFileLogger::JsonlFileLogger(std::filesystem::path path) : path_(std::move(path)) {}

JsonlFileLogger::~JsonlFileLogger() = default;

void JsonlFileLogger::append(const std::string& line) {
  if (!out_) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_ = std::make_unique<std::ofstream>(path_, std::ios::binary | std::ios::trunc);
  }
  *out_ << line << '\n';
  out_->flush();
  if (!*out_) throw Error("cannot write record file " + path_.string());
}

void JsonlFileLogger::on_header(const Record& record) { append(header_json(record).dump()); }

void JsonlFileLogger::on_entry(const RecordEntry& entry) { append(entry_json(entry).dump()); }

void JsonlFileLogger::on_finish(const Record& record) {
  append(status_json(record).dump());
  out_.reset();
}

}  // namespace fedsim::exp
