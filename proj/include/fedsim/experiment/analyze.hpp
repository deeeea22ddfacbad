#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/experiment/record.hpp"

namespace fedsim::exp {

// Mean and population standard deviation over the values present.
struct Stat {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
};

Stat summarize(const std::vector<double>& values);

struct CurvePoint {
  std::uint64_t round = 0;
  Stat virtual_time;
  std::map<std::string, Stat> metrics;
};

struct GroupSummary {
  std::string label;  // "key=value,..." or "all"
  std::vector<std::string> values;  // aligned with the group_by keys
  std::size_t num_records = 0;
  std::map<std::string, Stat> final_metrics;
  std::map<std::string, Stat> best_metrics;  // max for *accuracy*, min otherwise
  std::vector<CurvePoint> curve;             // ascending round
};

struct Analysis {
  std::vector<std::string> group_by;
  std::vector<std::string> metrics;  // union over all records, sorted
  std::vector<GroupSummary> groups;  // first-appearance order
};

// Value of a dotted config path rendered for grouping ("" if absent).
std::string config_value(const Record& record, const std::string& dotted_key);

// Groups by the dotted config keys. Missing metrics leave gaps: a group's
// Stat for a metric counts only the records that carry it. Null values
// (divergence) are gaps as well.
Analysis analyze(const std::vector<Record>& records, const std::vector<std::string>& group_by);

// summary.csv, curves_<group>.csv and, with `plot`, curves_<group>.svg.
// Returns the written paths.
std::vector<std::filesystem::path> write_analysis(const Analysis& analysis,
                                                  const std::filesystem::path& out_dir, bool plot);

std::string summary_csv(const Analysis& analysis);
std::string curves_csv(const Analysis& analysis, const GroupSummary& group);
std::string curves_svg(const Analysis& analysis, const GroupSummary& group);
// File-name-safe form of a group label.
std::string group_file_stem(const GroupSummary& group);

}  // namespace fedsim::exp
