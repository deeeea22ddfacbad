#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "fedsim/simulator/profile.hpp"

namespace fedsim::sim {

inline constexpr int kTraceSchemaVersion = 1;

// Trace file:
//   {"schema_version": 1,
//    "clients": [{"id": 0, "availability": [[0, 100]], "latency": 2,
//                 "drop_prob": 0.0, "completeness": "full"}]}
// Client ids must be exactly 0..n-1. Interval ends are exclusive. "latency"
// accepts a latency spec object, a number, or an array of per-participation
// values. Violations raise ParseError carrying the offending line.
std::vector<ClientProfile> parse_trace(std::string_view text);
std::vector<ClientProfile> load_trace(const std::filesystem::path& path);

}  // namespace fedsim::sim
