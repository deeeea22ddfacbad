#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/benchmark/dataset.hpp"

namespace fedsim::bench {

struct CsvRecord {
  std::size_t line;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// RFC-4180 reader: comma separated, double-quoted fields with "" escapes,
// LF or CRLF line endings, embedded newlines inside quotes.
std::vector<CsvRecord> parse_csv(std::istream& in);

struct CsvSchema {
  std::string target;
  std::vector<std::string> categorical;
  TaskKind kind = TaskKind::classification;
  // Column holding a per-row owner id (enables the id partitioner).
  std::optional<std::string> owner;
  // Cells equal to one of these after trimming spaces count as missing.
  std::vector<std::string> missing_tokens = {"", "?", "NA", "NaN"};
};

// Numeric columns pass through, categorical columns are one-hot encoded in
// lexicographic category order, rows with a missing cell are dropped, and the
// rows are split 80/10/10 by a seeded shuffle. Classification targets map to
// class indices in sorted order (numeric order when every label is a number).
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::uint64_t seed);
Dataset load_csv(std::istream& in, const CsvSchema& schema, std::uint64_t seed,
                 const std::string& name = "csv");

}  // namespace fedsim::bench
