#include "fedsim/benchmark/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>

#include "fedsim/error.hpp"

namespace fedsim::bench {

std::vector<CsvRecord> parse_csv(std::istream& in) {
  std::vector<CsvRecord> records;
  std::string field;
  CsvRecord current{1, {}};
  std::size_t line = 1;
  bool in_quotes = false;
  bool field_started = false;
  bool any = false;
  char ch = 0;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{line, {}};
  };

  while (in.get(ch)) {
    any = true;
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (field_started) throw ParseError("stray quote inside unquoted field", line);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", current.line);
  if (any && (field_started || !current.fields.empty())) end_record();
  return records;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

Dataset load_csv(std::istream& in, const CsvSchema& schema, std::uint64_t seed,
                 const std::string& name) {
  const auto records = parse_csv(in);
  if (records.empty()) throw IngestionError("empty CSV file");
  std::vector<std::string> header;
  for (const auto& h : records.front().fields) header.push_back(trim(h));
  const std::size_t ncol = header.size();

  auto column_of = [&](const std::string& col) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) throw IngestionError("unknown column '" + col + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t target_col = column_of(schema.target);
  constexpr std::size_t kNoColumn = static_cast<std::size_t>(-1);
  const std::size_t owner_col = schema.owner ? column_of(*schema.owner) : kNoColumn;
  std::vector<bool> categorical(ncol, false);
  for (const auto& c : schema.categorical) categorical[column_of(c)] = true;
  if (records.size() < 2) throw IngestionError("CSV file has a header but no rows");

  auto is_missing = [&](const std::string& cell) {
    return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), cell) !=
           schema.missing_tokens.end();
  };

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != ncol) {
      throw IngestionError("expected " + std::to_string(ncol) + " fields, found " +
                               std::to_string(rec.fields.size()),
                           rec.line, rec.fields.size());
    }
    std::vector<std::string> cells;
    bool missing = false;
    for (const auto& f : rec.fields) {
      cells.push_back(trim(f));
      missing = missing || is_missing(cells.back());
    }
    if (missing) continue;
    rows.push_back(std::move(cells));
    row_lines.push_back(rec.line);
  }
  if (rows.empty()) throw IngestionError("no complete rows in CSV file");

  std::vector<std::set<std::string>> categories(ncol);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < ncol; ++c) {
      if (categorical[c]) categories[c].insert(row[c]);
    }
  }

  Dataset ds;
  ds.name = name;
  ds.kind = schema.kind;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (c == target_col || c == owner_col) continue;
    if (categorical[c]) {
      for (const auto& cat : categories[c]) ds.feature_names.push_back(header[c] + "=" + cat);
    } else {
      ds.feature_names.push_back(header[c]);
    }
  }

  // Class labels: numeric order when every label parses, lexicographic otherwise.
  std::map<std::string, std::size_t> class_index;
  if (schema.kind == TaskKind::classification) {
    std::vector<std::string> labels;
    for (const auto& row : rows) labels.push_back(row[target_col]);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool numeric = std::all_of(labels.begin(), labels.end(),
                                     [](const std::string& l) { return to_double(l).has_value(); });
    if (numeric) {
      std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
        return *to_double(a) < *to_double(b);
      });
    }
    for (std::size_t i = 0; i < labels.size(); ++i) class_index[labels[i]] = i;
    ds.num_classes = labels.size();
  } else if (schema.kind != TaskKind::regression) {
    throw ConfigError("csv benchmark supports classification or regression only");
  }

  if (owner_col != kNoColumn) ds.owner_ids.emplace();
  std::vector<double> feat;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    feat.clear();
    for (std::size_t c = 0; c < ncol; ++c) {
      if (c == target_col || c == owner_col) continue;
      if (categorical[c]) {
        for (const auto& cat : categories[c]) feat.push_back(row[c] == cat ? 1.0 : 0.0);
      } else {
        auto v = to_double(row[c]);
        if (!v) throw IngestionError("non-numeric value '" + row[c] + "'", row_lines[r], c + 1);
        feat.push_back(*v);
      }
    }
    if (feat.empty()) throw IngestionError("CSV file has no feature columns");
    ds.features.push_row(feat);
    if (schema.kind == TaskKind::classification) {
      ds.targets.push_back(static_cast<double>(class_index.at(row[target_col])));
    } else {
      auto v = to_double(row[target_col]);
      if (!v) {
        throw IngestionError("non-numeric target '" + row[target_col] + "'", row_lines[r],
                             target_col + 1);
      }
      ds.targets.push_back(*v);
    }
    if (owner_col != kNoColumn) ds.owner_ids->push_back(row[owner_col]);
  }
  ds.split = seeded_split(ds.targets.size(), seed);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open CSV file " + path.string());
  return load_csv(in, schema, seed, "csv");
}

}  // namespace fedsim::bench
