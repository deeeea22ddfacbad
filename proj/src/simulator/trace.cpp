#include "fedsim/simulator/trace.hpp"

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <map>
#include <string>

#include "fedsim/error.hpp"
#include "fedsim/util/json_util.hpp"

namespace fedsim::sim {

using nlohmann::json;

namespace {

// Input iterator that tracks the line of the last character consumed.
class LineCountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineCountingIterator() = default;
  LineCountingIterator(const char* p, std::size_t* line) : p_(p), line_(line) {}

  reference operator*() const { return *p_; }
  LineCountingIterator& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto tmp = *this;
    ++*this;
    return tmp;
  }
  bool operator==(const LineCountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const LineCountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_ = nullptr;
  std::size_t* line_ = nullptr;
};

struct LineMap {
  std::size_t root = 1;
  std::map<std::string, std::size_t> top_keys;
  std::vector<std::size_t> clients;
  std::vector<std::map<std::string, std::size_t>> client_keys;
  std::vector<std::vector<std::size_t>> intervals;
};

std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

json parse_with_lines(std::string_view text, LineMap& lines) {
  std::size_t line = 1;
  std::string top_key;
  std::string client_key;
  auto cb = [&](int depth, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::key:
        if (depth == 1) {
          top_key = parsed.get<std::string>();
          lines.top_keys[top_key] = line;
        } else if (depth == 3 && top_key == "clients" && !lines.client_keys.empty()) {
          client_key = parsed.get<std::string>();
          lines.client_keys.back()[client_key] = line;
        }
        break;
      case json::parse_event_t::object_start:
        if (depth == 0) {
          lines.root = line;
        } else if (depth == 2 && top_key == "clients") {
          lines.clients.push_back(line);
          lines.client_keys.emplace_back();
          lines.intervals.emplace_back();
          client_key.clear();
        }
        break;
      case json::parse_event_t::array_start:
        if (depth == 4 && top_key == "clients" && client_key == "availability" &&
            !lines.intervals.empty()) {
          lines.intervals.back().push_back(line);
        }
        break;
      default:
        break;
    }
    return true;
  };
  LineCountingIterator first(text.data(), &line);
  LineCountingIterator last(text.data() + text.size(), &line);
  try {
    return json::parse(first, last, cb);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed trace JSON: ") + e.what(),
                     line_of_byte(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

std::size_t key_line(const LineMap& lines, std::size_t client, const std::string& key) {
  if (client < lines.client_keys.size()) {
    auto it = lines.client_keys[client].find(key);
    if (it != lines.client_keys[client].end()) return it->second;
  }
  return client < lines.clients.size() ? lines.clients[client] : lines.root;
}

VirtualTime parse_time(const json& v, std::size_t line, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(std::string("interval ") + what + " must be a non-negative integer", line);
  }
  return v.get<VirtualTime>();
}

ClientProfile parse_client(const json& c, std::size_t index, const LineMap& lines) {
  const std::size_t line = index < lines.clients.size() ? lines.clients[index] : lines.root;
  if (!c.is_object()) throw ParseError("client entry must be an object", line);
  for (const auto& item : c.items()) {
    static const char* kAllowed[] = {"id", "availability", "latency", "drop_prob", "completeness"};
    if (std::find(std::begin(kAllowed), std::end(kAllowed), item.key()) == std::end(kAllowed)) {
      throw ParseError("unknown client key '" + item.key() + "'", key_line(lines, index, item.key()));
    }
  }
  if (!c.contains("id")) throw ParseError("client is missing 'id'", line);
  if (!c["id"].is_number_integer() || c["id"].get<long long>() != static_cast<long long>(index)) {
    throw ParseError("client ids must be 0..n-1 in order; expected id " + std::to_string(index),
                     key_line(lines, index, "id"));
  }

  ClientProfile p;
  if (!c.contains("availability")) throw ParseError("client is missing 'availability'", line);
  const json& av = c["availability"];
  const std::size_t av_line = key_line(lines, index, "availability");
  if (!av.is_array()) throw ParseError("'availability' must be an array of [start, end)", av_line);
  AvailabilityIntervals iv;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const std::size_t l =
        index < lines.intervals.size() && i < lines.intervals[index].size()
            ? lines.intervals[index][i]
            : av_line;
    const json& pair = av[i];
    if (!pair.is_array() || pair.size() != 2) {
      throw ParseError("availability interval must be [start, end]", l);
    }
    Interval in{parse_time(pair[0], l, "start"), parse_time(pair[1], l, "end")};
    if (in.end <= in.start) throw ParseError("availability interval must have end > start", l);
    if (!iv.intervals.empty() && in.start < iv.intervals.back().end) {
      throw ParseError("availability intervals must be sorted and non-overlapping", l);
    }
    iv.intervals.push_back(in);
  }
  p.availability = std::move(iv);

  try {
    if (c.contains("latency")) {
      const json& lat = c["latency"];
      if (lat.is_array()) {
        PerRoundLatency pr;
        for (const auto& v : lat) {
          if (!v.is_number_unsigned() || v.get<VirtualTime>() == 0) {
            throw ConfigError("per-round latencies must be integers >= 1");
          }
          pr.values.push_back(v.get<VirtualTime>());
        }
        p.latency = std::move(pr);
      } else {
        p.latency = latency_from_json(lat);
      }
    }
    if (c.contains("completeness")) p.completeness = completeness_from_json(c["completeness"]);
    p.drop_prob = util::get_number(c, "drop_prob", 0.0);
    p.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const ConfigError& e) {
    std::string key = "latency";
    const std::string msg = e.what();
    if (msg.find("drop_prob") != std::string::npos) key = "drop_prob";
    if (msg.find("completeness") != std::string::npos) key = "completeness";
    throw ParseError("client " + std::to_string(index) + ": " + msg, key_line(lines, index, key));
  }
  return p;
}

}  // namespace

std::vector<ClientProfile> parse_trace(std::string_view text) {
  LineMap lines;
  const json doc = parse_with_lines(text, lines);
  if (!doc.is_object()) throw ParseError("trace must be a JSON object", lines.root);
  for (const auto& item : doc.items()) {
    if (item.key() != "schema_version" && item.key() != "clients") {
      throw ParseError("unknown trace key '" + item.key() + "'", lines.top_keys[item.key()]);
    }
  }
  if (!doc.contains("schema_version")) throw ParseError("trace is missing 'schema_version'", lines.root);
  if (doc["schema_version"] != kTraceSchemaVersion) {
    throw ParseError("unsupported trace schema_version (expected " +
                         std::to_string(kTraceSchemaVersion) + ")",
                     lines.top_keys["schema_version"]);
  }
  if (!doc.contains("clients")) throw ParseError("trace is missing 'clients'", lines.root);
  const json& clients = doc["clients"];
  if (!clients.is_array()) throw ParseError("'clients' must be an array", lines.top_keys["clients"]);
  if (clients.empty()) throw ParseError("trace has an empty client list", lines.top_keys["clients"]);
  std::vector<ClientProfile> out;
  out.reserve(clients.size());
  for (std::size_t i = 0; i < clients.size(); ++i) out.push_back(parse_client(clients[i], i, lines));
  return out;
}

std::vector<ClientProfile> load_trace(const std::filesystem::path& path) {
  std::string text;
  try {
    text = util::read_text_file(path);
  } catch (const Error& e) {
    throw ConfigError("cannot read trace '" + path.string() + "': " + e.what());
  }
  try {
    return parse_trace(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.line());
  }
}

}  // namespace fedsim::sim
