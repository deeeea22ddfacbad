#include "fedsim/util/json_util.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fedsim/error.hpp"

namespace fedsim::util {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
  if (!obj.is_object()) throw ConfigError(std::string(context) + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto a : allowed) {
      if (item.key() == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError(std::string(context) + ": unknown key '" + item.key() + "'");
    }
  }
}

namespace {
const json* find(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}
}  // namespace

double get_number(const json& obj, std::string_view key, double fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) throw ConfigError("'" + std::string(key) + "' must be a number");
  return v->get<double>();
}

long long get_integer(const json& obj, std::string_view key, long long fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (v->is_number_integer()) return v->get<long long>();
  if (v->is_number_float()) {
    const double d = v->get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  throw ConfigError("'" + std::string(key) + "' must be an integer");
}

std::string get_string(const json& obj, std::string_view key, const std::string& fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) throw ConfigError("'" + std::string(key) + "' must be a string");
  return v->get<std::string>();
}

bool get_bool(const json& obj, std::string_view key, bool fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) throw ConfigError("'" + std::string(key) + "' must be true or false");
  return v->get<bool>();
}

json parse_scalar(std::string_view text) {
  if (text == "true") return true;
  if (text == "false") return false;
  if (text == "null") return nullptr;
  long long i = 0;
  auto [ip, iec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (iec == std::errc() && ip == text.data() + text.size() && !text.empty()) return i;
  double d = 0.0;
  auto [dp, dec] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (dec == std::errc() && dp == text.data() + text.size() && !text.empty()) return d;
  return std::string(text);
}

json parse_kv_list(std::string_view text) {
  json out = json::object();
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("expected key=value, got '" + std::string(item) + "'");
    }
    out[std::string(item.substr(0, eq))] = parse_scalar(item.substr(eq + 1));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for " + path.string());
}

void set_dotted(json& obj, std::string_view dotted_key, const json& value) {
  const std::string dotted(dotted_key);
  json* node = &obj;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot - start);
    if (part.empty()) throw ConfigError("malformed key '" + dotted + "'");
    if (!node->is_object()) throw ConfigError("'" + dotted + "' does not name a nested field");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

}  // namespace fedsim::util
