#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

namespace fedsim::util {

using json = nlohmann::json;

// Throws ConfigError naming the first key of `obj` not in `allowed`.
void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

// Typed field access with ConfigError on wrong type.
double get_number(const json& obj, std::string_view key, double fallback);
long long get_integer(const json& obj, std::string_view key, long long fallback);
std::string get_string(const json& obj, std::string_view key, const std::string& fallback);
bool get_bool(const json& obj, std::string_view key, bool fallback);

// Parses "k=v,k2=v2" into an object; numeric-looking values become numbers.
json parse_kv_list(std::string_view text);

// Converts a command-line scalar: integers, reals, true/false, null, else string.
json parse_scalar(std::string_view text);

// Sets obj["a"]["b"] for "a.b", creating intermediate objects.
void set_dotted(json& obj, std::string_view dotted_key, const json& value);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace fedsim::util
