#include "mace/json_reader.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "mace/errors.hpp"

namespace mace {

namespace {
const nlohmann::json& empty_object() {
  static const nlohmann::json e = nlohmann::json::object();
  return e;
}
}  // namespace

JsonReader::JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) fail((path_.empty() ? std::string("document") : path_) + " must be a JSON object");
}

bool JsonReader::has(const std::string& key) const { return j_.contains(key); }

std::string JsonReader::path_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

void JsonReader::fail(const std::string& msg) { throw ConfigError(msg); }

const nlohmann::json& JsonReader::value(const std::string& key) {
  seen_.insert(key);
  return j_.at(key);
}

void JsonReader::get(const std::string& key, int& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (!v.is_number_integer()) fail(path_of(key) + " must be an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) fail(path_of(key) + " is out of range");
  out = static_cast<int>(x);
}

void JsonReader::get(const std::string& key, std::size_t& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (v.is_number_unsigned()) {
    out = v.get<std::size_t>();
    return;
  }
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) fail(path_of(key) + " must be non-negative");
    out = static_cast<std::size_t>(v.get<std::int64_t>());
    return;
  }
  fail(path_of(key) + " must be a non-negative integer");
}

void JsonReader::get(const std::string& key, double& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (!v.is_number()) fail(path_of(key) + " must be a number");
  out = v.get<double>();
  if (!std::isfinite(out)) fail(path_of(key) + " must be finite");
}

void JsonReader::get(const std::string& key, bool& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (!v.is_boolean()) fail(path_of(key) + " must be a boolean");
  out = v.get<bool>();
}

void JsonReader::get(const std::string& key, std::string& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (!v.is_string()) fail(path_of(key) + " must be a string");
  out = v.get<std::string>();
}

void JsonReader::get(const std::string& key, std::vector<std::size_t>& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (!v.is_array()) fail(path_of(key) + " must be an array of non-negative integers");
  std::vector<std::size_t> r;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
      fail(path_of(key) + " must be an array of non-negative integers");
    r.push_back(e.get<std::size_t>());
  }
  out = std::move(r);
}

void JsonReader::get(const std::string& key, std::vector<std::string>& out) {
  if (!has(key)) return;
  const auto& v = value(key);
  if (!v.is_array()) fail(path_of(key) + " must be an array of strings");
  std::vector<std::string> r;
  for (const auto& e : v) {
    if (!e.is_string()) fail(path_of(key) + " must be an array of strings");
    r.push_back(e.get<std::string>());
  }
  out = std::move(r);
}

JsonReader JsonReader::child(const std::string& key) {
  if (!has(key)) return JsonReader(empty_object(), path_of(key));
  return JsonReader(value(key), path_of(key));
}

const nlohmann::json& JsonReader::raw(const std::string& key) { return value(key); }

void JsonReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it)
    if (!seen_.count(it.key())) fail("unknown key '" + path_of(it.key()) + "'");
}

}  // namespace mace
