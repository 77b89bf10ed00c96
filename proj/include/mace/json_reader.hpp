#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace mace {

// Strict accessor over one JSON object. Every key read is marked; finish()
// rejects anything left over. Errors are ConfigError naming the dotted path.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string path);

  bool has(const std::string& key) const;
  const std::string& path() const { return path_; }
  std::string path_of(const std::string& key) const;

  // Leaves `out` untouched when the key is absent.
  void get(const std::string& key, int& out);
  void get(const std::string& key, std::size_t& out);
  void get(const std::string& key, double& out);
  void get(const std::string& key, bool& out);
  void get(const std::string& key, std::string& out);
  void get(const std::string& key, std::vector<std::size_t>& out);
  void get(const std::string& key, std::vector<std::string>& out);

  template <class T>
  void require(const std::string& key, T& out) {
    if (!has(key)) fail(path_of(key) + " is required");
    get(key, out);
  }

  // Sub-object reader; the key is marked as seen. An absent key reads as {}.
  JsonReader child(const std::string& key);
  const nlohmann::json& raw(const std::string& key);

  void finish() const;
  [[noreturn]] static void fail(const std::string& msg);

 private:
  const nlohmann::json& value(const std::string& key);

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace mace
