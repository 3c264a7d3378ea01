#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace brmppi {

/// Raised by the file loaders; the message starts with the offending field path.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(const std::string& field, const std::string& what)
      : std::invalid_argument("field '" + field + "': " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

using Json = nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(join_path(path, key), "missing");
  return *it;
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "must be finite");
  return d;
}

inline double number(const Json& j, const std::string& key, const std::string& path) {
  return as_number(require(j, key, path), join_path(path, key));
}

/// Reads j[key] into `out` when present; leaves the default otherwise.
inline void read_opt(const Json& j, const std::string& key, const std::string& path, double& out) {
  if (j.contains(key)) out = as_number(j[key], join_path(path, key));
}

inline void read_opt(const Json& j, const std::string& key, const std::string& path, int& out) {
  if (!j.contains(key)) return;
  const Json& v = j[key];
  if (!v.is_number_integer()) throw SchemaError(join_path(path, key), "expected an integer");
  out = v.get<int>();
}

inline void read_opt(const Json& j, const std::string& key, const std::string& path, bool& out) {
  if (!j.contains(key)) return;
  const Json& v = j[key];
  if (!v.is_boolean()) throw SchemaError(join_path(path, key), "expected true or false");
  out = v.get<bool>();
}

inline void read_opt(const Json& j, const std::string& key, const std::string& path, std::string& out) {
  if (!j.contains(key)) return;
  const Json& v = j[key];
  if (!v.is_string()) throw SchemaError(join_path(path, key), "expected a string");
  out = v.get<std::string>();
}

}  // namespace detail
}  // namespace brmppi
