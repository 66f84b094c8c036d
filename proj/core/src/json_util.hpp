#pragma once

// Checked accessors over nlohmann::json that report failures as ParseError
// carrying a JSON-pointer location.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <type_traits>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pressem/errors.hpp"
#include "pressem/fdvv.hpp"

namespace pressem::detail {

using json = nlohmann::json;

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed JSON document");
  }
}

inline std::string child(const std::string& ptr, std::string_view key) {
  return ptr + "/" + std::string(key);
}
inline std::string child(const std::string& ptr, std::size_t index) {
  return ptr + "/" + std::to_string(index);
}

inline const json& require_object(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ParseError(ptr.empty() ? "/" : ptr, "expected an object");
  return j;
}

inline const json& require_field(const json& obj, std::string_view key, const std::string& ptr) {
  require_object(obj, ptr);
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw ParseError(child(ptr, key), "missing required field");
  return *it;
}

inline const json* optional_field(const json& obj, std::string_view key, const std::string& ptr) {
  require_object(obj, ptr);
  const auto it = obj.find(std::string(key));
  return it == obj.end() ? nullptr : &*it;
}

inline double as_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ParseError(ptr, "expected a number");
  return j.get<double>();
}

inline std::int64_t as_integer(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw ParseError(ptr, "expected an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t as_unsigned(const json& j, const std::string& ptr) {
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
    throw ParseError(ptr, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline std::string as_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw ParseError(ptr, "expected a string");
  return j.get<std::string>();
}

inline bool as_bool(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw ParseError(ptr, "expected a boolean");
  return j.get<bool>();
}

inline const json& require_array(const json& j, const std::string& ptr) {
  if (!j.is_array()) throw ParseError(ptr, "expected an array");
  return j;
}

inline std::vector<double> as_number_array(const json& j, const std::string& ptr) {
  require_array(j, ptr);
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], child(ptr, i)));
  return out;
}

inline double number_field(const json& obj, std::string_view key, const std::string& ptr) {
  return as_number(require_field(obj, key, ptr), child(ptr, key));
}

inline double number_field_or(const json& obj, std::string_view key, const std::string& ptr,
                              double fallback) {
  const json* f = optional_field(obj, key, ptr);
  return f ? as_number(*f, child(ptr, key)) : fallback;
}

// Reads optional fields of one object into existing values and rejects keys
// outside `allowed`, so misspelt settings do not pass silently.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string ptr, std::initializer_list<std::string_view> allowed)
      : obj_(require_object(obj, ptr)), ptr_(std::move(ptr)) {
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw ParseError(child(ptr_, key), "unknown field");
      }
    }
  }

  const json* get(std::string_view key) const { return optional_field(obj_, key, ptr_); }
  std::string at(std::string_view key) const { return child(ptr_, key); }

  void read(std::string_view key, double& out) const {
    if (const json* f = get(key)) out = as_number(*f, at(key));
  }
  void read(std::string_view key, bool& out) const {
    if (const json* f = get(key)) out = as_bool(*f, at(key));
  }
  void read(std::string_view key, std::string& out) const {
    if (const json* f = get(key)) out = as_string(*f, at(key));
  }
  void read(std::string_view key, std::vector<double>& out) const {
    if (const json* f = get(key)) out = as_number_array(*f, at(key));
  }
  template <typename U>
    requires(std::is_unsigned_v<U> && !std::is_same_v<U, bool>)
  void read(std::string_view key, U& out) const {
    if (const json* f = get(key)) {
      const auto v = as_unsigned(*f, at(key));
      if (v > std::numeric_limits<U>::max()) throw ParseError(at(key), "value too large");
      out = static_cast<U>(v);
    }
  }

 private:
  const json& obj_;
  std::string ptr_;
};

// Shared by the model and actuation-table documents (model_io.cpp).
std::vector<VelocityBin> parse_bins(const json& arr, const std::string& ptr);
json bins_json(const std::vector<VelocityBin>& bins);

}  // namespace pressem::detail
