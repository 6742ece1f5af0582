#pragma once

// JSON loader for external eigen-data files.
//
// A form record is an object
//   {"k": int, "M": int, "lambda": {"2": float, ...},
//    "ramified_signs": {"p": +-1, ...}, "z_global": float}
// with ramified_signs and z_global optional (z_global defaults to 1).
// A file holds either a single record or {"forms": [record, ...]}.
// Structural errors raise std::invalid_argument with the offending key.

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "traceform/arith.hpp"
#include "traceform/basis.hpp"
#include "traceform/newform_sums.hpp"

namespace traceform::eigen_json {

using u64 = std::uint64_t;

namespace detail {

inline u64 parse_prime_key(const std::string& key, const char* where) {
  if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument(std::string("eigen-data: ") + where + " key \"" + key +
                                "\" is not a positive integer");
  }
  try {
    return std::stoull(key);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("eigen-data: ") + where + " key \"" + key +
                                "\" is out of range");
  }
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::invalid_argument(std::string("eigen-data: missing required field \"") + key + "\"");
  }
  return *it;
}

}  // namespace detail

// Parses one form record into a validated WeightedForm.
inline newform_sums::WeightedForm parse_form(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("eigen-data: form record must be an object");

  const auto& jk = detail::require(j, "k");
  const auto& jm = detail::require(j, "M");
  const auto& jl = detail::require(j, "lambda");
  if (!jk.is_number_integer()) throw std::invalid_argument("eigen-data: \"k\" must be an integer");
  if (!jm.is_number_integer() || jm.get<std::int64_t>() <= 0) {
    throw std::invalid_argument("eigen-data: \"M\" must be a positive integer");
  }
  if (!jl.is_object()) throw std::invalid_argument("eigen-data: \"lambda\" must be an object");

  std::map<u64, double> lambda;
  for (const auto& [key, val] : jl.items()) {
    if (!val.is_number()) {
      throw std::invalid_argument("eigen-data: lambda[\"" + key + "\"] must be a number");
    }
    lambda[detail::parse_prime_key(key, "lambda")] = val.get<double>();
  }

  std::map<u64, int> signs;
  if (auto it = j.find("ramified_signs"); it != j.end()) {
    if (!it->is_object()) throw std::invalid_argument("eigen-data: \"ramified_signs\" must be an object");
    for (const auto& [key, val] : it->items()) {
      if (!val.is_number_integer()) {
        throw std::invalid_argument("eigen-data: ramified_signs[\"" + key + "\"] must be +1 or -1");
      }
      int s = val.get<int>();
      if (s != 1 && s != -1) {
        throw std::invalid_argument("eigen-data: ramified_signs[\"" + key + "\"] must be +1 or -1");
      }
      signs[detail::parse_prime_key(key, "ramified_signs")] = s;
    }
  }

  newform_sums::WeightedForm out;
  out.f = basis::NewformLocalData::validated(jk.get<int>(),
                                             arith::FactoredInteger::factor(jm.get<u64>()),
                                             std::move(lambda), signs);
  if (auto it = j.find("z_global"); it != j.end()) {
    if (!it->is_number()) throw std::invalid_argument("eigen-data: \"z_global\" must be a number");
    double z = it->get<double>();
    if (!(z > 0.0) || !std::isfinite(z)) {
      throw std::invalid_argument("eigen-data: \"z_global\" must be positive and finite");
    }
    out.z_global = z;
  }
  return out;
}

// Parses a whole document: a single record or {"forms": [...]}.
inline std::vector<newform_sums::WeightedForm> parse_document(const nlohmann::json& j) {
  std::vector<newform_sums::WeightedForm> out;
  if (j.is_object() && j.contains("forms")) {
    const auto& arr = j.at("forms");
    if (!arr.is_array()) throw std::invalid_argument("eigen-data: \"forms\" must be an array");
    for (const auto& rec : arr) out.push_back(parse_form(rec));
  } else {
    out.push_back(parse_form(j));
  }
  if (out.empty()) throw std::invalid_argument("eigen-data: no form records found");
  return out;
}

inline std::vector<newform_sums::WeightedForm> load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("eigen-data: cannot open file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("eigen-data: parse failure in " + path + ": " + e.what());
  }
  return parse_document(j);
}

}  // namespace traceform::eigen_json
