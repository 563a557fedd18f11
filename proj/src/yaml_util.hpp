#pragma once

// Schema-checking helpers shared by the YAML readers (unit templates, rule
// table, config file). Errors carry "<origin>:<line>:<column>: ".

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include "pcr/errors.hpp"

namespace pcr::yamlutil {

[[noreturn]] inline void schema_error(const std::string& origin, const YAML::Node& node, const std::string& what) {
  auto mark = node.Mark();
  std::string where = origin;
  if (!mark.is_null()) where += ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1);
  throw ValidationError(where + ": " + what);
}

inline YAML::Node load(std::string_view yaml_text, const std::string& origin) {
  try {
    return YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw ValidationError(origin + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
  }
}

inline std::string required_string(const std::string& origin, const YAML::Node& map, const char* key) {
  auto node = map[key];
  if (!node) schema_error(origin, map, std::string("missing required key '") + key + "'");
  if (!node.IsScalar()) schema_error(origin, node, std::string("'") + key + "' must be a string");
  return node.as<std::string>();
}

inline void reject_unknown_keys(const std::string& origin, const YAML::Node& map,
                                std::initializer_list<const char*> known) {
  for (const auto& kv : map) {
    auto key = kv.first.as<std::string>();
    bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
    if (!ok) schema_error(origin, kv.first, "unknown key '" + key + "'");
  }
}

// Scalar conversion with a positioned error instead of YAML::BadConversion.
template <typename T>
T scalar_as(const std::string& origin, const YAML::Node& node, const char* what) {
  if (!node.IsScalar()) schema_error(origin, node, std::string(what) + " must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    schema_error(origin, node, std::string("invalid value for ") + what + ": '" + node.Scalar() + "'");
  }
}

}  // namespace pcr::yamlutil
