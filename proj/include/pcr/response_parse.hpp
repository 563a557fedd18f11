#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pcr/errors.hpp"

namespace pcr {

struct FqnMapping {
  std::string simple_name;
  std::string fqn;
  // Set when `fqn` does not end with "." + simple_name.
  bool suspect = false;

  bool operator==(const FqnMapping&) const = default;
};

// Builds a mapping and computes the suspect flag.
FqnMapping make_mapping(std::string simple_name, std::string fqn);

struct FqnParseResult {
  std::vector<FqnMapping> mappings;
  // Requested names the response did not map.
  std::vector<std::string> misses;
};

class ResponseParseError : public Error {
 public:
  using Error::Error;
};

// De-duplicated identifiers in response order. Accepts newline, comma and
// bullet separated lists; strips quotes, backticks and code fences.
std::vector<std::string> parse_simple_names(std::string_view response);

// One mapping per requested name found in the response. Understands
// "Name -> a.b.Name", "Name: a.b.Name", "Name = a.b.Name" and bare
// qualified names whose last segment is a requested name.
FqnParseResult parse_fqn_mappings(std::string_view response, const std::vector<std::string>& requested);

// The largest fenced code block, else the whole response trimmed. Throws
// ResponseParseError for a blank response.
std::string parse_fixed_code(std::string_view response);

}  // namespace pcr
