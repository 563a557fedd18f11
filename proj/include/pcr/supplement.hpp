#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pcr/response_parse.hpp"

namespace pcr {

struct SupplementResult {
  std::string code;
  std::vector<std::string> added;    // fqns imported, sorted
  std::vector<std::string> skipped;  // "<simple> -> <fqn>: reason"
};

// The FQN Supplement unit. Inserts one `import <fqn>;` per usable mapping
// directly after the package declaration (else at the top), sorted.
// Mappings are skipped when suspect or malformed, when they name java.lang
// types, when the simple name is already imported (explicitly or through a
// wildcard of the same package), when the code already uses the qualified
// name, when another mapping claims the same simple name, or on duplicates.
// Every other line is left byte-identical.
SupplementResult supplement_fqns_detailed(std::string_view code, const std::vector<FqnMapping>& mappings);

std::string supplement_fqns(std::string_view code, const std::vector<FqnMapping>& mappings);

}  // namespace pcr
