#pragma once

// Checks used by both the gtest suites and the acceptance runner, so the two
// cannot drift apart.

#include <optional>
#include <string>
#include <vector>

#include "pcr/prompt.hpp"
#include "pcr/response_parse.hpp"

namespace pcr::testing {

// ---- prompt goldens ---------------------------------------------------------

struct GoldenCase {
  std::string name;  // file stem under tests/fixtures/prompts
  RenderedPrompt prompt;
  bool unit_prompt = false;  // expects five example blocks
};

// The four units rendered on the sample snippet in the basic style and the
// four single-factor variants, plus the direct and chain-of-thought prompts.
std::vector<GoldenCase> golden_cases();
std::string golden_path(const std::string& name);
// Empty when the rendered text equals the golden file byte for byte.
std::optional<std::string> golden_mismatch(const GoldenCase& c);

// ---- ordering fixture -------------------------------------------------------

// Five examples whose cosine to kOrderingInput is, in template order,
// 2/sqrt(8), 0, 1, 1/2 and 3/sqrt(12).
extern const char* const kOrderingInput;
std::vector<Example> ordering_examples();
std::vector<double> ordering_expected_scores();

// ---- supplement properties --------------------------------------------------

struct SupplementCase {
  std::string code;
  std::vector<FqnMapping> mappings;
};

std::vector<SupplementCase> generate_supplement_cases(unsigned seed, int count);
// Idempotence, non-import lines unchanged, import count bound. Returns the
// first violated property, if any.
std::optional<std::string> check_supplement_case(const SupplementCase& c);

}  // namespace pcr::testing
