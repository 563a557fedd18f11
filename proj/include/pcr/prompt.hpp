#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcr/errors.hpp"

namespace pcr {

// The four prompt-based units of the chain.
enum class UnitName { SimplenameExtraction, SimplenameToFqn, ErrorMessageEnhance, CodeFix };

std::string_view to_string(UnitName unit);
UnitName parse_unit_name(std::string_view s);

struct Example {
  std::string input;
  std::string output;

  bool operator==(const Example&) const = default;
};

// One named input slot of a unit template. `label` is the prose label the
// field is rendered under ("Code", "Simple names", ...).
struct InputField {
  std::string name;
  std::string label;
};

inline constexpr std::size_t kExamplesPerUnit = 5;

struct UnitSpec {
  UnitName name = UnitName::SimplenameExtraction;
  std::string task_description;
  std::vector<Example> examples;
  std::vector<InputField> fields;

  // Throws ValidationError when the template breaks an invariant.
  void validate() const;
};

enum class ExampleOrder { Fixed, SimilarFirst, DissimilarFirst };
enum class Representation { NaturalLanguage, SemiStructured };

std::string_view to_string(ExampleOrder order);
std::string_view to_string(Representation rep);
ExampleOrder parse_example_order(std::string_view s);
Representation parse_representation(std::string_view s);

// Layout knobs of a rendered unit prompt. The defaults are the basic
// configuration: task description on, fixed order, natural language.
struct PromptStyle {
  bool include_task_description = true;
  ExampleOrder example_order = ExampleOrder::Fixed;
  Representation representation = Representation::NaturalLanguage;

  bool operator==(const PromptStyle&) const = default;
};

std::string describe(const PromptStyle& style);

struct RenderedPrompt {
  std::string unit_name;
  std::string text;
  std::string content_hash;

  static RenderedPrompt make(std::string unit_name, std::string text);
};

class RenderError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

using InputFields = std::map<std::string, std::string>;

RenderedPrompt render_prompt(const UnitSpec& spec, const InputFields& input, const PromptStyle& style);
RenderedPrompt render_direct_prompt(std::string_view code);
RenderedPrompt render_cot_prompt(std::string_view code);

// The input block exactly as it appears in a rendered prompt (fields in
// template order under their labels). Example ordering is computed against it.
std::string render_input_block(const UnitSpec& spec, const InputFields& input);

// Number of example blocks in a rendered unit prompt, in either representation.
std::size_t count_example_blocks(std::string_view prompt_text);

// Bag-of-tokens cosine over lowercase ASCII alphanumeric runs; 0 when either
// side has no tokens.
double cosine_similarity(std::string_view a, std::string_view b);

// Fixed keeps template order. SimilarFirst sorts by descending similarity to
// `input_text`, DissimilarFirst by ascending, so the most similar example ends
// up next to the input block. Ties keep template order.
std::vector<Example> order_examples(std::span<const Example> examples, std::string_view input_text,
                                    ExampleOrder order);

// Unit template files are YAML documents:
//   name: simplename-extraction
//   task_description: ...
//   fields: [{name: code, label: Code}]
//   examples: [{input: ..., output: ...}, x5]
// Schema errors carry "<origin>:<line>:<column>: ".
UnitSpec parse_unit_spec(std::string_view yaml_text, const std::string& origin);
UnitSpec load_unit_spec(const std::string& path);

class UnitLibrary {
 public:
  // Loads every *.yaml in `dir`; all four units must be present exactly once.
  static UnitLibrary load_dir(const std::string& dir);
  static UnitLibrary from_specs(std::vector<UnitSpec> specs);

  const UnitSpec& get(UnitName unit) const;

 private:
  std::map<UnitName, UnitSpec> specs_;
};

}  // namespace pcr
