#include "pcr/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <unordered_map>

#include "pcr/text.hpp"
#include "yaml_util.hpp"

namespace pcr {

std::string_view to_string(UnitName unit) {
  switch (unit) {
    case UnitName::SimplenameExtraction: return "simplename-extraction";
    case UnitName::SimplenameToFqn: return "simplename-to-fqn";
    case UnitName::ErrorMessageEnhance: return "error-message-enhance";
    case UnitName::CodeFix: return "code-fix";
  }
  return "unknown";
}

UnitName parse_unit_name(std::string_view s) {
  for (auto u : {UnitName::SimplenameExtraction, UnitName::SimplenameToFqn, UnitName::ErrorMessageEnhance,
                 UnitName::CodeFix}) {
    if (to_string(u) == s) return u;
  }
  throw ValidationError("unknown unit '" + std::string(s) +
                        "' (expected simplename-extraction, simplename-to-fqn, error-message-enhance or code-fix)");
}

std::string_view to_string(ExampleOrder order) {
  switch (order) {
    case ExampleOrder::Fixed: return "fixed";
    case ExampleOrder::SimilarFirst: return "similar-first";
    case ExampleOrder::DissimilarFirst: return "dissimilar-first";
  }
  return "fixed";
}

std::string_view to_string(Representation rep) {
  return rep == Representation::NaturalLanguage ? "natural-language" : "semi-structured";
}

ExampleOrder parse_example_order(std::string_view s) {
  for (auto o : {ExampleOrder::Fixed, ExampleOrder::SimilarFirst, ExampleOrder::DissimilarFirst}) {
    if (to_string(o) == s) return o;
  }
  throw ValidationError("unknown example order '" + std::string(s) +
                        "' (expected fixed, similar-first or dissimilar-first)");
}

Representation parse_representation(std::string_view s) {
  for (auto r : {Representation::NaturalLanguage, Representation::SemiStructured}) {
    if (to_string(r) == s) return r;
  }
  throw ValidationError("unknown representation '" + std::string(s) +
                        "' (expected natural-language or semi-structured)");
}

std::string describe(const PromptStyle& style) {
  return std::string(style.include_task_description ? "task-description" : "no-task-description") + "/" +
         std::string(to_string(style.example_order)) + "/" + std::string(to_string(style.representation));
}

void UnitSpec::validate() const {
  auto unit = std::string(to_string(name));
  if (text::trim(task_description).empty()) throw ValidationError(unit + ": task_description must not be empty");
  if (examples.size() != kExamplesPerUnit) {
    throw ValidationError(unit + ": expected exactly 5 examples, found " + std::to_string(examples.size()));
  }
  if (fields.empty()) throw ValidationError(unit + ": at least one input field is required");
  std::set<std::string> seen;
  for (const auto& f : fields) {
    if (f.name.empty() || f.label.empty()) throw ValidationError(unit + ": input fields need a name and a label");
    if (!seen.insert(f.name).second) throw ValidationError(unit + ": duplicate input field '" + f.name + "'");
  }
}

RenderedPrompt RenderedPrompt::make(std::string unit_name, std::string text) {
  auto hash = text::sha256_hex(text);
  return RenderedPrompt{std::move(unit_name), std::move(text), std::move(hash)};
}

std::string render_input_block(const UnitSpec& spec, const InputFields& input) {
  std::string block;
  for (const auto& field : spec.fields) {
    auto it = input.find(field.name);
    if (it == input.end()) {
      throw RenderError(std::string(to_string(spec.name)) + ": missing required input field '" + field.name + "'");
    }
    if (!block.empty()) block += "\n";
    block += field.label + ":\n" + text::trim_copy(it->second);
  }
  return block;
}

namespace {

void append_example(std::string& out, std::size_t number, const Example& ex, Representation rep) {
  if (rep == Representation::NaturalLanguage) {
    out += "Example " + std::to_string(number) + ":\n";
    out += "Input:\n" + text::trim_copy(ex.input) + "\n";
    out += "Output:\n" + text::trim_copy(ex.output) + "\n\n";
  } else {
    out += "<Example>\n";
    out += "<Input>\n" + text::trim_copy(ex.input) + "\n</Input>\n";
    out += "<Output>\n" + text::trim_copy(ex.output) + "\n</Output>\n";
    out += "</Example>\n\n";
  }
}

std::unordered_map<std::string, double> token_counts(std::string_view s) {
  std::unordered_map<std::string, double> counts;
  std::string token;
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (u < 128 && std::isalnum(u)) {
      token += static_cast<char>(std::tolower(u));
    } else if (!token.empty()) {
      counts[token] += 1.0;
      token.clear();
    }
  }
  if (!token.empty()) counts[token] += 1.0;
  return counts;
}

}  // namespace

RenderedPrompt render_prompt(const UnitSpec& spec, const InputFields& input, const PromptStyle& style) {
  auto block = render_input_block(spec, input);
  auto examples = order_examples(spec.examples, block, style.example_order);

  std::string out;
  if (style.include_task_description) {
    auto desc = text::trim_copy(spec.task_description);
    if (style.representation == Representation::NaturalLanguage) {
      out += desc + "\n\n";
    } else {
      out += "<Task Description> " + desc + "</Task Description>\n\n";
    }
  }
  for (std::size_t i = 0; i < examples.size(); ++i) append_example(out, i + 1, examples[i], style.representation);
  if (style.representation == Representation::NaturalLanguage) {
    out += "Input:\n" + block + "\nOutput:";
  } else {
    out += "<Input>\n" + block + "\n</Input>\n<Output>";
  }
  return RenderedPrompt::make(std::string(to_string(spec.name)), std::move(out));
}

RenderedPrompt render_direct_prompt(std::string_view code) {
  if (text::trim(code).empty()) throw RenderError("direct prompt: code must not be empty");
  return RenderedPrompt::make("direct", "make this code compilable\n\n" + text::trim_copy(code));
}

RenderedPrompt render_cot_prompt(std::string_view code) {
  if (text::trim(code).empty()) throw RenderError("chain-of-thought prompt: code must not be empty");
  std::string out =
      "Make the following partial code compilable. Work through these steps in order:\n"
      "1. Simplename Extraction: extract the simple names of the types used in the code.\n"
      "2. Simplename to FQN: convert each simple name to its fully qualified name (FQN).\n"
      "3. FQN Supplement: add the FQNs to the code as import declarations.\n"
      "4. Error Judgement: check whether the code still has compilation errors and list the error messages.\n"
      "5. Error Message Enhance: explain in plain English why each error occurs and how to fix it.\n"
      "6. Code Fix: fix the errors in the code based on the error message explanation.\n"
      "Return the final code in a single code block.\n\n"
      "Code:\n";
  out += text::trim_copy(code);
  return RenderedPrompt::make("cot", std::move(out));
}

std::size_t count_example_blocks(std::string_view prompt_text) {
  std::size_t count = 0;
  for (const auto& line : text::split_lines(prompt_text)) {
    if (line == "<Example>") {
      ++count;
      continue;
    }
    if (text::starts_with(line, "Example ") && text::ends_with(line, ":")) {
      auto digits = std::string_view(line).substr(8, line.size() - 9);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        ++count;
      }
    }
  }
  return count;
}

double cosine_similarity(std::string_view a, std::string_view b) {
  auto ca = token_counts(a);
  auto cb = token_counts(b);
  if (ca.empty() || cb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [tok, n] : ca) {
    na += n * n;
    if (auto it = cb.find(tok); it != cb.end()) dot += n * it->second;
  }
  for (const auto& [tok, n] : cb) nb += n * n;
  double score = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(score, 0.0, 1.0);
}

std::vector<Example> order_examples(std::span<const Example> examples, std::string_view input_text,
                                    ExampleOrder order) {
  std::vector<Example> out(examples.begin(), examples.end());
  if (order == ExampleOrder::Fixed) return out;

  std::vector<double> score(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) score[i] = cosine_similarity(examples[i].input, input_text);
  std::vector<std::size_t> idx(examples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return order == ExampleOrder::SimilarFirst ? score[x] > score[y] : score[x] < score[y];
  });
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = examples[idx[i]];
  return out;
}

// ---------------------------------------------------------------------------
// Template files

using yamlutil::reject_unknown_keys;
using yamlutil::required_string;
using yamlutil::schema_error;

UnitSpec parse_unit_spec(std::string_view yaml_text, const std::string& origin) {
  YAML::Node root = yamlutil::load(yaml_text, origin);
  if (!root.IsMap()) schema_error(origin, root, "unit template must be a mapping");
  reject_unknown_keys(origin, root, {"name", "task_description", "fields", "examples"});

  UnitSpec spec;
  auto name_node = root["name"];
  auto name = required_string(origin, root, "name");
  try {
    spec.name = parse_unit_name(name);
  } catch (const ValidationError& e) {
    schema_error(origin, name_node, e.what());
  }
  spec.task_description = required_string(origin, root, "task_description");
  if (text::trim(spec.task_description).empty()) {
    schema_error(origin, root["task_description"], "task_description must not be empty");
  }

  auto fields = root["fields"];
  if (!fields) schema_error(origin, root, "missing required key 'fields'");
  if (!fields.IsSequence() || fields.size() == 0) schema_error(origin, fields, "'fields' must be a non-empty list");
  for (const auto& f : fields) {
    if (!f.IsMap()) schema_error(origin, f, "each field must be a mapping with 'name' and 'label'");
    reject_unknown_keys(origin, f, {"name", "label"});
    spec.fields.push_back({required_string(origin, f, "name"), required_string(origin, f, "label")});
  }

  auto examples = root["examples"];
  if (!examples) schema_error(origin, root, "missing required key 'examples'");
  if (!examples.IsSequence()) schema_error(origin, examples, "'examples' must be a list");
  if (examples.size() != kExamplesPerUnit) {
    schema_error(origin, examples, "expected exactly 5 examples, found " + std::to_string(examples.size()));
  }
  for (const auto& ex : examples) {
    if (!ex.IsMap()) schema_error(origin, ex, "each example must be a mapping with 'input' and 'output'");
    reject_unknown_keys(origin, ex, {"input", "output"});
    spec.examples.push_back({required_string(origin, ex, "input"), required_string(origin, ex, "output")});
  }

  try {
    spec.validate();
  } catch (const ValidationError& e) {
    schema_error(origin, root, e.what());
  }
  return spec;
}

UnitSpec load_unit_spec(const std::string& path) { return parse_unit_spec(text::read_file(path), path); }

UnitLibrary UnitLibrary::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError(dir, "unit template directory not found");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".yaml") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<UnitSpec> specs;
  for (const auto& p : paths) specs.push_back(load_unit_spec(p));
  return from_specs(std::move(specs));
}

UnitLibrary UnitLibrary::from_specs(std::vector<UnitSpec> specs) {
  UnitLibrary lib;
  for (auto& s : specs) {
    s.validate();
    auto name = s.name;
    if (!lib.specs_.emplace(name, std::move(s)).second) {
      throw ValidationError("duplicate template for unit '" + std::string(to_string(name)) + "'");
    }
  }
  for (auto u : {UnitName::SimplenameExtraction, UnitName::SimplenameToFqn, UnitName::ErrorMessageEnhance,
                 UnitName::CodeFix}) {
    if (!lib.specs_.count(u)) throw ValidationError("missing template for unit '" + std::string(to_string(u)) + "'");
  }
  return lib;
}

const UnitSpec& UnitLibrary::get(UnitName unit) const { return specs_.at(unit); }

}  // namespace pcr
