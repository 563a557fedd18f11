#include "pcr/diagnostics.hpp"

#include <cctype>
#include <mutex>

#include "pcr/errors.hpp"
#include "pcr/text.hpp"
#include "yaml_util.hpp"

namespace pcr {

// Generated from data/rules/diagnostics.yaml at configure time.
extern const char* const kBuiltinRulesYaml;

std::string_view to_string(DiagnosticCategory category) {
  switch (category) {
    case DiagnosticCategory::NonFqn: return "non-fqn";
    case DiagnosticCategory::LastMileSyntax: return "last-mile-syntax";
    case DiagnosticCategory::Other: return "other";
  }
  return "other";
}

DiagnosticCategory parse_category(std::string_view s) {
  auto lower = text::to_lower(s);
  for (char& c : lower) {
    if (c == '_') c = '-';
  }
  for (auto c : {DiagnosticCategory::NonFqn, DiagnosticCategory::LastMileSyntax, DiagnosticCategory::Other}) {
    if (to_string(c) == lower) return c;
  }
  throw ValidationError("unknown diagnostic category '" + std::string(s) +
                        "' (expected non-fqn, last-mile-syntax or other)");
}

std::string_view to_string(MessageSource source) {
  switch (source) {
    case MessageSource::Any: return "any";
    case MessageSource::Janino: return "janino";
    case MessageSource::Javac: return "javac";
    case MessageSource::Python: return "python";
  }
  return "any";
}

MessageSource parse_message_source(std::string_view s) {
  auto lower = text::to_lower(s);
  for (auto m : {MessageSource::Any, MessageSource::Janino, MessageSource::Javac, MessageSource::Python}) {
    if (to_string(m) == lower) return m;
  }
  throw ValidationError("unknown compiler '" + std::string(s) + "' (expected any, janino, javac or python)");
}

RuleTable RuleTable::parse(std::string_view yaml_text, const std::string& origin) {
  using namespace yamlutil;
  auto root = yamlutil::load(yaml_text, origin);
  if (!root.IsMap()) schema_error(origin, root, "rule table must be a mapping");
  reject_unknown_keys(origin, root, {"version", "rules"});

  RuleTable table;
  if (!root["version"]) schema_error(origin, root, "missing required key 'version'");
  table.version_ = scalar_as<int>(origin, root["version"], "version");

  auto rules = root["rules"];
  if (!rules) schema_error(origin, root, "missing required key 'rules'");
  if (!rules.IsSequence()) schema_error(origin, rules, "'rules' must be a list");
  for (const auto& node : rules) {
    if (!node.IsMap()) schema_error(origin, node, "each rule must be a mapping");
    reject_unknown_keys(origin, node, {"category", "compiler", "contains", "regex"});
    Rule rule;
    try {
      rule.category = parse_category(required_string(origin, node, "category"));
      if (node["compiler"]) rule.source = parse_message_source(required_string(origin, node, "compiler"));
    } catch (const ValidationError& e) {
      // Errors from the parse_* helpers have no position yet.
      if (text::starts_with(e.what(), origin)) throw;
      schema_error(origin, node, e.what());
    }
    bool has_contains = static_cast<bool>(node["contains"]);
    bool has_regex = static_cast<bool>(node["regex"]);
    if (has_contains == has_regex) schema_error(origin, node, "a rule needs exactly one of 'contains' or 'regex'");
    if (has_contains) {
      rule.contains = text::to_lower(required_string(origin, node, "contains"));
      if (rule.contains.empty()) schema_error(origin, node["contains"], "'contains' must not be empty");
    } else {
      rule.pattern = required_string(origin, node, "regex");
      try {
        rule.regex = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        schema_error(origin, node["regex"], std::string("invalid regex: ") + e.what());
      }
    }
    table.rules_.push_back(std::move(rule));
  }
  return table;
}

RuleTable RuleTable::load(const std::string& path) { return parse(text::read_file(path), path); }

std::shared_ptr<const RuleTable> RuleTable::builtin() {
  static std::shared_ptr<const RuleTable> table =
      std::make_shared<const RuleTable>(parse(kBuiltinRulesYaml, "<builtin diagnostics.yaml>"));
  return table;
}

DiagnosticCategory RuleTable::classify(std::string_view message, MessageSource source) const {
  std::string lower = text::to_lower(message);
  for (const auto& rule : rules_) {
    if (source != MessageSource::Any && rule.source != MessageSource::Any && rule.source != source) continue;
    if (!rule.contains.empty()) {
      if (lower.find(rule.contains) != std::string::npos) return rule.category;
    } else if (std::regex_search(lower.begin(), lower.end(), rule.regex)) {
      return rule.category;
    }
  }
  return DiagnosticCategory::Other;
}

DiagnosticCategory classify_diagnostic(std::string_view raw_message) {
  return RuleTable::builtin()->classify(raw_message);
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

// "path:LINE: error: msg" -> (path, line, msg). Paths may contain ':'.
bool parse_error_header(std::string_view line, RawDiagnostic& out) {
  static constexpr std::string_view kTag = ": error: ";
  auto tag = line.find(kTag);
  if (tag == std::string_view::npos) return false;
  auto head = line.substr(0, tag);
  auto colon = head.rfind(':');
  if (colon == std::string_view::npos || !all_digits(head.substr(colon + 1))) return false;
  out.file = std::string(head.substr(0, colon));
  out.line = std::stoi(std::string(head.substr(colon + 1)));
  out.column.reset();
  out.message = text::trim_copy(line.substr(tag + kTag.size()));
  return true;
}

bool is_caret_line(std::string_view line) {
  auto t = text::trim(line);
  return t == "^";
}

}  // namespace

std::vector<RawDiagnostic> parse_javac_output(std::string_view output) {
  std::vector<RawDiagnostic> out;
  auto lines = text::split_lines(output);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    RawDiagnostic d;
    if (!parse_error_header(line, d)) continue;
    // Continuation lines ("  symbol: class X", "  location: ...") belong to
    // the message; the echoed source line and caret give the column.
    std::size_t j = i + 1;
    std::vector<std::string> extra;
    while (j < lines.size()) {
      std::string next = lines[j];
      if (!next.empty() && next.back() == '\r') next.pop_back();
      RawDiagnostic probe;
      if (parse_error_header(next, probe)) break;
      if (is_caret_line(next)) {
        d.column = static_cast<int>(next.find('^')) + 1;
        ++j;
        break;
      }
      auto t = text::trim(next);
      if (text::starts_with(t, "symbol:") || text::starts_with(t, "location:")) extra.push_back(std::string(t));
      ++j;
    }
    // Only symbol/location detail lines are kept; they follow the caret in
    // javac output, so scan the run after it as well.
    while (j < lines.size()) {
      auto t = text::trim(lines[j]);
      if (!(text::starts_with(t, "symbol:") || text::starts_with(t, "location:"))) break;
      extra.push_back(std::string(t));
      ++j;
    }
    for (const auto& e : extra) d.message += " (" + e + ")";
    out.push_back(std::move(d));
    i = j - 1;
  }
  return out;
}

}  // namespace pcr
