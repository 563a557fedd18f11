#pragma once

#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace pcr {

enum class DiagnosticCategory { NonFqn, LastMileSyntax, Other };

std::string_view to_string(DiagnosticCategory category);
DiagnosticCategory parse_category(std::string_view s);

// Producer of a diagnostic message. Any means unknown.
enum class MessageSource { Any, Janino, Javac, Python };

std::string_view to_string(MessageSource source);
MessageSource parse_message_source(std::string_view s);

struct Diagnostic {
  std::string raw_message;
  std::optional<int> line;    // 1-based, snippet coordinates
  std::optional<int> column;  // 1-based
  DiagnosticCategory category = DiagnosticCategory::Other;
  // Found only after masking an earlier syntax error (see Judge).
  bool recovered = false;

  bool operator==(const Diagnostic&) const = default;
};

// Ordered message-to-category rules. The first matching rule wins; messages
// no rule matches are Other.
class RuleTable {
 public:
  struct Rule {
    DiagnosticCategory category = DiagnosticCategory::Other;
    MessageSource source = MessageSource::Any;
    std::string contains;  // lowercase; empty when `pattern` is used
    std::string pattern;
    std::regex regex;
  };

  // YAML document with `version` and `rules`; errors carry origin:line:col.
  static RuleTable parse(std::string_view yaml_text, const std::string& origin);
  static RuleTable load(const std::string& path);
  // The table shipped in data/rules/diagnostics.yaml, compiled in.
  static std::shared_ptr<const RuleTable> builtin();

  // Rules tagged with another compiler are skipped when `source` is known.
  DiagnosticCategory classify(std::string_view message, MessageSource source = MessageSource::Any) const;

  int version() const { return version_; }
  const std::vector<Rule>& rules() const { return rules_; }

 private:
  int version_ = 0;
  std::vector<Rule> rules_;
};

// Classification against the built-in table.
DiagnosticCategory classify_diagnostic(std::string_view raw_message);

struct RawDiagnostic {
  std::string file;
  std::optional<int> line;
  std::optional<int> column;
  std::string message;
};

// Parses javac's "File.java:LINE: error: MESSAGE" output. The column is taken
// from the caret line that follows the echoed source line. Warnings and notes
// are ignored.
std::vector<RawDiagnostic> parse_javac_output(std::string_view output);

}  // namespace pcr
