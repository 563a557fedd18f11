#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "pcr/diagnostics.hpp"
#include "pcr/snippet.hpp"
#include "pcr/subprocess.hpp"

namespace pcr {

// Enclosing declarations added around a Java-like snippet before compiling.
// Escalation order is AsIs, ClassBody, MethodBody.
enum class WrapLevel { AsIs, ClassBody, MethodBody };

std::string_view to_string(WrapLevel level);
WrapLevel parse_wrap_level(std::string_view s);
inline constexpr WrapLevel kWrapEscalation[] = {WrapLevel::AsIs, WrapLevel::ClassBody, WrapLevel::MethodBody};

struct JudgeReport {
  std::vector<Diagnostic> diagnostics;
  WrapLevel wrap_level_used = WrapLevel::AsIs;
  int compiler_exit = 0;  // 0 iff diagnostics is empty
  double elapsed_ms = 0.0;
  std::string compiler;   // janino, javac or python
  // Whether library jars were on the classpath. Without them a NonFqn
  // diagnostic cannot be told apart from a missing library.
  bool classpath_configured = false;

  bool operator==(const JudgeReport&) const = default;
};

struct ResolutionStatus {
  bool non_fqn_free = true;
  bool syntax_free = true;
  // False when NonFqn diagnostics exist but no library classpath was given.
  bool non_fqn_verifiable = true;
};

ResolutionStatus resolution_status(const JudgeReport& report);

// The Error Judgement unit. Implementations are safe for concurrent callers.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeReport judge(const CodeSnippet& snippet) = 0;
};

enum class JavaCompiler { Janino, Javac };

std::string_view to_string(JavaCompiler c);
JavaCompiler parse_java_compiler(std::string_view s);

struct JudgeOptions {
  JavaCompiler java_compiler = JavaCompiler::Janino;
  // Launchers. Empty means discover: $PCR_JAVA / $PCR_JAVAC, then PATH, then
  // (java only) the runtime bundled with the jdk4py Python package.
  std::string java;
  std::string javac;
  std::string python = "python3";
  // Jar files or directories of jars for library resolution.
  std::vector<std::string> classpath;
  // Janino and its companion jar, and the driver source compiled on first use.
  std::string janino_dir;
  std::string driver_source;
  // Root for per-invocation temp dirs and the compiled driver.
  std::string workspace;
  std::chrono::seconds timeout{30};
  // Mask syntax errors and recompile to surface NonFqn diagnostics that a
  // parse failure hides.
  bool recovery = true;
  int max_recovery_passes = 4;
  // Reuse reports for identical source text.
  bool memoize = true;
  std::shared_ptr<const RuleTable> rules;  // null: built-in table
};

// Options with paths defaulted from a data directory (the repository root or
// an installed share dir): third_party/java/{compiler,classpath} and
// share/java/PcrJudge.java.
JudgeOptions default_judge_options(const std::string& data_dir);

// Expands directories to the *.jar files they contain, sorted.
std::vector<std::string> expand_classpath(const std::vector<std::string>& entries);

// Judge backed by the real compilers. Throws ToolchainMissing lazily on the
// first judge() of a language whose toolchain cannot be found.
std::shared_ptr<Judge> make_compiler_judge(JudgeOptions options);

// Wrapping helpers, exposed for tests.
struct WrappedSource {
  std::string text;
  std::string file_stem;  // the public class name for javac, else PcrSnippet
  int header_lines = 0;   // leading snippet lines kept outside the wrapper
  int prefix_lines = 0;   // wrapper lines inserted after the header
  int snippet_lines = 0;
};

WrappedSource wrap_java(std::string_view source, WrapLevel level);
// Maps a line of the wrapped file back into [1, snippet_lines].
int map_line(const WrappedSource& w, int wrapped_line);

}  // namespace pcr
