#include <gtest/gtest.h>

#include <random>

#include "desk_fixtures.hpp"
#include "pcr/judge.hpp"
#include "pcr/text.hpp"

using namespace pcr;
namespace support = pcr::testing;

namespace {

JudgeReport judge_java(const std::string& code) {
  return support::shared_judge()->judge(CodeSnippet("t", Language::JavaLike, code));
}

JudgeReport judge_python(const std::string& code) {
  return support::shared_judge()->judge(CodeSnippet("t", Language::PythonLike, code));
}

std::vector<const Diagnostic*> of(const JudgeReport& r, DiagnosticCategory c) {
  std::vector<const Diagnostic*> out;
  for (const auto& d : r.diagnostics) {
    if (d.category == c) out.push_back(&d);
  }
  return out;
}

}  // namespace

TEST(Wrap, TransparencyForCompilationUnits) {
  auto r = judge_java("import java.util.List;\npublic class Box {\n  List<String> items;\n}\n");
  EXPECT_EQ(r.wrap_level_used, WrapLevel::AsIs);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(r.compiler_exit, 0);
  EXPECT_EQ(r.compiler, "janino");
}

TEST(Wrap, EscalatesToClassAndMethodBodies) {
  auto member = judge_java("int twice(int x) { return 2 * x; }");
  EXPECT_EQ(member.wrap_level_used, WrapLevel::ClassBody);
  EXPECT_TRUE(member.diagnostics.empty());
  auto stmt = judge_java("int x = 1;\nSystem.out.println(x + 1);");
  EXPECT_EQ(stmt.wrap_level_used, WrapLevel::MethodBody);
  EXPECT_TRUE(stmt.diagnostics.empty());
}

TEST(Wrap, HeaderLinesStayOutsideTheWrapper) {
  auto w = wrap_java("package a.b;\nimport java.util.List;\nList<String> xs = null;\n", WrapLevel::MethodBody);
  EXPECT_EQ(w.header_lines, 2);
  EXPECT_EQ(w.prefix_lines, 2);
  EXPECT_EQ(w.snippet_lines, 3);
  EXPECT_TRUE(text::starts_with(w.text, "package a.b;\nimport java.util.List;\npublic class PcrSnippet {\n"));
  EXPECT_EQ(map_line(w, 5), 3);
  EXPECT_EQ(map_line(w, 3), 3);  // wrapper lines map to the first body line
  EXPECT_EQ(map_line(w, 1), 1);
  EXPECT_EQ(map_line(w, 99), 3);
  auto as_is = wrap_java("public class Main {}", WrapLevel::AsIs);
  EXPECT_EQ(as_is.file_stem, "Main");
  EXPECT_EQ(as_is.text, "public class Main {}\n");
}

// Every wrapped line that came from the snippet maps back to a snippet line
// with identical text.
TEST(WrapProperty, LineMapIsVerbatim) {
  std::mt19937 rng(5);
  const std::vector<std::string> pool = {"package p;", "import java.util.*;", "// note", "", "int x = 1;",
                                         "foo(bar);", "}", "class Q {", "String s = \"a\";"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string src;
    int n = std::uniform_int_distribution<>(1, 12)(rng);
    for (int i = 0; i < n; ++i) src += pool[rng() % pool.size()] + "\n";
    if (text::trim(src).empty()) continue;
    auto orig = text::split_lines(src);
    for (auto level : kWrapEscalation) {
      auto w = wrap_java(src, level);
      auto wrapped = text::split_lines(w.text);
      int body_end = w.header_lines + w.prefix_lines + (w.snippet_lines - w.header_lines);
      for (int line = 1; line <= static_cast<int>(wrapped.size()); ++line) {
        bool from_snippet = line <= w.header_lines || (line > w.header_lines + w.prefix_lines && line <= body_end);
        int mapped = map_line(w, line);
        ASSERT_GE(mapped, 1);
        ASSERT_LE(mapped, w.snippet_lines);
        if (from_snippet) EXPECT_EQ(wrapped[line - 1], orig[mapped - 1]) << "level " << to_string(level);
      }
    }
  }
}

TEST(Judge, SampleHasBothErrorKinds) {
  auto code = text::read_file(support::root_path("tests/fixtures/sample.java"));
  auto r = judge_java(code);
  auto syntax = of(r, DiagnosticCategory::LastMileSyntax);
  auto non_fqn = of(r, DiagnosticCategory::NonFqn);
  ASSERT_FALSE(syntax.empty());
  ASSERT_FALSE(non_fqn.empty());
  EXPECT_EQ(syntax[0]->line, 4);
  EXPECT_EQ(non_fqn[0]->line, 6);
  EXPECT_TRUE(non_fqn[0]->recovered);
  EXPECT_TRUE(text::contains(non_fqn[0]->raw_message, "StringUtils"));
  EXPECT_NE(r.compiler_exit, 0);
  auto st = resolution_status(r);
  EXPECT_FALSE(st.non_fqn_free);
  EXPECT_FALSE(st.syntax_free);
  EXPECT_TRUE(st.non_fqn_verifiable);
}

TEST(Judge, BundledClasspathResolvesImports) {
  auto r = judge_java(
      "import org.apache.commons.lang3.StringUtils;\nimport com.google.gson.Gson;\n"
      "String s = StringUtils.capitalize(\"a\");\nString j = new Gson().toJson(s);\n");
  EXPECT_TRUE(r.diagnostics.empty()) << (r.diagnostics.empty() ? "" : r.diagnostics[0].raw_message);
  EXPECT_TRUE(r.classpath_configured);
}

TEST(Judge, DiagnosticLinesIndexTheSnippet) {
  for (const auto& rec : support::desk_corpus().records) {
    auto r = support::shared_judge()->judge(CodeSnippet(rec.id, rec.language, rec.code));
    auto lines = text::split_lines(rec.code);
    EXPECT_FALSE(r.diagnostics.empty()) << rec.id;
    for (const auto& d : r.diagnostics) {
      ASSERT_TRUE(d.line.has_value()) << rec.id << ": " << d.raw_message;
      EXPECT_GE(*d.line, 1) << rec.id;
      EXPECT_LE(*d.line, static_cast<int>(lines.size())) << rec.id << ": " << d.raw_message;
    }
  }
}

TEST(Judge, PythonSyntax) {
  EXPECT_TRUE(judge_python("def f(x):\n    return x + 1\n").diagnostics.empty());
  auto r = judge_python("items = [1, 2, 3\nprint(items)\n");
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].category, DiagnosticCategory::LastMileSyntax);
  EXPECT_EQ(r.compiler, "python");
  ASSERT_TRUE(r.diagnostics[0].line.has_value());
  EXPECT_GE(*r.diagnostics[0].line, 1);
  EXPECT_LE(*r.diagnostics[0].line, 2);
  // Undefined names are not a compile-time error in Python.
  EXPECT_TRUE(judge_python("print(undefined_name)\n").diagnostics.empty());
}

TEST(Judge, MemoisedReportsAreStable) {
  auto code = text::read_file(support::root_path("tests/fixtures/sample.java"));
  auto a = judge_java(code);
  auto b = judge_java(code);
  EXPECT_EQ(a.diagnostics, b.diagnostics);
  auto opts = default_judge_options(support::source_root());
  opts.memoize = false;
  auto fresh = make_compiler_judge(opts)->judge(CodeSnippet("t", Language::JavaLike, code));
  EXPECT_EQ(fresh.diagnostics, a.diagnostics);
  EXPECT_EQ(fresh.wrap_level_used, a.wrap_level_used);
}

TEST(Judge, RecoveryCanBeDisabled) {
  auto opts = default_judge_options(support::source_root());
  opts.recovery = false;
  auto code = text::read_file(support::root_path("tests/fixtures/sample.java"));
  auto r = make_compiler_judge(opts)->judge(CodeSnippet("t", Language::JavaLike, code));
  EXPECT_TRUE(of(r, DiagnosticCategory::NonFqn).empty());
  EXPECT_FALSE(of(r, DiagnosticCategory::LastMileSyntax).empty());
}

TEST(Judge, MissingToolchainIsReported) {
  auto opts = default_judge_options(support::source_root());
  opts.janino_dir = "/nonexistent/janino";
  opts.python = "/nonexistent/python3";
  auto judge = make_compiler_judge(opts);
  EXPECT_THROW(judge->judge(CodeSnippet("t", Language::JavaLike, "int x = 1;")), ToolchainMissing);
  EXPECT_THROW(judge->judge(CodeSnippet("t", Language::PythonLike, "x = 1")), ToolchainMissing);
}

TEST(Resolution, StatusFromDiagnostics) {
  JudgeReport r;
  EXPECT_TRUE(resolution_status(r).non_fqn_free);
  EXPECT_TRUE(resolution_status(r).syntax_free);
  r.diagnostics.push_back({"x", 1, 1, DiagnosticCategory::Other, false});
  EXPECT_TRUE(resolution_status(r).non_fqn_free);
  EXPECT_TRUE(resolution_status(r).syntax_free);
  r.diagnostics.push_back({"y", 1, 1, DiagnosticCategory::NonFqn, false});
  EXPECT_FALSE(resolution_status(r).non_fqn_free);
  EXPECT_FALSE(resolution_status(r).non_fqn_verifiable);
  r.classpath_configured = true;
  EXPECT_TRUE(resolution_status(r).non_fqn_verifiable);
}

TEST(Classpath, DirectoriesExpandToSortedJars) {
  auto jars = expand_classpath({support::root_path("third_party/java/classpath")});
  ASSERT_EQ(jars.size(), 2u);
  EXPECT_TRUE(text::ends_with(jars[0], "commons-lang3-3.20.0.jar"));
  EXPECT_TRUE(text::ends_with(jars[1], "gson-2.13.2.jar"));
}
