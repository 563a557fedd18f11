#include "pcr/judge.hpp"

#include <spdlog/spdlog.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <regex>
#include <set>

#include "pcr/text.hpp"

namespace fs = std::filesystem;

namespace pcr {

std::string_view to_string(WrapLevel level) {
  switch (level) {
    case WrapLevel::AsIs: return "as-is";
    case WrapLevel::ClassBody: return "class-body";
    case WrapLevel::MethodBody: return "method-body";
  }
  return "as-is";
}

WrapLevel parse_wrap_level(std::string_view s) {
  for (auto l : kWrapEscalation) {
    if (to_string(l) == s) return l;
  }
  throw ValidationError("unknown wrap level '" + std::string(s) + "'");
}

std::string_view to_string(JavaCompiler c) { return c == JavaCompiler::Janino ? "janino" : "javac"; }

JavaCompiler parse_java_compiler(std::string_view s) {
  auto lower = text::to_lower(s);
  if (lower == "janino") return JavaCompiler::Janino;
  if (lower == "javac") return JavaCompiler::Javac;
  throw ValidationError("unknown Java compiler '" + std::string(s) + "' (expected janino or javac)");
}

ResolutionStatus resolution_status(const JudgeReport& report) {
  ResolutionStatus st;
  for (const auto& d : report.diagnostics) {
    if (d.category == DiagnosticCategory::NonFqn) st.non_fqn_free = false;
    if (d.category == DiagnosticCategory::LastMileSyntax) st.syntax_free = false;
  }
  st.non_fqn_verifiable = st.non_fqn_free || report.classpath_configured;
  return st;
}

std::vector<std::string> expand_classpath(const std::vector<std::string>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    std::error_code ec;
    if (fs::is_directory(e, ec)) {
      std::vector<std::string> jars;
      for (const auto& f : fs::directory_iterator(e, ec)) {
        if (f.is_regular_file() && f.path().extension() == ".jar") jars.push_back(f.path().string());
      }
      std::sort(jars.begin(), jars.end());
      out.insert(out.end(), jars.begin(), jars.end());
    } else if (fs::exists(e, ec)) {
      out.push_back(e);
    } else {
      spdlog::warn("classpath entry {} does not exist; ignored", e);
    }
  }
  return out;
}

JudgeOptions default_judge_options(const std::string& data_dir) {
  JudgeOptions o;
  fs::path root(data_dir);
  o.janino_dir = (root / "third_party" / "java" / "compiler").string();
  o.driver_source = (root / "share" / "java" / "PcrJudge.java").string();
  o.classpath = {(root / "third_party" / "java" / "classpath").string()};
  o.workspace = (fs::temp_directory_path() / ("pcr-" + std::to_string(::getuid()))).string();
  return o;
}

// ---------------------------------------------------------------------------
// Wrapping

namespace {

bool is_header_line(std::string_view line) {
  auto t = text::trim(line);
  return t.empty() || text::starts_with(t, "//") || text::starts_with(t, "package ") ||
         text::starts_with(t, "import ");
}

std::string public_type_name(std::string_view source) {
  static const std::regex re(
      R"((?:^|\n)[ \t]*public\s+(?:(?:abstract|final|strictfp|sealed)\s+)*(?:class|interface|enum|record)\s+([A-Za-z_$][A-Za-z0-9_$]*))");
  std::string s(source);
  std::smatch m;
  if (std::regex_search(s, m, re)) return m[1].str();
  return "PcrSnippet";
}

}  // namespace

WrappedSource wrap_java(std::string_view source, WrapLevel level) {
  auto lines = text::split_lines(source);
  WrappedSource w;
  w.snippet_lines = std::max<int>(1, static_cast<int>(lines.size()));
  if (level == WrapLevel::AsIs) {
    w.text = std::string(source);
    if (!w.text.empty() && w.text.back() != '\n') w.text += '\n';
    w.file_stem = public_type_name(source);
    return w;
  }
  std::size_t h = 0;
  while (h < lines.size() && is_header_line(lines[h])) ++h;
  w.header_lines = static_cast<int>(h);
  w.file_stem = "PcrSnippet";
  std::string out;
  for (std::size_t i = 0; i < h; ++i) out += lines[i] + "\n";
  out += "public class PcrSnippet {\n";
  w.prefix_lines = 1;
  if (level == WrapLevel::MethodBody) {
    out += "public static void pcrSnippetMain() throws Throwable {\n";
    w.prefix_lines = 2;
  }
  for (std::size_t i = h; i < lines.size(); ++i) out += lines[i] + "\n";
  if (level == WrapLevel::MethodBody) out += "}\n";
  out += "}\n";
  w.text = std::move(out);
  return w;
}

int map_line(const WrappedSource& w, int wrapped_line) {
  int n = w.snippet_lines;
  int line = wrapped_line;
  if (line <= w.header_lines) {
    // header lines keep their numbers
  } else if (line <= w.header_lines + w.prefix_lines) {
    line = w.header_lines + 1;
  } else {
    line -= w.prefix_lines;
  }
  return std::clamp(line, 1, n);
}

// ---------------------------------------------------------------------------
// Compiler judge

namespace {

struct LevelResult {
  WrapLevel level = WrapLevel::AsIs;
  std::vector<Diagnostic> diagnostics;
  int exit_code = 0;
};

bool has_syntax(const std::vector<Diagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(),
                     [](const Diagnostic& d) { return d.category == DiagnosticCategory::LastMileSyntax; });
}

// Position (line, column) of the earliest syntax error.
std::optional<std::pair<int, int>> first_syntax_pos(const std::vector<Diagnostic>& ds) {
  std::optional<std::pair<int, int>> best;
  for (const auto& d : ds) {
    if (d.category != DiagnosticCategory::LastMileSyntax || !d.line) continue;
    std::pair<int, int> pos{*d.line, d.column.value_or(0)};
    if (!best || pos < *best) best = pos;
  }
  return best;
}

// The first level free of syntax errors; failing that, the level whose first
// syntax error sits furthest into the snippet (wrapper-induced errors show up
// early, often at the start of a line). Ties go to the earlier level.
std::size_t select_level(const std::vector<LevelResult>& results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!has_syntax(results[i].diagnostics)) return i;
  }
  std::size_t best = 0;
  std::pair<int, int> best_pos{-1, -1};
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto pos = first_syntax_pos(results[i].diagnostics).value_or(std::pair<int, int>{0, 0});
    if (pos > best_pos) {
      best = i;
      best_pos = pos;
    }
  }
  return best;
}

std::vector<std::string> quoted_names(const std::string& message) {
  static const std::regex re(R"re("([A-Za-z_$][A-Za-z0-9_$.]*)"|'([A-Za-z_$][A-Za-z0-9_$.]*)')re");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(message.begin(), message.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1].matched ? (*it)[1].str() : (*it)[2].str());
  }
  return out;
}

// Replaces the masked lines by their braces alone, then drops closers that
// would underflow and appends the missing ones, so blanking a line does not
// shift the block structure of the rest.
std::string mask_lines(const std::vector<std::string>& lines, const std::set<int>& masked) {
  std::vector<std::string> out;
  int depth = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    bool is_masked = masked.count(static_cast<int>(i) + 1) > 0;
    std::string line;
    for (char c : lines[i]) {
      if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (is_masked && depth == 0) continue;
        depth = std::max(0, depth - 1);
      }
      if (!is_masked || c == '{' || c == '}') line += c;
    }
    out.push_back(std::move(line));
  }
  std::string src;
  for (const auto& l : out) src += l + "\n";
  if (depth > 0 && !src.empty()) src.insert(src.size() - 1, std::string(depth, '}'));
  return src;
}

// True when `line` looks like it declares `name` ("Type name =", "Type name;",
// "Type name :", a parameter and so on).
bool declares_identifier(const std::string& line, const std::string& name) {
  std::string escaped;
  for (char c : name) escaped += c == '$' ? std::string("\\$") : std::string(1, c);
  std::regex re("[A-Za-z0-9_$>\\]]\\s+" + escaped + "\\s*([=;:,)]|$)");
  return std::regex_search(line, re);
}

bool mentions_identifier(const std::string& line, const std::string& name) {
  std::size_t pos = 0;
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
  while ((pos = line.find(name, pos)) != std::string::npos) {
    bool left = pos == 0 || !ident(line[pos - 1]);
    bool right = pos + name.size() >= line.size() || !ident(line[pos + name.size()]);
    if (left && right) return true;
    pos += 1;
  }
  return false;
}

class CompilerJudge : public Judge {
 public:
  explicit CompilerJudge(JudgeOptions options) : options_(std::move(options)) {
    if (!options_.rules) options_.rules = RuleTable::builtin();
    jars_ = expand_classpath(options_.classpath);
    if (options_.workspace.empty()) options_.workspace = default_judge_options(".").workspace;
  }

  ~CompilerJudge() override = default;

  JudgeReport judge(const CodeSnippet& snippet) override {
    std::string key = std::string(to_string(snippet.language())) + "\n" + snippet.source();
    if (options_.memoize) {
      std::lock_guard lock(memo_mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    auto start = std::chrono::steady_clock::now();
    JudgeReport report = snippet.language() == Language::PythonLike ? judge_python(snippet.source())
                                                                     : judge_java(snippet.source());
    report.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (report.diagnostics.empty()) report.compiler_exit = 0;
    if (!report.diagnostics.empty() && report.compiler_exit == 0) report.compiler_exit = 1;
    if (options_.memoize) {
      std::lock_guard lock(memo_mu_);
      memo_.emplace(key, report);
    }
    return report;
  }

 private:
  // ---- Python ------------------------------------------------------------

  JudgeReport judge_python(const std::string& source) {
    static const char* kScript =
        "import sys\n"
        "src = sys.stdin.buffer.read().decode('utf-8', 'replace')\n"
        "try:\n"
        "    compile(src, '<snippet>', 'exec', dont_inherit=True)\n"
        "except SyntaxError as e:\n"
        "    msg = (e.msg or '').replace('\\t', ' ').replace('\\n', ' ')\n"
        "    print('%d\\t%d\\t%s: %s' % (e.lineno or 0, e.offset or 0, type(e).__name__, msg))\n"
        "    sys.exit(1)\n"
        "except ValueError as e:\n"
        "    print('0\\t0\\tValueError: %s' % str(e).replace('\\n', ' '))\n"
        "    sys.exit(1)\n";
    auto python = find_executable(options_.python);
    if (!python) throw ToolchainMissing("Python interpreter '" + options_.python + "' not found on PATH");
    auto res = run_process({*python, "-I", "-c", kScript}, options_.timeout, source);
    JudgeReport report;
    report.compiler = "python";
    report.compiler_exit = res.exit_code;
    report.classpath_configured = true;
    int n = std::max<int>(1, static_cast<int>(text::split_lines(source).size()));
    for (const auto& line : text::split_lines(res.out)) {
      auto parts = line.find('\t');
      auto parts2 = parts == std::string::npos ? parts : line.find('\t', parts + 1);
      if (parts2 == std::string::npos) continue;
      Diagnostic d;
      int l = std::atoi(line.substr(0, parts).c_str());
      int c = std::atoi(line.substr(parts + 1, parts2 - parts - 1).c_str());
      if (l > 0) d.line = std::clamp(l, 1, n);
      if (c > 0 && l >= 1 && l <= n) d.column = c;
      d.raw_message = line.substr(parts2 + 1);
      d.category = options_.rules->classify(d.raw_message, MessageSource::Python);
      report.diagnostics.push_back(std::move(d));
    }
    if (res.exit_code != 0 && report.diagnostics.empty()) {
      Diagnostic d;
      d.raw_message = text::trim_copy(res.err.empty() ? res.out : res.err);
      if (d.raw_message.empty()) d.raw_message = "python exited with status " + std::to_string(res.exit_code);
      d.category = options_.rules->classify(d.raw_message, MessageSource::Python);
      report.diagnostics.push_back(std::move(d));
    }
    return report;
  }

  // ---- Java --------------------------------------------------------------

  JudgeReport judge_java(const std::string& source) {
    auto results = compile_levels(source);
    std::size_t chosen = select_level(results);
    JudgeReport report;
    report.compiler = std::string(to_string(options_.java_compiler));
    report.classpath_configured = !jars_.empty();
    report.wrap_level_used = results[chosen].level;
    report.diagnostics = results[chosen].diagnostics;
    report.compiler_exit = results[chosen].exit_code;
    if (options_.recovery && has_syntax(report.diagnostics)) recover(source, report);
    return report;
  }

  // Blanks the first syntax-error line and recompiles, repeating until the
  // masked source parses, then adds the NonFqn diagnostics of that pass. An
  // error at the start of a line usually belongs to the line before, so that
  // one is blanked too.
  void recover(const std::string& source, JudgeReport& report) {
    auto lines = text::split_lines(source);
    std::set<int> masked;
    auto current = report.diagnostics;
    for (int pass = 0; pass < options_.max_recovery_passes; ++pass) {
      auto pos = first_syntax_pos(current);
      if (!pos) return;
      int line = pos->first;
      if (line < 1 || line > static_cast<int>(lines.size()) || masked.count(line)) return;
      masked.insert(line);
      if (pos->second <= 1) {
        int prev = line - 1;
        while (prev >= 1 && text::trim(lines[prev - 1]).empty()) --prev;
        if (prev >= 1) masked.insert(prev);
      }
      auto masked_source = mask_lines(lines, masked);
      if (text::trim(masked_source).find_first_not_of("{}\n\t ") == std::string::npos) return;
      auto results = compile_levels(masked_source);
      auto& pick = results[select_level(results)];
      if (has_syntax(pick.diagnostics)) {
        current = pick.diagnostics;
        continue;
      }
      for (auto d : pick.diagnostics) {
        if (d.category != DiagnosticCategory::NonFqn) continue;
        // Names declared on a blanked line, or mentioned only there, are
        // artifacts of the masking.
        bool from_mask = false;
        for (const auto& name : quoted_names(d.raw_message)) {
          auto simple = name.substr(name.rfind('.') == std::string::npos ? 0 : name.rfind('.') + 1);
          bool in_mask = false, elsewhere = false;
          for (std::size_t i = 0; i < lines.size(); ++i) {
            if (!mentions_identifier(lines[i], simple)) continue;
            bool is_masked = masked.count(static_cast<int>(i) + 1) > 0;
            (is_masked ? in_mask : elsewhere) = true;
            if (is_masked && declares_identifier(lines[i], simple)) from_mask = true;
          }
          if (in_mask && !elsewhere) from_mask = true;
        }
        if (from_mask) continue;
        d.recovered = true;
        bool dup = std::any_of(report.diagnostics.begin(), report.diagnostics.end(), [&](const Diagnostic& e) {
          return e.raw_message == d.raw_message && e.line == d.line;
        });
        if (!dup) report.diagnostics.push_back(std::move(d));
      }
      return;
    }
  }

  std::vector<LevelResult> compile_levels(const std::string& source) {
    std::vector<WrappedSource> wrapped;
    for (auto level : kWrapEscalation) wrapped.push_back(wrap_java(source, level));

    auto dir = make_temp_dir();
    struct Cleanup {
      fs::path p;
      ~Cleanup() {
        std::error_code ec;
        fs::remove_all(p, ec);
      }
    } cleanup{dir};

    std::vector<std::string> files;
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
      auto level_dir = dir / std::string(to_string(kWrapEscalation[i]));
      fs::create_directories(level_dir / "classes");
      auto file = level_dir / (wrapped[i].file_stem + ".java");
      text::write_file_atomic(file.string(), wrapped[i].text);
      files.push_back(file.string());
    }

    std::vector<std::vector<RawDiagnostic>> raw;
    std::vector<int> exits;
    MessageSource msg_source;
    if (options_.java_compiler == JavaCompiler::Janino) {
      raw = janino_compile(files);
      exits.assign(raw.size(), 0);
      msg_source = MessageSource::Janino;
    } else {
      for (const auto& f : files) {
        auto [diags, code] = javac_compile(f);
        raw.push_back(std::move(diags));
        exits.push_back(code);
      }
      msg_source = MessageSource::Javac;
    }

    std::vector<LevelResult> out;
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
      LevelResult r;
      r.level = kWrapEscalation[i];
      for (const auto& rd : raw[i]) {
        Diagnostic d;
        d.raw_message = rd.message;
        d.category = options_.rules->classify(rd.message, msg_source);
        if (rd.line && *rd.line > 0) {
          d.line = map_line(wrapped[i], *rd.line);
          bool in_snippet = *rd.line <= wrapped[i].header_lines ||
                            (*rd.line > wrapped[i].header_lines + wrapped[i].prefix_lines &&
                             *rd.line - wrapped[i].prefix_lines <= wrapped[i].snippet_lines);
          if (in_snippet && rd.column && *rd.column > 0) d.column = rd.column;
        }
        r.diagnostics.push_back(std::move(d));
      }
      r.exit_code = r.diagnostics.empty() ? exits[i] : std::max(exits[i], 1);
      out.push_back(std::move(r));
    }
    return out;
  }

  fs::path make_temp_dir() {
    static std::atomic<unsigned> counter{0};
    auto dir = fs::path(options_.workspace) / "judge" /
               (std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir;
  }

  std::string classpath_string(const std::vector<std::string>& entries) const {
    return text::join(entries, ":");
  }

  // ---- javac -------------------------------------------------------------

  std::string javac_path() {
    std::lock_guard lock(tool_mu_);
    if (!javac_.empty()) return javac_;
    std::vector<std::string> candidates;
    if (!options_.javac.empty()) candidates.push_back(options_.javac);
    if (const char* env = std::getenv("PCR_JAVAC"); env && *env) candidates.push_back(env);
    candidates.push_back("javac");
    for (const auto& c : candidates) {
      if (auto p = find_executable(c)) return javac_ = *p;
    }
    throw ToolchainMissing("javac not found (set --javac, $PCR_JAVAC, or put javac on PATH)");
  }

  std::pair<std::vector<RawDiagnostic>, int> javac_compile(const std::string& file) {
    std::vector<std::string> argv = {javac_path(), "-proc:none", "-nowarn", "-encoding", "UTF-8", "-Xmaxerrs",
                                     "100", "-d", (fs::path(file).parent_path() / "classes").string()};
    if (!jars_.empty()) {
      argv.push_back("-cp");
      argv.push_back(classpath_string(jars_));
    }
    argv.push_back(file);
    auto res = run_process(argv, options_.timeout);
    auto diags = parse_javac_output(res.err + res.out);
    if (res.exit_code != 0 && diags.empty()) {
      RawDiagnostic d;
      d.message = text::trim_copy(res.err.empty() ? res.out : res.err);
      if (d.message.empty()) d.message = "javac exited with status " + std::to_string(res.exit_code);
      diags.push_back(std::move(d));
    }
    return {std::move(diags), res.exit_code};
  }

  // ---- Janino ------------------------------------------------------------

  std::string java_path() {
    std::lock_guard lock(tool_mu_);
    if (!java_.empty()) return java_;
    std::vector<std::string> candidates;
    if (!options_.java.empty()) candidates.push_back(options_.java);
    if (const char* env = std::getenv("PCR_JAVA"); env && *env) candidates.push_back(env);
    candidates.push_back("java");
    for (const auto& c : candidates) {
      if (auto p = find_executable(c)) return java_ = *p;
    }
    // A JRE shipped as a Python wheel (pip install jdk4py).
    if (auto py = find_executable(options_.python)) {
      try {
        auto res = run_process({*py, "-c", "import jdk4py; print(jdk4py.JAVA)"}, std::chrono::seconds(30));
        auto path = text::trim_copy(res.out);
        if (res.exit_code == 0 && find_executable(path)) return java_ = path;
      } catch (const Error&) {
      }
    }
    throw ToolchainMissing(
        "no Java runtime found (set --java or $PCR_JAVA, put java on PATH, or pip install jdk4py)");
  }

  std::vector<std::string> janino_jars() const {
    std::vector<std::string> jars;
    for (const char* name : {"janino-3.1.9.jar", "commons-compiler-3.1.9.jar"}) {
      auto p = fs::path(options_.janino_dir) / name;
      if (!fs::exists(p)) throw ToolchainMissing("Janino jar not found: " + p.string());
      jars.push_back(p.string());
    }
    return jars;
  }

  // Compiles the driver once per (driver source, Janino version) into the
  // workspace; concurrent processes race benignly through rename.
  std::string driver_dir() {
    std::lock_guard lock(driver_mu_);
    if (!driver_dir_.empty()) return driver_dir_;
    auto jars = janino_jars();
    if (!fs::exists(options_.driver_source)) {
      throw ToolchainMissing("judge driver source not found: " + options_.driver_source);
    }
    auto src = text::read_file(options_.driver_source);
    auto hash = text::sha256_hex(src + "\n" + text::join(jars, "\n")).substr(0, 16);
    auto dir = fs::path(options_.workspace) / "cache" / "java-driver" / hash;
    if (fs::exists(dir / "PcrJudge.class")) return driver_dir_ = dir.string();

    auto tmp = fs::path(dir.string() + ".tmp." + std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);
    auto cp = classpath_string(jars);
    auto res = run_process({java_path(), "-cp", cp, "org.codehaus.commons.compiler.samples.CompilerDemo", "-d",
                            tmp.string(), "-classpath", cp, options_.driver_source},
                           std::chrono::seconds(120));
    if (res.exit_code != 0 || !fs::exists(tmp / "PcrJudge.class")) {
      fs::remove_all(tmp, ec);
      throw ToolchainMissing("failed to build the Java judge driver: " + text::trim_copy(res.err + res.out));
    }
    fs::rename(tmp, dir, ec);
    if (ec) fs::remove_all(tmp, ec);  // another process won the race
    if (!fs::exists(dir / "PcrJudge.class")) throw ToolchainMissing("Java judge driver missing after build");
    return driver_dir_ = dir.string();
  }

  std::unique_ptr<LineChild> start_server() {
    auto jars = janino_jars();
    jars.insert(jars.begin(), driver_dir());
    fs::create_directories(options_.workspace);
    auto log = (fs::path(options_.workspace) / "janino-server.log").string();
    std::vector<std::string> argv = {java_path(), "-XX:TieredStopAtLevel=1", "-XX:+UseSerialGC", "-Xss4m",
                                     "-cp", classpath_string(jars), "PcrJudge", "--serve"};
    spdlog::debug("starting Janino judge server");
    return std::make_unique<LineChild>(argv, log);
  }

  std::vector<std::vector<RawDiagnostic>> janino_compile(const std::vector<std::string>& files) {
    for (int attempt = 0;; ++attempt) {
      std::unique_ptr<LineChild> server;
      {
        std::lock_guard lock(pool_mu_);
        if (!idle_.empty()) {
          server = std::move(idle_.back());
          idle_.pop_back();
        }
      }
      if (!server || !server->alive()) server = start_server();
      try {
        auto out = janino_request(*server, files);
        std::lock_guard lock(pool_mu_);
        idle_.push_back(std::move(server));
        return out;
      } catch (const CompilerTimeout&) {
        server->kill();
        throw CompilerTimeout("Janino did not finish within " + std::to_string(options_.timeout.count()) + " s");
      } catch (const Error& e) {
        server->kill();
        if (attempt >= 1) throw;
        spdlog::warn("Janino judge server failed ({}); restarting", e.what());
      }
    }
  }

  std::vector<std::vector<RawDiagnostic>> janino_request(LineChild& server, const std::vector<std::string>& files) {
    auto dest = fs::path(files.front()).parent_path() / "classes";
    std::string request = "COMPILE\t" + classpath_string(jars_) + "\t" + dest.string();
    for (const auto& f : files) request += "\t" + f;
    server.write_line(request);

    auto deadline = std::chrono::steady_clock::now() + options_.timeout;
    std::vector<std::vector<RawDiagnostic>> out(files.size());
    while (true) {
      auto line = server.read_line(deadline);
      if (line == "DONE") break;
      auto fields = std::vector<std::string>{};
      std::size_t start = 0;
      for (int k = 0; k < 4; ++k) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) break;
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
      fields.push_back(line.substr(start));
      if (fields[0] != "DIAG" || fields.size() < 5) continue;
      auto index = static_cast<std::size_t>(std::atoi(fields[1].c_str()));
      if (index >= out.size()) continue;
      RawDiagnostic d;
      d.file = files[index];
      int l = std::atoi(fields[2].c_str());
      int c = std::atoi(fields[3].c_str());
      if (l > 0) d.line = l;
      if (c > 0) d.column = c;
      d.message = fields[4];
      out[index].push_back(std::move(d));
    }
    return out;
  }

  JudgeOptions options_;
  std::vector<std::string> jars_;

  std::mutex tool_mu_;
  std::string java_;
  std::string javac_;

  std::mutex driver_mu_;
  std::string driver_dir_;

  std::mutex pool_mu_;
  std::vector<std::unique_ptr<LineChild>> idle_;

  std::mutex memo_mu_;
  std::map<std::string, JudgeReport> memo_;
};

}  // namespace

std::shared_ptr<Judge> make_compiler_judge(JudgeOptions options) {
  return std::make_shared<CompilerJudge>(std::move(options));
}

}  // namespace pcr
