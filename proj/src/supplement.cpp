#include "pcr/supplement.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <optional>
#include <regex>
#include <set>

#include "pcr/text.hpp"

namespace pcr {

namespace {

struct Line {
  std::string body;  // without the terminator
  std::string eol;   // "\n", "\r\n" or "" for an unterminated last line
};

std::vector<Line> split_keep_eol(std::string_view code) {
  std::vector<Line> out;
  std::size_t start = 0;
  while (start < code.size()) {
    auto nl = code.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back({std::string(code.substr(start)), ""});
      break;
    }
    std::size_t end = nl;
    std::string eol = "\n";
    if (end > start && code[end - 1] == '\r') {
      --end;
      eol = "\r\n";
    }
    out.push_back({std::string(code.substr(start, end - start)), eol});
    start = nl + 1;
  }
  return out;
}

std::string package_of(const std::string& fqn) { return fqn.substr(0, fqn.rfind('.')); }

bool uses_qualified(const std::vector<Line>& lines, const std::set<std::size_t>& import_lines,
                    const std::string& fqn) {
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (import_lines.count(i)) continue;
    const auto& s = lines[i].body;
    std::size_t pos = 0;
    while ((pos = s.find(fqn, pos)) != std::string::npos) {
      bool left = pos == 0 || (!ident(s[pos - 1]) && s[pos - 1] != '.');
      bool right = pos + fqn.size() >= s.size() || !ident(s[pos + fqn.size()]);
      if (left && right) return true;
      ++pos;
    }
  }
  return false;
}

}  // namespace

SupplementResult supplement_fqns_detailed(std::string_view code, const std::vector<FqnMapping>& mappings) {
  static const std::regex package_re(R"(^\s*package\s+[A-Za-z_$][\w$.]*\s*;.*$)");
  static const std::regex import_re(R"(^\s*import\s+(static\s+)?([A-Za-z_$][\w$]*(?:\s*\.\s*[A-Za-z_$][\w$]*)*)(\s*\.\s*\*)?\s*;.*$)");

  SupplementResult result;
  auto lines = split_keep_eol(code);

  std::optional<std::size_t> package_line;
  std::set<std::size_t> import_lines;
  std::map<std::string, std::string> imported;  // simple name -> fqn
  std::set<std::string> wildcard_packages;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::smatch m;
    if (!package_line && import_lines.empty() && std::regex_match(lines[i].body, m, package_re)) {
      package_line = i;
      continue;
    }
    if (std::regex_match(lines[i].body, m, import_re)) {
      import_lines.insert(i);
      std::string name = m[2].str();
      name.erase(std::remove_if(name.begin(), name.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
                 name.end());
      if (m[3].matched) {
        wildcard_packages.insert(name);
      } else if (!m[1].matched) {
        imported.emplace(name.substr(name.rfind('.') + 1), name);
      }
    }
  }

  auto skip = [&](const FqnMapping& m, const std::string& why) {
    result.skipped.push_back(m.simple_name + " -> " + m.fqn + ": " + why);
    spdlog::warn("FQN supplement skipped {} -> {}: {}", m.simple_name, m.fqn, why);
  };

  std::map<std::string, std::string> accepted;  // simple name -> fqn
  for (const auto& m : mappings) {
    if (!text::is_identifier(m.simple_name) || !text::is_qualified_name(m.fqn)) {
      skip(m, "not a valid name/qualified-name pair");
      continue;
    }
    if (m.suspect || !text::ends_with(m.fqn, "." + m.simple_name)) {
      skip(m, "qualified name does not end with the simple name");
      continue;
    }
    if (package_of(m.fqn) == "java.lang") continue;  // implicitly imported
    if (auto it = imported.find(m.simple_name); it != imported.end()) {
      if (it->second != m.fqn) skip(m, "simple name already imported as " + it->second);
      continue;
    }
    if (wildcard_packages.count(package_of(m.fqn))) continue;
    if (auto it = accepted.find(m.simple_name); it != accepted.end()) {
      if (it->second != m.fqn) skip(m, "conflicts with " + it->second);
      continue;
    }
    if (uses_qualified(lines, import_lines, m.fqn)) continue;
    accepted.emplace(m.simple_name, m.fqn);
  }

  for (const auto& [simple, fqn] : accepted) result.added.push_back(fqn);
  std::sort(result.added.begin(), result.added.end());
  if (result.added.empty()) {
    result.code = std::string(code);
    return result;
  }

  std::string eol = (!lines.empty() && lines.front().eol == "\r\n") ? "\r\n" : "\n";
  std::string block;
  for (const auto& fqn : result.added) block += "import " + fqn + ";" + eol;

  std::string out;
  std::size_t insert_at = package_line ? *package_line + 1 : 0;
  for (std::size_t i = 0; i < insert_at; ++i) out += lines[i].body + lines[i].eol;
  if (insert_at > 0 && lines[insert_at - 1].eol.empty()) {
    // Unterminated package line at the end: terminate it and drop the
    // terminator of the last import so the file still ends unterminated.
    out += eol;
    block.erase(block.size() - eol.size());
  }
  out += block;
  for (std::size_t i = insert_at; i < lines.size(); ++i) out += lines[i].body + lines[i].eol;
  result.code = std::move(out);
  return result;
}

std::string supplement_fqns(std::string_view code, const std::vector<FqnMapping>& mappings) {
  return supplement_fqns_detailed(code, mappings).code;
}

}  // namespace pcr
