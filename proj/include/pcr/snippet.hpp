#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pcr {

enum class Language { JavaLike, PythonLike };

std::string_view to_string(Language lang);
// Accepts "java"/"python" (and the enum spellings), case-insensitive.
Language parse_language(std::string_view s);
// By file extension: .java -> JavaLike, .py -> PythonLike.
std::optional<Language> language_from_path(std::string_view path);

// A unit of partial source code. Construction validates the invariants
// (non-blank source, non-empty id).
class CodeSnippet {
 public:
  CodeSnippet(std::string id, Language language, std::string source,
              std::optional<std::string> origin = std::nullopt);

  const std::string& id() const { return id_; }
  Language language() const { return language_; }
  const std::string& source() const { return source_; }
  const std::optional<std::string>& origin() const { return origin_; }

  // Same identity and language, different source.
  CodeSnippet with_source(std::string source) const;

 private:
  std::string id_;
  Language language_;
  std::string source_;
  std::optional<std::string> origin_;
};

}  // namespace pcr
