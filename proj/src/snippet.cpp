#include "pcr/snippet.hpp"

#include "pcr/errors.hpp"
#include "pcr/text.hpp"

namespace pcr {

std::string_view to_string(Language lang) {
  return lang == Language::JavaLike ? "java" : "python";
}

Language parse_language(std::string_view s) {
  auto v = text::to_lower(text::trim(s));
  if (v == "java" || v == "javalike") return Language::JavaLike;
  if (v == "python" || v == "pythonlike" || v == "py") return Language::PythonLike;
  throw ValidationError("unknown language '" + std::string(s) + "' (expected java or python)");
}

std::optional<Language> language_from_path(std::string_view path) {
  if (text::ends_with(path, ".java")) return Language::JavaLike;
  if (text::ends_with(path, ".py")) return Language::PythonLike;
  return std::nullopt;
}

CodeSnippet::CodeSnippet(std::string id, Language language, std::string source,
                         std::optional<std::string> origin)
    : id_(std::move(id)), language_(language), source_(std::move(source)), origin_(std::move(origin)) {
  if (id_.empty()) throw ValidationError("snippet id must not be empty");
  if (text::trim(source_).empty()) throw ValidationError("snippet '" + id_ + "' has blank source");
}

CodeSnippet CodeSnippet::with_source(std::string source) const {
  return CodeSnippet(id_, language_, std::move(source), origin_);
}

}  // namespace pcr
