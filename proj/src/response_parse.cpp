#include "pcr/response_parse.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>

#include "pcr/text.hpp"

namespace pcr {

FqnMapping make_mapping(std::string simple_name, std::string fqn) {
  bool suspect = !text::ends_with(fqn, "." + simple_name);
  return FqnMapping{std::move(simple_name), std::move(fqn), suspect};
}

namespace {

bool is_fence(std::string_view line) { return text::starts_with(text::trim(line), "```"); }

// Drops list markers such as "-", "*", "•", "1.", "2)".
std::string_view strip_bullet(std::string_view item) {
  item = text::trim(item);
  if (text::starts_with(item, "- ") || text::starts_with(item, "* ") || text::starts_with(item, "+ ")) {
    return text::trim(item.substr(2));
  }
  if (text::starts_with(item, "\xE2\x80\xA2")) return text::trim(item.substr(3));
  std::size_t i = 0;
  while (i < item.size() && std::isdigit(static_cast<unsigned char>(item[i]))) ++i;
  if (i > 0 && i < item.size() && (item[i] == '.' || item[i] == ')')) return text::trim(item.substr(i + 1));
  return item;
}

std::string_view strip_quotes(std::string_view item) {
  item = text::trim(item);
  const std::string_view quotes = "\"'`";
  while (item.size() >= 1 && quotes.find(item.front()) != std::string_view::npos) item.remove_prefix(1);
  while (item.size() >= 1 && quotes.find(item.back()) != std::string_view::npos) item.remove_suffix(1);
  return text::trim(item);
}

std::string_view strip_label(std::string_view item) {
  for (std::string_view label : {"Output:", "output:", "Simple names:", "Simple name:"}) {
    if (text::starts_with(item, label)) return text::trim(item.substr(label.size()));
  }
  return item;
}

std::vector<std::string> non_fence_lines(std::string_view response) {
  std::vector<std::string> out;
  for (auto& line : text::split_lines(response)) {
    if (!is_fence(line)) out.push_back(std::move(line));
  }
  return out;
}

std::string_view strip_trailing_punct(std::string_view s) {
  while (!s.empty() && (s.back() == ';' || s.back() == ',' || s.back() == '.')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> parse_simple_names(std::string_view response) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (const auto& line : non_fence_lines(response)) {
    auto body = strip_label(strip_bullet(line));
    std::size_t start = 0;
    while (start <= body.size()) {
      auto comma = body.find(',', start);
      auto item = body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      auto name = strip_quotes(strip_bullet(item));
      if (text::is_identifier(name) && seen.insert(std::string(name)).second) names.emplace_back(name);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return names;
}

FqnParseResult parse_fqn_mappings(std::string_view response, const std::vector<std::string>& requested) {
  // Candidate (lhs, fqn) pairs in response order; lhs is empty for bare names.
  std::vector<std::pair<std::string, std::string>> candidates;
  for (const auto& line : non_fence_lines(response)) {
    auto body = strip_bullet(line);
    std::optional<std::size_t> sep_at;
    std::size_t sep_len = 0;
    for (std::string_view sep : {"->", "=>", "\xE2\x86\x92", ":", "="}) {
      auto pos = body.find(sep);
      if (pos != std::string_view::npos) {
        sep_at = pos;
        sep_len = sep.size();
        break;
      }
    }
    if (sep_at) {
      auto lhs = strip_quotes(body.substr(0, *sep_at));
      auto rhs = strip_quotes(strip_trailing_punct(strip_quotes(body.substr(*sep_at + sep_len))));
      if (text::starts_with(rhs, "import ")) rhs = text::trim(rhs.substr(7));
      rhs = strip_trailing_punct(rhs);
      if (text::is_identifier(lhs) && text::is_qualified_name(rhs)) {
        candidates.emplace_back(std::string(lhs), std::string(rhs));
      }
      continue;
    }
    auto bare = strip_quotes(body);
    if (text::starts_with(bare, "import ")) bare = text::trim(bare.substr(7));
    bare = strip_trailing_punct(bare);
    if (text::is_qualified_name(bare)) candidates.emplace_back(std::string(), std::string(bare));
  }

  FqnParseResult result;
  std::set<std::string> done;
  for (const auto& name : requested) {
    if (!done.insert(name).second) continue;
    const std::pair<std::string, std::string>* hit = nullptr;
    for (const auto& c : candidates) {
      if (c.first == name) {
        hit = &c;
        break;
      }
    }
    if (!hit) {
      for (const auto& c : candidates) {
        if (c.first.empty() && text::ends_with(c.second, "." + name)) {
          hit = &c;
          break;
        }
      }
    }
    if (hit) {
      result.mappings.push_back(make_mapping(name, hit->second));
    } else {
      result.misses.push_back(name);
    }
  }
  return result;
}

std::string parse_fixed_code(std::string_view response) {
  if (text::trim(response).empty()) throw ResponseParseError("empty code-fix response");

  auto lines = text::split_lines(response);
  std::string best;
  bool found_block = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!is_fence(lines[i])) continue;
    std::vector<std::string> body;
    std::size_t j = i + 1;
    for (; j < lines.size() && !is_fence(lines[j]); ++j) body.push_back(lines[j]);
    auto block = text::join(body, "\n");
    auto trimmed = text::trim(block);
    if (!trimmed.empty() && (!found_block || trimmed.size() > text::trim(best).size())) {
      best = block;
      found_block = true;
    }
    i = j;
  }
  if (found_block) {
    // Keep leading indentation of the first line; drop blank edge lines.
    auto first = best.find_first_not_of("\r\n");
    auto last = best.find_last_not_of(" \t\r\n");
    return best.substr(first, last - first + 1);
  }
  return text::trim_copy(response);
}

}  // namespace pcr
