#include <gtest/gtest.h>

#include <filesystem>

#include "desk_fixtures.hpp"
#include "pcr/snippet.hpp"
#include "pcr/text.hpp"

using namespace pcr;
namespace support = pcr::testing;

TEST(Text, TrimAndCase) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_EQ(text::trim(" \t\n"), "");
  EXPECT_EQ(text::to_lower("MiXeD"), "mixed");
}

TEST(Text, SplitLinesDropsOnlyTheFinalTerminator) {
  EXPECT_EQ(text::split_lines("a\nb\n"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(text::split_lines("a\n\nb"), (std::vector<std::string>{"a", "", "b"}));
  EXPECT_EQ(text::split_lines("a\r\nb"), (std::vector<std::string>{"a\r", "b"}));
  EXPECT_TRUE(text::split_lines("").empty());
}

TEST(Text, JoinInvertsSplitWithoutTrailingNewline) {
  for (std::string s : {"x", "x\ny", "\n\nz", "a\n\nb"}) {
    EXPECT_EQ(text::join(text::split_lines(s), "\n"), s);
  }
}

TEST(Text, Identifiers) {
  EXPECT_TRUE(text::is_identifier("StringUtils"));
  EXPECT_TRUE(text::is_identifier("$x_1"));
  EXPECT_FALSE(text::is_identifier("1x"));
  EXPECT_FALSE(text::is_identifier("a.b"));
  EXPECT_FALSE(text::is_identifier(""));
  EXPECT_TRUE(text::is_qualified_name("org.apache.commons.lang3.StringUtils"));
  EXPECT_FALSE(text::is_qualified_name("StringUtils"));
  EXPECT_FALSE(text::is_qualified_name("a..b"));
  EXPECT_FALSE(text::is_qualified_name("a.b."));
}

TEST(Text, Sha256KnownVectors) {
  EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(text::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Text, AtomicWriteRoundTrip) {
  support::TempDir dir;
  auto path = dir / "out.txt";
  text::write_file_atomic(path, "one");
  text::write_file_atomic(path, "two\n");
  EXPECT_EQ(text::read_file(path), "two\n");
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path()), {}), 1);
  EXPECT_THROW(text::read_file(dir / "missing"), IoError);
}

TEST(Snippet, LanguageParsing) {
  EXPECT_EQ(parse_language("Java"), Language::JavaLike);
  EXPECT_EQ(parse_language(" python "), Language::PythonLike);
  EXPECT_EQ(parse_language("PythonLike"), Language::PythonLike);
  EXPECT_THROW(parse_language("cobol"), ValidationError);
  EXPECT_EQ(language_from_path("a/B.java"), Language::JavaLike);
  EXPECT_EQ(language_from_path("x.py"), Language::PythonLike);
  EXPECT_EQ(language_from_path("x.txt"), std::nullopt);
}

TEST(Snippet, ConstructionValidates) {
  EXPECT_THROW(CodeSnippet("", Language::JavaLike, "int x;"), ValidationError);
  EXPECT_THROW(CodeSnippet("s", Language::JavaLike, " \n\t"), ValidationError);
  CodeSnippet s("s", Language::PythonLike, "x = 1", "so:42");
  auto t = s.with_source("y = 2");
  EXPECT_EQ(t.id(), "s");
  EXPECT_EQ(t.language(), Language::PythonLike);
  EXPECT_EQ(t.origin(), "so:42");
  EXPECT_EQ(t.source(), "y = 2");
  EXPECT_THROW(s.with_source(""), ValidationError);
}
