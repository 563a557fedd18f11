#include <gtest/gtest.h>

#include <random>

#include "pcr/response_parse.hpp"

using namespace pcr;
using Names = std::vector<std::string>;

TEST(SimpleNames, SeparatorsAndDecoration) {
  EXPECT_EQ(parse_simple_names("StringUtils"), Names{"StringUtils"});
  EXPECT_EQ(parse_simple_names("List\nArrayList\n"), (Names{"List", "ArrayList"}));
  EXPECT_EQ(parse_simple_names("List, Map, List"), (Names{"List", "Map"}));
  EXPECT_EQ(parse_simple_names("- `Gson`\n* \"JsonObject\"\n"), (Names{"Gson", "JsonObject"}));
  EXPECT_EQ(parse_simple_names("```\nDateTime\n```"), Names{"DateTime"});
  EXPECT_TRUE(parse_simple_names("").empty());
}

TEST(SimpleNames, ResultsAreIdentifiers) {
  for (const auto& n : parse_simple_names("Foo, 1bad, a.b.C, Bar;\n@@\n")) {
    ASSERT_FALSE(n.empty());
    EXPECT_TRUE(std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_' || n[0] == '$') << n;
    EXPECT_EQ(n.find('.'), std::string::npos) << n;
  }
}

TEST(FqnMappings, Formats) {
  auto r = parse_fqn_mappings(
      "StringUtils -> org.apache.commons.lang3.StringUtils\nGson: com.google.gson.Gson\nList = java.util.List\n",
      {"StringUtils", "Gson", "List"});
  ASSERT_EQ(r.mappings.size(), 3u);
  EXPECT_EQ(r.mappings[0], make_mapping("StringUtils", "org.apache.commons.lang3.StringUtils"));
  EXPECT_EQ(r.mappings[1].fqn, "com.google.gson.Gson");
  EXPECT_EQ(r.mappings[2].fqn, "java.util.List");
  EXPECT_TRUE(r.misses.empty());
}

TEST(FqnMappings, BareQualifiedNamesAndMisses) {
  auto r = parse_fqn_mappings("import java.util.ArrayList;\n", {"ArrayList", "HashMap"});
  ASSERT_EQ(r.mappings.size(), 1u);
  EXPECT_EQ(r.mappings[0].simple_name, "ArrayList");
  EXPECT_EQ(r.mappings[0].fqn, "java.util.ArrayList");
  EXPECT_EQ(r.misses, Names{"HashMap"});
}

TEST(FqnMappings, SuspectFlag) {
  EXPECT_FALSE(make_mapping("List", "java.util.List").suspect);
  EXPECT_TRUE(make_mapping("List", "java.util.ArrayList").suspect);
  EXPECT_TRUE(make_mapping("List", "List").suspect);
  auto r = parse_fqn_mappings("Foo -> com.example.Bar", {"Foo"});
  ASSERT_EQ(r.mappings.size(), 1u);
  EXPECT_TRUE(r.mappings[0].suspect);
}

TEST(FixedCode, FencesAndFallback) {
  EXPECT_EQ(parse_fixed_code("Here:\n```java\nint x = 1;\n```\nDone."), "int x = 1;");
  EXPECT_EQ(parse_fixed_code("```\na\n```\n```python\nlonger = 2\n```"), "longer = 2");
  EXPECT_EQ(parse_fixed_code("  x = 1\n"), "x = 1");
  EXPECT_THROW(parse_fixed_code(" \n\t"), ResponseParseError);
}

// Arbitrary text never makes a parser throw, except a blank fix response.
TEST(ParseProperty, Totality) {
  std::mt19937 rng(11);
  const std::string alphabet = "aZ_$.,;:->=`\"'*#@ \n\t{}()[]0123456789\x01\xff";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    int n = std::uniform_int_distribution<>(0, 80)(rng);
    for (int k = 0; k < n; ++k) s += alphabet[rng() % alphabet.size()];
    EXPECT_NO_THROW(parse_simple_names(s));
    auto names = parse_simple_names(s);
    EXPECT_NO_THROW(parse_fqn_mappings(s, names));
    auto r = parse_fqn_mappings(s, names);
    EXPECT_EQ(r.mappings.size() + r.misses.size(), names.size());
    bool blank = s.find_first_not_of(" \n\t") == std::string::npos;
    if (!blank) {
      try {
        parse_fixed_code(s);
      } catch (const ResponseParseError&) {
        // a fence with nothing inside and nothing around it
      }
    }
  }
}
