#include <gtest/gtest.h>

#include "forage/text.hpp"

using namespace forage;

TEST(Text, TokenizeLowercasesAndSplits) {
  EXPECT_EQ(tokenize("Hello, World! x2-y"), (std::vector<std::string>{"hello", "world", "x2", "y"}));
  EXPECT_TRUE(tokenize("  ...  ").empty());
  EXPECT_EQ(tokenize("caf\xc3\xa9 bar"), (std::vector<std::string>{"caf", "bar"}));
}

TEST(Text, ContentTokensDropStopwords) {
  EXPECT_EQ(content_tokens("the mentor of Zorba"), (std::set<std::string>{"mentor", "zorba"}));
  EXPECT_TRUE(is_stopword("which"));
  EXPECT_FALSE(is_stopword("mentor"));
}

TEST(Text, NormalizeAnswer) {
  EXPECT_EQ(normalize_answer("  The  Eiffel   Tower. "), "eiffel tower");
  EXPECT_EQ(normalize_answer("An apple"), "apple");
  // only one leading article goes
  EXPECT_EQ(normalize_answer("the the band"), "the band");
  EXPECT_EQ(normalize_answer("Theodore"), "theodore");
  EXPECT_EQ(normalize_answer(""), "");
}

TEST(Text, TrimAndSplit) {
  EXPECT_EQ(trim("\t a b \n"), "a b");
  EXPECT_EQ(split_whitespace(" a  b\tc\n"), (std::vector<std::string>{"a", "b", "c"}));
}
