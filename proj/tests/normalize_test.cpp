#include "confcorrect/normalize.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

namespace cc = confcorrect;
using Words = std::vector<std::string>;

TEST(NormalizeText, UppercasesAndStripsPunctuation) {
  EXPECT_EQ(cc::normalize_text("How many refills?"), (Words{"HOW", "MANY", "REFILLS"}));
}

TEST(NormalizeText, EmptyInputYieldsNoWords) {
  EXPECT_TRUE(cc::normalize_text("").empty());
  EXPECT_TRUE(cc::normalize_text("  \t\n ").empty());
  EXPECT_TRUE(cc::normalize_text("?! ...").empty());
}

TEST(NormalizeText, KeepsApostrophes) {
  EXPECT_EQ(cc::normalize_text("what's apple trading at"), (Words{"WHAT'S", "APPLE", "TRADING", "AT"}));
}

TEST(NormalizeText, CollapsesWhitespaceAndKeepsDigits) {
  EXPECT_EQ(cc::normalize_text("  call\t911\n now "), (Words{"CALL", "911", "NOW"}));
}

TEST(NormalizeText, Presets) {
  EXPECT_EQ(cc::normalize_text("don't co-op", cc::NormalizationConfig::preset("no-apostrophe")),
            (Words{"DONT", "COOP"}));
  EXPECT_EQ(cc::normalize_text("don't co-op", cc::NormalizationConfig::preset("keep-hyphen")),
            (Words{"DON'T", "CO-OP"}));
  EXPECT_THROW(cc::NormalizationConfig::preset("bogus"), cc::ParameterError);
}

TEST(NormalizeText, DropsNonAsciiBytes) {
  EXPECT_EQ(cc::normalize_text("caf\xc3\xa9 au lait"), (Words{"CAF", "AU", "LAIT"}));
}

TEST(NormalizeText, IdempotentOnRandomInput) {
  std::mt19937 rng(7);
  const std::string alphabet = "abcXYZ019 '\t.,?!-\"\n";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(0, 40);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string raw;
    for (int i = len(rng); i > 0; --i) raw += alphabet[pick(rng)];
    const auto once = cc::normalize_text(raw);
    EXPECT_EQ(cc::normalize_text(cc::join_words(once)), once) << raw;
  }
}
