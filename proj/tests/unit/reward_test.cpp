#include <gtest/gtest.h>

#include "refiner/reward.hpp"

namespace refiner::objectives {
namespace {

const FlawDiagnosis kReference{RegionKind::artifact, "Texture Distortion", "the brick wall looks smeared", {0, 0, 4, 4}};

TEST(Reward, PerfectResponseScoresOne) {
  const auto b = DefaultReasoningReward{}.score(
      R"({"flaw_type": "  texture distortion ", "reasoning": "The brick wall looks smeared."})", kReference);
  EXPECT_EQ(b.format, 1.0);
  EXPECT_EQ(b.flaw_type, 1.0);
  EXPECT_EQ(b.similarity, 1.0);
  EXPECT_EQ(b.total, 1.0);
}

TEST(Reward, UnparseableResponseScoresZero) {
  for (const char* text : {"texture distortion", "[1, 2]", "{\"flaw_type\": "}) {
    const auto b = DefaultReasoningReward{}.score(text, kReference);
    EXPECT_EQ(b.total, 0.0) << text;
    EXPECT_EQ(b.similarity, 0.0) << text;
  }
}

TEST(Reward, PartialCredit) {
  const auto b = DefaultReasoningReward{}.score(R"({"flaw_type": "noise", "reasoning": "wall looks fine"})", kReference);
  EXPECT_EQ(b.format, 1.0);
  EXPECT_EQ(b.flaw_type, 0.0);
  // Overlap {wall, looks}: precision 2/3, recall 2/5.
  EXPECT_NEAR(b.similarity, 2 * (2.0 / 3) * (2.0 / 5) / (2.0 / 3 + 2.0 / 5), 1e-15);
  EXPECT_NEAR(b.total, (1.0 + b.similarity) / 3.0, 1e-15);

  const auto missing = DefaultReasoningReward{}.score(R"({"flaw_type": "texture distortion"})", kReference);
  EXPECT_EQ(missing.format, 0.0);
  EXPECT_EQ(missing.flaw_type, 1.0);
}

TEST(Reward, UnigramF1ClipsRepeatedTokens) {
  EXPECT_EQ(unigram_f1("", ""), 1.0);
  EXPECT_EQ(unigram_f1("a", ""), 0.0);
  // Candidate "the the the" against "the cat": overlap is clipped to 1.
  EXPECT_NEAR(unigram_f1("the the the", "the cat"), 2 * (1.0 / 3) * 0.5 / (1.0 / 3 + 0.5), 1e-15);
  EXPECT_EQ(word_tokens("Hello, World-42!"), (std::vector<std::string>{"hello", "world", "42"}));
}

}  // namespace
}  // namespace refiner::objectives
