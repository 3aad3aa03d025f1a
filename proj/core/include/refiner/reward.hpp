#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "refiner/types.hpp"

namespace refiner::objectives {

struct RewardBreakdown {
  double format = 0.0;
  double flaw_type = 0.0;
  double similarity = 0.0;
  double total = 0.0;
};

/// Scores one reasoning-model response against a reference diagnosis.
class RewardFunction {
 public:
  virtual ~RewardFunction() = default;
  virtual RewardBreakdown score(std::string_view response, const FlawDiagnosis& reference) const = 0;
};

/// Equal-weight mean of three components:
///  - format: 1 if the response is a JSON object with non-empty string fields
///    "flaw_type" and "reasoning", else 0;
///  - flaw_type: 1 if the response's flaw type equals the reference's (case and
///    surrounding whitespace ignored), else 0;
///  - similarity: unigram F1 between the response reasoning and the reference reasoning.
/// An unparseable response scores 0 on all three.
class DefaultReasoningReward final : public RewardFunction {
 public:
  RewardBreakdown score(std::string_view response, const FlawDiagnosis& reference) const override;
};

/// Lower-cased alphanumeric tokens.
std::vector<std::string> word_tokens(std::string_view text);

/// Unigram F1 with clipped counts; 1 when both texts are empty.
double unigram_f1(std::string_view candidate, std::string_view reference);

}  // namespace refiner::objectives
