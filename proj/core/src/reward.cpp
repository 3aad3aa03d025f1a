#include "refiner/reward.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <nlohmann/json.hpp>

namespace refiner::objectives {

namespace {

std::string normalized_label(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  auto end = s.find_last_not_of(" \t\r\n");
  std::string out = begin == std::string_view::npos ? std::string{} : std::string(s.substr(begin, end - begin + 1));
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

double unigram_f1(std::string_view candidate, std::string_view reference) {
  const auto c = word_tokens(candidate);
  const auto r = word_tokens(reference);
  if (c.empty() && r.empty()) return 1.0;
  if (c.empty() || r.empty()) return 0.0;
  std::map<std::string, int> ref_counts;
  for (const auto& t : r) ++ref_counts[t];
  int overlap = 0;
  for (const auto& t : c) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(c.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

RewardBreakdown DefaultReasoningReward::score(std::string_view response, const FlawDiagnosis& reference) const {
  RewardBreakdown b;
  const auto j = nlohmann::json::parse(response, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return b;

  const auto field = [&](const char* key) -> std::string {
    const auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : std::string{};
  };
  const std::string flaw_type = field("flaw_type");
  const std::string reasoning = field("reasoning");

  b.format = !flaw_type.empty() && !reasoning.empty() ? 1.0 : 0.0;
  b.flaw_type = !flaw_type.empty() && normalized_label(flaw_type) == normalized_label(reference.flaw_type) ? 1.0 : 0.0;
  b.similarity = unigram_f1(reasoning, reference.reasoning);
  b.total = (b.format + b.flaw_type + b.similarity) / 3.0;
  return b;
}

}  // namespace refiner::objectives
