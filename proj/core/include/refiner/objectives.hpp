#pragma once

#include <span>
#include <vector>

#include "refiner/types.hpp"

namespace refiner::objectives {

/// Probability clamp for the BCE term.
inline constexpr double kBceClamp = 1e-7;
/// Floor applied to evaluator scores before they enter overall_score.
inline constexpr double kScoreFloor = 1e-6;
/// Regularizer added to the sum-normalized prediction in the KLD term.
inline constexpr double kKldEpsilon = 1e-7;

struct HybridLossWeights {
  double alpha = 0.3;  // L1
  double beta = 0.3;   // BCE; KLD gets 1 - alpha - beta
};

/// Throws InvalidArgument unless alpha, beta >= 0 and alpha + beta <= 1.
void validate(const HybridLossWeights& w);

struct HybridLossTerms {
  double l1 = 0.0;
  double bce = 0.0;
  double kld = 0.0;
  double total = 0.0;
};

/// alpha * mean|S - S_gt| + beta * mean BCE(S, S_gt) + (1 - alpha - beta) * KL(S_gt || S).
///
/// BCE clamps the prediction into [kBceClamp, 1 - kBceClamp]. The KL term compares the
/// sum-normalized maps with the prediction floored by kKldEpsilon and re-normalized; it is 0
/// when the ground truth has no mass, and an all-zero prediction is treated as uniform.
HybridLossTerms hybrid_saliency_loss_terms(const SaliencyMap& prediction, const SaliencyMap& ground_truth,
                                           const HybridLossWeights& w = {});
double hybrid_saliency_loss(const SaliencyMap& prediction, const SaliencyMap& ground_truth,
                            const HybridLossWeights& w = {});

/// d loss / d prediction, row-major. Zero where a term is not differentiable (clamped BCE,
/// L1 at equality, all-zero prediction in KLD).
std::vector<double> hybrid_saliency_loss_gradient(const SaliencyMap& prediction, const SaliencyMap& ground_truth,
                                                  const HybridLossWeights& w = {});

/// Per-token inputs of the clipped-ratio policy objective.
struct GrpoBatch {
  std::vector<double> log_probs_policy;
  std::vector<double> log_probs_ref;
  std::vector<double> advantages;
  double clip_eps = 0.2;
  double kl_coeff = 0.0;
};

/// Throws InvalidArgument on length mismatch, empty batch, clip_eps outside (0,1),
/// negative kl_coeff, or non-finite inputs.
void validate(const GrpoBatch& b);

/// mean_t min(r_t A_t, clip(r_t, 1-eps, 1+eps) A_t) - kl_coeff * mean_t(log pi - log pi_ref),
/// with r_t = exp(log pi - log pi_ref).
double grpo_objective(const GrpoBatch& b);

struct GrpoGradient {
  std::vector<double> d_log_probs_policy;
  std::vector<double> d_log_probs_ref;
  std::vector<double> d_advantages;
};

GrpoGradient grpo_gradient(const GrpoBatch& b);

/// Group-relative advantages: (reward - group mean) / group population std; all zero when
/// the group has no spread.
std::vector<double> group_normalized_advantages(std::span<const double> rewards);

/// Repeats each response's advantage over its tokens.
std::vector<double> broadcast_to_tokens(std::span<const double> per_response, std::span<const int> token_counts);

/// sum over dimensions of MSE + (1 - PLCC). Needs >= 3 items; a constant ground-truth
/// dimension throws UndefinedMetric. Constant predictions count as zero correlation.
double score_loss(std::span<const DimensionScores> prediction, std::span<const DimensionScores> ground_truth);

/// s_v^0.3 * s_e^0.4 * s_p^0.3. Throws InvalidArgument on a non-positive or non-finite score.
double overall_score(const DimensionScores& s);

/// Raises every component to at least kScoreFloor.
DimensionScores floor_scores(const DimensionScores& s);

}  // namespace refiner::objectives
