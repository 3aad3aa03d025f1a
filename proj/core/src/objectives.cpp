#include "refiner/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "refiner/errors.hpp"
#include "refiner/metrics.hpp"

namespace refiner::objectives {

namespace {

constexpr double kExpPerceptual = 0.3;
constexpr double kExpInstruction = 0.4;
constexpr double kExpConsistency = 0.3;

void require_same_shape(const SaliencyMap& a, const SaliencyMap& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument(fmt::format("hybrid_saliency_loss: dimension mismatch {}x{} vs {}x{}", a.width(),
                                      a.height(), b.width(), b.height()));
  }
}

/// Prediction distribution used by the KLD term, with its normalizers.
struct KldPrediction {
  std::vector<double> q;
  double mass = 0.0;  // sum of the raw prediction
  double z = 1.0;     // 1 + N eps
};

KldPrediction kld_prediction(std::span<const double> p) {
  KldPrediction out;
  const double n = static_cast<double>(p.size());
  out.mass = std::accumulate(p.begin(), p.end(), 0.0);
  out.z = 1.0 + kKldEpsilon * n;
  out.q.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double normalized = out.mass > 0.0 ? p[i] / out.mass : 1.0 / n;
    out.q[i] = (normalized + kKldEpsilon) / out.z;
  }
  return out;
}

}  // namespace

void validate(const HybridLossWeights& w) {
  if (!(w.alpha >= 0.0 && w.beta >= 0.0 && w.alpha + w.beta <= 1.0)) {
    throw InvalidArgument(fmt::format("hybrid loss weights need alpha, beta >= 0 and alpha + beta <= 1, got {} {}",
                                      w.alpha, w.beta));
  }
}

HybridLossTerms hybrid_saliency_loss_terms(const SaliencyMap& prediction, const SaliencyMap& ground_truth,
                                           const HybridLossWeights& w) {
  validate(w);
  require_same_shape(prediction, ground_truth);
  const auto p = prediction.values();
  const auto g = ground_truth.values();
  const double n = static_cast<double>(p.size());

  HybridLossTerms t;
  for (std::size_t i = 0; i < p.size(); ++i) {
    t.l1 += std::abs(p[i] - g[i]);
    const double pc = std::clamp(p[i], kBceClamp, 1.0 - kBceClamp);
    t.bce -= g[i] * std::log(pc) + (1.0 - g[i]) * std::log(1.0 - pc);
  }
  t.l1 /= n;
  t.bce /= n;

  const double g_mass = std::accumulate(g.begin(), g.end(), 0.0);
  if (g_mass > 0.0) {
    const auto kp = kld_prediction(p);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double gi = g[i] / g_mass;
      if (gi > 0.0) t.kld += gi * std::log(gi / kp.q[i]);
    }
  }
  t.total = w.alpha * t.l1 + w.beta * t.bce + (1.0 - w.alpha - w.beta) * t.kld;
  return t;
}

double hybrid_saliency_loss(const SaliencyMap& prediction, const SaliencyMap& ground_truth,
                            const HybridLossWeights& w) {
  return hybrid_saliency_loss_terms(prediction, ground_truth, w).total;
}

std::vector<double> hybrid_saliency_loss_gradient(const SaliencyMap& prediction, const SaliencyMap& ground_truth,
                                                  const HybridLossWeights& w) {
  validate(w);
  require_same_shape(prediction, ground_truth);
  const auto p = prediction.values();
  const auto g = ground_truth.values();
  const double n = static_cast<double>(p.size());
  const double w_kld = 1.0 - w.alpha - w.beta;

  std::vector<double> grad(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - g[i];
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    grad[i] += w.alpha * sign / n;
    if (p[i] > kBceClamp && p[i] < 1.0 - kBceClamp) {
      grad[i] += w.beta * (-g[i] / p[i] + (1.0 - g[i]) / (1.0 - p[i])) / n;
    }
  }

  const double g_mass = std::accumulate(g.begin(), g.end(), 0.0);
  const auto kp = kld_prediction(p);
  if (g_mass > 0.0 && kp.mass > 0.0 && w_kld != 0.0) {
    // KL = const - sum_i g_i log q_i, q_i = (p_i / P + eps) / Z.
    // d q_i / d p_k = (delta_ik / P - p_i / P^2) / Z.
    double cross = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] / g_mass;
      if (gi > 0.0) cross += gi * p[i] / kp.q[i];
    }
    const double P = kp.mass;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] / g_mass;
      const double direct = gk > 0.0 ? gk / (kp.q[k] * P) : 0.0;
      grad[k] += w_kld * (-(direct - cross / (P * P)) / kp.z);
    }
  }
  return grad;
}

void validate(const GrpoBatch& b) {
  const std::size_t n = b.log_probs_policy.size();
  if (n == 0) throw InvalidArgument("grpo: empty batch");
  if (b.log_probs_ref.size() != n || b.advantages.size() != n) {
    throw InvalidArgument(fmt::format("grpo: sequence lengths differ ({}, {}, {})", n, b.log_probs_ref.size(),
                                      b.advantages.size()));
  }
  if (!(b.clip_eps > 0.0 && b.clip_eps < 1.0)) {
    throw InvalidArgument(fmt::format("grpo: clip_eps must lie in (0,1), got {}", b.clip_eps));
  }
  if (!(b.kl_coeff >= 0.0) || !std::isfinite(b.kl_coeff)) {
    throw InvalidArgument(fmt::format("grpo: kl_coeff must be >= 0, got {}", b.kl_coeff));
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!std::isfinite(b.log_probs_policy[t]) || !std::isfinite(b.log_probs_ref[t]) ||
        !std::isfinite(b.advantages[t])) {
      throw InvalidArgument(fmt::format("grpo: non-finite input at token {}", t));
    }
  }
}

double grpo_objective(const GrpoBatch& b) {
  validate(b);
  const std::size_t n = b.advantages.size();
  double surrogate = 0.0;
  double kl = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double log_ratio = b.log_probs_policy[t] - b.log_probs_ref[t];
    const double r = std::exp(log_ratio);
    const double clipped = std::clamp(r, 1.0 - b.clip_eps, 1.0 + b.clip_eps);
    surrogate += std::min(r * b.advantages[t], clipped * b.advantages[t]);
    kl += log_ratio;
  }
  const double tokens = static_cast<double>(n);
  return surrogate / tokens - b.kl_coeff * (kl / tokens);
}

GrpoGradient grpo_gradient(const GrpoBatch& b) {
  validate(b);
  const std::size_t n = b.advantages.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  GrpoGradient g;
  g.d_log_probs_policy.resize(n);
  g.d_log_probs_ref.resize(n);
  g.d_advantages.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double a = b.advantages[t];
    const double r = std::exp(b.log_probs_policy[t] - b.log_probs_ref[t]);
    const double clipped = std::clamp(r, 1.0 - b.clip_eps, 1.0 + b.clip_eps);
    const bool inside = r > 1.0 - b.clip_eps && r < 1.0 + b.clip_eps;
    double d_ratio = 0.0;  // d surrogate / d r
    if (r * a <= clipped * a) {
      d_ratio = a;
      g.d_advantages[t] = r * inv_n;
    } else {
      d_ratio = inside ? a : 0.0;
      g.d_advantages[t] = clipped * inv_n;
    }
    // d r / d log pi = r, d r / d log pi_ref = -r.
    g.d_log_probs_policy[t] = (d_ratio * r - b.kl_coeff) * inv_n;
    g.d_log_probs_ref[t] = (-d_ratio * r + b.kl_coeff) * inv_n;
  }
  return g;
}

std::vector<double> group_normalized_advantages(std::span<const double> rewards) {
  std::vector<double> out(rewards.size(), 0.0);
  if (rewards.empty()) return out;
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / n);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

std::vector<double> broadcast_to_tokens(std::span<const double> per_response, std::span<const int> token_counts) {
  if (per_response.size() != token_counts.size()) {
    throw InvalidArgument("broadcast_to_tokens: one token count per response required");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < per_response.size(); ++i) {
    if (token_counts[i] < 0) throw InvalidArgument("broadcast_to_tokens: negative token count");
    out.insert(out.end(), static_cast<std::size_t>(token_counts[i]), per_response[i]);
  }
  return out;
}

double score_loss(std::span<const DimensionScores> prediction, std::span<const DimensionScores> ground_truth) {
  if (prediction.size() != ground_truth.size()) {
    throw InvalidArgument(fmt::format("score_loss: {} predictions vs {} targets", prediction.size(),
                                      ground_truth.size()));
  }
  if (prediction.size() < 3) throw InvalidArgument("score_loss: need at least 3 items");
  const double n = static_cast<double>(prediction.size());

  double loss = 0.0;
  for (Dimension d : kDimensions) {
    std::vector<double> p;
    std::vector<double> g;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
      p.push_back(prediction[i].get(d));
      g.push_back(ground_truth[i].get(d));
    }
    if (std::all_of(g.begin(), g.end(), [&](double v) { return v == g.front(); })) {
      throw UndefinedMetric(fmt::format("score_loss: constant ground truth in {}", to_string(d)));
    }
    double mse = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mse += (p[i] - g[i]) * (p[i] - g[i]);
    mse /= n;
    const bool flat = std::all_of(p.begin(), p.end(), [&](double v) { return v == p.front(); });
    const double corr = flat ? 0.0 : metrics::pearson(p, g);
    loss += mse + (1.0 - corr);
  }
  return loss;
}

double overall_score(const DimensionScores& s) {
  for (Dimension d : kDimensions) {
    const double v = s.get(d);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(fmt::format("overall_score: {} = {} is not positive", to_string(d), v));
    }
  }
  // Exponents sum to 1, so the product equals s_e (s_v/s_e)^0.3 (s_p/s_e)^0.3. In this form
  // equal scores give exactly that score.
  static_assert(kExpPerceptual + kExpInstruction + kExpConsistency == 1.0);
  const double e = s.instruction_following;
  return e * std::pow(s.perceptual_quality / e, kExpPerceptual) * std::pow(s.visual_consistency / e, kExpConsistency);
}

DimensionScores floor_scores(const DimensionScores& s) {
  return {std::max(s.perceptual_quality, kScoreFloor), std::max(s.instruction_following, kScoreFloor),
          std::max(s.visual_consistency, kScoreFloor)};
}

}  // namespace refiner::objectives
