#pragma once

#include <span>
#include <vector>

#include "refiner/types.hpp"

namespace refiner {

struct Pixel {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Fixation locations for NSS / AUC-Judd. Points must lie inside the map.
struct FixationSet {
  std::vector<Pixel> points;
};

/// Paired predicted scores and human MOS.
struct ScoreSeries {
  std::vector<double> predictions;
  std::vector<double> ground_truth;
};

namespace metrics {

/// Regularizer added to the sum-normalized prediction before the log in KLD.
inline constexpr double kKldEpsilon = 1e-7;

// Saliency-map metrics. All throw InvalidArgument on dimension mismatch and
// UndefinedMetric where the statistic does not exist for the input.

/// Pearson correlation of the two maps as flat vectors. Either map constant -> UndefinedMetric.
double cc(const SaliencyMap& prediction, const SaliencyMap& ground_truth);

/// Histogram intersection of the sum-normalized maps. Zero mass -> UndefinedMetric.
double sim(const SaliencyMap& prediction, const SaliencyMap& ground_truth);

/// KL(ground_truth || prediction) over sum-normalized maps.
///
/// The prediction distribution is p' = (p + eps) / sum(p + eps), i.e. the floor is added to
/// every pixel and the result re-normalized, so p' is a proper distribution and the
/// divergence is non-negative. Zero mass in either map -> UndefinedMetric.
double kld(const SaliencyMap& prediction, const SaliencyMap& ground_truth);

/// Mean z-scored prediction value (population std) at the fixations.
double nss(const SaliencyMap& prediction, const FixationSet& fixations);

/// Judd ROC area.
///
/// Positives are the distinct fixation pixels, negatives every other pixel. Thresholds are
/// the distinct prediction values at fixations, swept from high to low; a pixel counts as
/// detected when its value is >= the threshold, so a non-fixation pixel tied with a fixation
/// value is a false positive at that threshold. The curve is closed with (0,0) and (1,1)
/// and integrated with the trapezoid rule.
double auc_judd(const SaliencyMap& prediction, const FixationSet& fixations);

// Score-series correlations. Length mismatch or n < 3 -> InvalidArgument;
// constant ground truth (or constant predictions) -> UndefinedMetric.

/// Pearson linear correlation.
double plcc(const ScoreSeries& series);
/// Spearman rank correlation with average ranks on ties.
double srcc(const ScoreSeries& series);
/// Kendall tau-b.
double krcc(const ScoreSeries& series);

/// Fractional (average-on-ties) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of two equal-length vectors; UndefinedMetric if either is constant.
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace metrics
}  // namespace refiner
