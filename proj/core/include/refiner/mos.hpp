#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "refiner/types.hpp"

namespace refiner::mos {

/// One raw rating s_ij on the continuous 5-point scale.
struct RatingRecord {
  std::string annotator_id;
  std::string image_id;
  Dimension dimension = Dimension::perceptual_quality;
  double raw_score = 0.0;

  friend auto operator<=>(const RatingRecord&, const RatingRecord&) = default;
};

struct AnnotatorStats {
  std::string annotator_id;
  double mean = 0.0;
  double std = 0.0;
  int n_ratings = 0;
  int n_outliers = 0;

  friend bool operator==(const AnnotatorStats&, const AnnotatorStats&) = default;
};

struct MosResult {
  std::string image_id;
  Dimension dimension = Dimension::perceptual_quality;
  double z_mean = 0.0;
  double score = 0.0;  // 100 (z_mean + 3) / 6, clipped to [0, 100]
  int n_valid = 0;

  friend bool operator==(const MosResult&, const MosResult&) = default;
};

/// Against which peer group a rating's deviation is measured.
enum class OutlierScope {
  per_image,      // mean/std of all annotators' ratings of the same image and dimension
  per_annotator,  // mean/std of the same annotator's ratings in that dimension
};

struct OutlierResult {
  std::vector<RatingRecord> kept;
  std::vector<RatingRecord> removed;
  std::vector<AnnotatorStats> stats;  // sorted by annotator_id
};

struct MosWarning {
  std::string annotator_id;
  Dimension dimension = Dimension::perceptual_quality;
  std::string message;
};

struct MosOutput {
  std::vector<MosResult> results;  // sorted by (image_id, dimension)
  std::vector<MosWarning> warnings;
};

struct PipelineOutput {
  OutlierResult outliers;
  std::vector<std::string> excluded_annotators;
  MosOutput mos;
};

/// Threshold multiplier: a rating further than this many standard deviations from the mean is an outlier.
inline constexpr double kOutlierSigmas = 2.0;

/// Removes ratings more than two (sample) standard deviations from their group mean.
/// Throws InvalidArgument if an annotator has fewer than 2 ratings or a score is outside [1,5].
OutlierResult reject_outliers(const std::vector<RatingRecord>& panel,
                              OutlierScope scope = OutlierScope::per_image);

/// Annotators whose outlier share strictly exceeds 5%.
std::vector<std::string> exclude_annotators(const std::vector<AnnotatorStats>& stats);

/// Per-annotator, per-dimension z-scores averaged per image and rescaled to [0,100].
/// Annotators with zero spread in a dimension are dropped from it with a warning.
MosOutput compute_mos(const std::vector<RatingRecord>& kept);

/// reject_outliers -> exclude_annotators -> compute_mos.
PipelineOutput run_pipeline(const std::vector<RatingRecord>& panel, OutlierScope scope = OutlierScope::per_image);

/// 100 (z + 3) / 6 clipped to [0, 100].
double rescale_z(double z_mean);

std::string to_csv(const std::vector<MosResult>& results);

void to_json(nlohmann::json& j, const RatingRecord& r);
void from_json(const nlohmann::json& j, RatingRecord& r);

}  // namespace refiner::mos
