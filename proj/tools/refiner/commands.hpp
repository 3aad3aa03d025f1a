#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "refiner/backends/mock.hpp"
#include "refiner/metrics.hpp"
#include "refiner/mos.hpp"

namespace refiner::cli {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int parallelism = 1;
  std::string log_level = "info";
};

struct BuildGtOptions {
  fs::path manifest;
  fs::path out_dir;
  double sigma_factor = 0.5;
  std::string normalization = "peak";
};

struct EvalSaliencyOptions {
  fs::path pred_dir;
  fs::path gt_dir;
  fs::path fixations_dir;  // defaults to gt_dir
  fs::path out;
};

struct ComputeMosOptions {
  fs::path ratings;
  fs::path out;
  std::string outlier_scope = "per-image";
  std::optional<fs::path> report;
};

struct RefineOptions {
  fs::path manifest;
  std::optional<std::string> endpoints;
  bool mock = false;
  std::optional<fs::path> mock_schedule;
  int max_turns = 4;
  double improvement_epsilon = 0.0;
  bool keep_last = false;
  double tau = 0.5;
  int min_area = 16;
  std::string connectivity = "eight";
  fs::path out_dir;
};

struct EvalObjectivesOptions {
  fs::path fixtures;
  fs::path out;
};

// Each command returns its process exit code. Input problems surface as InvalidArgument,
// ParseError or ValidationError (exit 2); anything else is a runtime failure (exit 1).

int build_gt(const BuildGtOptions& opts, const GlobalOptions& global);
int eval_saliency(const EvalSaliencyOptions& opts, const GlobalOptions& global);
int compute_mos(const ComputeMosOptions& opts, const GlobalOptions& global);
int refine(const RefineOptions& opts, const GlobalOptions& global);
int eval_objectives(const EvalObjectivesOptions& opts, const GlobalOptions& global);

/// One eval-saliency row; metrics that are undefined for the pair are empty.
struct SaliencyRow {
  std::string stem;
  std::optional<double> auc_judd, nss, cc, sim, kld;
  std::string error;
};

SaliencyRow evaluate_saliency_pair(const std::string& stem, const SaliencyMap& prediction,
                                   const SaliencyMap& ground_truth, const FixationSet& fixations);

/// Ratings as JSON (array of records) or CSV with header annotator_id,image_id,dimension,raw_score.
std::vector<mos::RatingRecord> load_ratings(const fs::path& path);

/// {"<image id>": [score or [s_v, s_e, s_p], ...], "*": [...]} -> per-image scripted schedules.
/// A bare number s stands for (s, s, s).
std::vector<std::pair<std::string, std::vector<DimensionScores>>> load_mock_schedule(const fs::path& path);

}  // namespace refiner::cli
