#include "refiner/mos.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refiner/errors.hpp"

namespace refiner::mos {

namespace {

struct Spread {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1); 0 for a single value
};

Spread spread(const std::vector<double>& v) {
  Spread s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return s;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return s;
}

std::vector<RatingRecord> canonical(std::vector<RatingRecord> records) {
  std::sort(records.begin(), records.end());
  return records;
}

}  // namespace

double rescale_z(double z_mean) { return std::clamp(100.0 * (z_mean + 3.0) / 6.0, 0.0, 100.0); }

OutlierResult reject_outliers(const std::vector<RatingRecord>& panel, OutlierScope scope) {
  OutlierResult out;
  if (panel.empty()) return out;

  const auto records = canonical(panel);
  std::map<std::string, std::vector<double>> by_annotator;
  for (const auto& r : records) {
    if (!(r.raw_score >= 1.0 && r.raw_score <= 5.0)) {
      throw InvalidArgument(
          fmt::format("rating {} by '{}' for '{}' outside [1,5]", r.raw_score, r.annotator_id, r.image_id));
    }
    by_annotator[r.annotator_id].push_back(r.raw_score);
  }
  for (const auto& [id, scores] : by_annotator) {
    if (scores.size() < 2) {
      throw InvalidArgument(fmt::format("annotator '{}' has {} rating(s), need at least 2", id, scores.size()));
    }
  }

  using GroupKey = std::tuple<std::string, Dimension>;
  auto group_of = [scope](const RatingRecord& r) {
    return scope == OutlierScope::per_image ? GroupKey{r.image_id, r.dimension}
                                            : GroupKey{r.annotator_id, r.dimension};
  };
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& r : records) groups[group_of(r)].push_back(r.raw_score);
  std::map<GroupKey, Spread> group_spread;
  for (const auto& [key, scores] : groups) group_spread[key] = spread(scores);

  std::map<std::string, int> outliers;
  for (const auto& r : records) {
    const Spread& g = group_spread.at(group_of(r));
    if (std::abs(r.raw_score - g.mean) > kOutlierSigmas * g.std) {
      out.removed.push_back(r);
      ++outliers[r.annotator_id];
    } else {
      out.kept.push_back(r);
    }
  }

  for (const auto& [id, scores] : by_annotator) {
    const Spread s = spread(scores);
    out.stats.push_back({id, s.mean, s.std, static_cast<int>(scores.size()), outliers[id]});
  }
  return out;
}

std::vector<std::string> exclude_annotators(const std::vector<AnnotatorStats>& stats) {
  std::vector<std::string> excluded;
  for (const auto& s : stats) {
    // n_outliers / n_ratings > 5%, kept in integers so 5 of 100 is exactly on the boundary.
    if (s.n_ratings > 0 && 20 * s.n_outliers > s.n_ratings) excluded.push_back(s.annotator_id);
  }
  std::sort(excluded.begin(), excluded.end());
  return excluded;
}

MosOutput compute_mos(const std::vector<RatingRecord>& kept) {
  MosOutput out;
  const auto records = canonical(kept);

  using AnnotatorKey = std::tuple<std::string, Dimension>;
  std::map<AnnotatorKey, std::vector<double>> per_annotator;
  for (const auto& r : records) per_annotator[{r.annotator_id, r.dimension}].push_back(r.raw_score);
  std::map<AnnotatorKey, Spread> annotator_spread;
  for (const auto& [key, scores] : per_annotator) {
    const Spread s = spread(scores);
    if (s.std > 0.0) {
      annotator_spread[key] = s;
    } else {
      out.warnings.push_back({std::get<0>(key), std::get<1>(key),
                              fmt::format("annotator has zero rating spread over {} rating(s); dropped",
                                          scores.size())});
    }
  }

  using ImageKey = std::tuple<std::string, Dimension>;
  std::map<ImageKey, std::vector<double>> z_by_image;
  for (const auto& r : records) {
    const auto it = annotator_spread.find({r.annotator_id, r.dimension});
    if (it == annotator_spread.end()) continue;
    z_by_image[{r.image_id, r.dimension}].push_back((r.raw_score - it->second.mean) / it->second.std);
  }
  for (const auto& [key, zs] : z_by_image) {
    double sum = 0.0;
    for (double z : zs) sum += z;
    const double z_mean = sum / static_cast<double>(zs.size());
    out.results.push_back({std::get<0>(key), std::get<1>(key), z_mean, rescale_z(z_mean), static_cast<int>(zs.size())});
  }
  return out;
}

PipelineOutput run_pipeline(const std::vector<RatingRecord>& panel, OutlierScope scope) {
  PipelineOutput out;
  out.outliers = reject_outliers(panel, scope);
  out.excluded_annotators = exclude_annotators(out.outliers.stats);
  const std::set<std::string> excluded(out.excluded_annotators.begin(), out.excluded_annotators.end());
  std::vector<RatingRecord> surviving;
  for (const auto& r : out.outliers.kept) {
    if (!excluded.contains(r.annotator_id)) surviving.push_back(r);
  }
  out.mos = compute_mos(surviving);
  return out;
}

std::string to_csv(const std::vector<MosResult>& results) {
  std::string csv = "image_id,dimension,z_mean,score,n_valid\n";
  for (const auto& r : results) {
    csv += fmt::format("{},{},{:.17g},{:.17g},{}\n", r.image_id, to_string(r.dimension), r.z_mean, r.score,
                       r.n_valid);
  }
  return csv;
}

void to_json(nlohmann::json& j, const RatingRecord& r) {
  j = {{"annotator_id", r.annotator_id},
       {"image_id", r.image_id},
       {"dimension", std::string(to_string(r.dimension))},
       {"raw_score", r.raw_score}};
}

void from_json(const nlohmann::json& j, RatingRecord& r) {
  j.at("annotator_id").get_to(r.annotator_id);
  j.at("image_id").get_to(r.image_id);
  r.dimension = parse_dimension(j.at("dimension").get<std::string>());
  j.at("raw_score").get_to(r.raw_score);
}

}  // namespace refiner::mos
