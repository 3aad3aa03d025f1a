#include "refiner/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "refiner/errors.hpp"

namespace refiner::metrics {

namespace {

void require_same_shape(const SaliencyMap& a, const SaliencyMap& b, const char* metric) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument(fmt::format("{}: dimension mismatch {}x{} vs {}x{}", metric, a.width(), a.height(),
                                      b.width(), b.height()));
  }
}

double total_mass(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<double> sum_normalized(std::span<const double> v, const char* metric) {
  const double mass = total_mass(v);
  if (!(mass > 0.0)) throw UndefinedMetric(fmt::format("{}: map has zero total mass", metric));
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= mass;
  return out;
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;  // population
};

Moments moments(std::span<const double> v) {
  Moments m;
  // A constant input has zero spread exactly; the summed mean can be off by an ulp.
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
    m.mean = v.front();
    return m;
  }
  m.mean = total_mass(v) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

std::vector<Pixel> unique_fixations(const SaliencyMap& map, const FixationSet& fixations, const char* metric) {
  if (fixations.points.empty()) throw InvalidArgument(fmt::format("{}: empty fixation set", metric));
  std::set<Pixel> unique;
  for (const auto& p : fixations.points) {
    if (p.x < 0 || p.y < 0 || p.x >= map.width() || p.y >= map.height()) {
      throw InvalidArgument(fmt::format("{}: fixation ({}, {}) outside {}x{}", metric, p.x, p.y, map.width(),
                                        map.height()));
    }
    unique.insert(p);
  }
  return {unique.begin(), unique.end()};
}

void require_series(const ScoreSeries& s, const char* metric) {
  if (s.predictions.size() != s.ground_truth.size()) {
    throw InvalidArgument(fmt::format("{}: {} predictions vs {} ground-truth values", metric, s.predictions.size(),
                                      s.ground_truth.size()));
  }
  if (s.predictions.size() < 3) throw InvalidArgument(fmt::format("{}: need at least 3 pairs", metric));
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

/// Number of pairs i < j with v[i] > v[j]; sorts v as a side effect.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

/// Sum over runs of equal adjacent values of run*(run-1)/2.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal_to_previous) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal_to_previous(i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw InvalidArgument("pearson: length mismatch or empty input");
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  if (ma.std == 0.0 || mb.std == 0.0) throw UndefinedMetric("pearson: constant input");
  double cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cov += (a[i] - ma.mean) * (b[i] - mb.mean);
  cov /= static_cast<double>(a.size());
  return std::clamp(cov / (ma.std * mb.std), -1.0, 1.0);
}

double cc(const SaliencyMap& prediction, const SaliencyMap& ground_truth) {
  require_same_shape(prediction, ground_truth, "cc");
  if (is_constant(prediction.values()) || is_constant(ground_truth.values())) {
    throw UndefinedMetric("cc: constant map");
  }
  return pearson(prediction.values(), ground_truth.values());
}

double sim(const SaliencyMap& prediction, const SaliencyMap& ground_truth) {
  require_same_shape(prediction, ground_truth, "sim");
  const auto p = sum_normalized(prediction.values(), "sim");
  const auto g = sum_normalized(ground_truth.values(), "sim");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::min(p[i], g[i]);
  return std::clamp(s, 0.0, 1.0);
}

double kld(const SaliencyMap& prediction, const SaliencyMap& ground_truth) {
  require_same_shape(prediction, ground_truth, "kld");
  const auto p = sum_normalized(prediction.values(), "kld");
  const auto g = sum_normalized(ground_truth.values(), "kld");
  const double z = 1.0 + kKldEpsilon * static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i] > 0.0) d += g[i] * std::log(g[i] * z / (p[i] + kKldEpsilon));
  }
  // Gibbs' inequality makes this >= 0; rounding can leave a few ulps below.
  return std::max(d, 0.0);
}

double nss(const SaliencyMap& prediction, const FixationSet& fixations) {
  for (const auto& p : fixations.points) {
    if (p.x < 0 || p.y < 0 || p.x >= prediction.width() || p.y >= prediction.height()) {
      throw InvalidArgument(fmt::format("nss: fixation ({}, {}) out of bounds", p.x, p.y));
    }
  }
  if (fixations.points.empty()) throw InvalidArgument("nss: empty fixation set");
  const Moments m = moments(prediction.values());
  if (m.std == 0.0) throw UndefinedMetric("nss: constant map");
  double s = 0.0;
  for (const auto& p : fixations.points) s += (prediction.at(p.x, p.y) - m.mean) / m.std;
  return s / static_cast<double>(fixations.points.size());
}

double auc_judd(const SaliencyMap& prediction, const FixationSet& fixations) {
  const auto fix = unique_fixations(prediction, fixations, "auc_judd");
  const std::size_t n_pixels = prediction.size();
  if (fix.size() >= n_pixels) throw UndefinedMetric("auc_judd: fixations cover every pixel, no negatives");

  std::vector<std::uint8_t> is_fix(n_pixels, 0);
  std::vector<double> pos;
  pos.reserve(fix.size());
  for (const auto& p : fix) {
    is_fix[static_cast<std::size_t>(p.y) * prediction.width() + p.x] = 1;
    pos.push_back(prediction.at(p.x, p.y));
  }
  std::vector<double> neg;
  neg.reserve(n_pixels - fix.size());
  const auto values = prediction.values();
  for (std::size_t i = 0; i < n_pixels; ++i) {
    if (!is_fix[i]) neg.push_back(values[i]);
  }
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());

  const double n_pos = static_cast<double>(pos.size());
  const double n_neg = static_cast<double>(neg.size());
  double area = 0.0;
  double prev_tp = 0.0;
  double prev_fp = 0.0;
  std::size_t ip = 0;
  std::size_t in = 0;
  while (ip < pos.size()) {
    const double threshold = pos[ip];
    while (ip < pos.size() && pos[ip] >= threshold) ++ip;
    while (in < neg.size() && neg[in] >= threshold) ++in;
    const double tp = static_cast<double>(ip) / n_pos;
    const double fp = static_cast<double>(in) / n_neg;
    area += (fp - prev_fp) * (tp + prev_tp) / 2.0;
    prev_tp = tp;
    prev_fp = fp;
  }
  area += (1.0 - prev_fp) * (1.0 + prev_tp) / 2.0;
  return area;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double plcc(const ScoreSeries& series) {
  require_series(series, "plcc");
  if (is_constant(series.ground_truth)) throw UndefinedMetric("plcc: constant ground truth");
  if (is_constant(series.predictions)) throw UndefinedMetric("plcc: constant predictions");
  return pearson(series.predictions, series.ground_truth);
}

double srcc(const ScoreSeries& series) {
  require_series(series, "srcc");
  if (is_constant(series.ground_truth)) throw UndefinedMetric("srcc: constant ground truth");
  if (is_constant(series.predictions)) throw UndefinedMetric("srcc: constant predictions");
  const auto rp = average_ranks(series.predictions);
  const auto rg = average_ranks(series.ground_truth);
  return pearson(rp, rg);
}

double krcc(const ScoreSeries& series) {
  require_series(series, "krcc");
  if (is_constant(series.ground_truth)) throw UndefinedMetric("krcc: constant ground truth");
  if (is_constant(series.predictions)) throw UndefinedMetric("krcc: constant predictions");
  const std::size_t n = series.predictions.size();

  // Knight's algorithm: sort by (x, y), count ties, then count discordant pairs as
  // inversions of y in that order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& x = series.predictions;
  const auto& y = series.ground_truth;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }

  const std::int64_t x_ties = tied_pairs(n, [&](std::size_t i) { return xs[i] == xs[i - 1]; });
  const std::int64_t joint_ties =
      tied_pairs(n, [&](std::size_t i) { return xs[i] == xs[i - 1] && ys[i] == ys[i - 1]; });
  std::vector<double> scratch(n);
  const std::int64_t discordant = count_inversions(ys, scratch, 0, n);
  const std::int64_t y_ties = tied_pairs(n, [&](std::size_t i) { return ys[i] == ys[i - 1]; });

  const auto total = static_cast<std::int64_t>(n * (n - 1) / 2);
  const double numerator = static_cast<double>(total - x_ties - y_ties + joint_ties - 2 * discordant);
  const double denom = std::sqrt(static_cast<double>(total - x_ties)) * std::sqrt(static_cast<double>(total - y_ties));
  return std::clamp(numerator / denom, -1.0, 1.0);
}

}  // namespace refiner::metrics
