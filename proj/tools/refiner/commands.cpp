#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "refiner/backends/http_client.hpp"
#include "refiner/errors.hpp"
#include "refiner/gt_builder.hpp"
#include "refiner/loop.hpp"
#include "refiner/objectives.hpp"
#include "refiner/raster_io.hpp"
#include "refiner/trace.hpp"

namespace refiner::cli {

using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json read_json(const fs::path& path) {
  const Bytes raw = read_file(path);
  auto j = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (j.is_discarded()) throw ParseError(fmt::format("'{}' is not valid JSON", path.string()));
  return j;
}

std::string cell(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : std::string(); }

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

// ---------------------------------------------------------------- build-gt

int build_gt(const BuildGtOptions& opts, const GlobalOptions&) {
  GtBuildConfig cfg;
  cfg.kernel_sigma_factor = opts.sigma_factor;
  if (opts.normalization == "peak") {
    cfg.normalization = GtBuildConfig::Normalization::peak;
  } else if (opts.normalization == "none") {
    cfg.normalization = GtBuildConfig::Normalization::none;
  } else {
    throw InvalidArgument(fmt::format("unknown normalization '{}'", opts.normalization));
  }

  const auto manifest = load_annotation_manifest(opts.manifest);
  const auto maps = build_gt_maps(manifest, cfg);

  std::string index = "image_id,region_kind,map,sidecar,fixations,n_fixations,peak\n";
  for (const auto& gt : maps) {
    const std::string stem = gt.stem();
    write_file(opts.out_dir / (stem + ".png"), encode_saliency_png8(gt.map));
    write_saliency_sidecar(opts.out_dir / (stem + ".json"), gt.map);
    write_fixations(opts.out_dir / (stem + "_fixations.json"), gt.fixations);
    index += fmt::format("{},{},{}.png,{}.json,{}_fixations.json,{},{:.17g}\n", gt.image_id,
                         to_string(gt.region_kind), stem, stem, stem, gt.fixations.points.size(), gt.map.max_value());
  }
  write_text(opts.out_dir / "index.csv", index);
  spdlog::info("build-gt: wrote {} maps for {} images to {}", maps.size(), manifest.images.size(),
               opts.out_dir.string());
  return 0;
}

// ---------------------------------------------------------------- eval-saliency

SaliencyRow evaluate_saliency_pair(const std::string& stem, const SaliencyMap& prediction,
                                   const SaliencyMap& ground_truth, const FixationSet& fixations) {
  SaliencyRow row;
  row.stem = stem;
  if (prediction.width() != ground_truth.width() || prediction.height() != ground_truth.height()) {
    row.error = fmt::format("dimension mismatch: prediction {}x{}, ground truth {}x{}", prediction.width(),
                            prediction.height(), ground_truth.width(), ground_truth.height());
    return row;
  }
  std::vector<std::string> notes;
  auto attempt = [&](const char* name, std::optional<double>& slot, auto&& fn) {
    try {
      slot = fn();
    } catch (const UndefinedMetric& e) {
      notes.push_back(fmt::format("{}: {}", name, e.what()));
    } catch (const InvalidArgument& e) {
      notes.push_back(fmt::format("{}: {}", name, e.what()));
    }
  };
  attempt("auc_judd", row.auc_judd, [&] { return metrics::auc_judd(prediction, fixations); });
  attempt("nss", row.nss, [&] { return metrics::nss(prediction, fixations); });
  attempt("cc", row.cc, [&] { return metrics::cc(prediction, ground_truth); });
  attempt("sim", row.sim, [&] { return metrics::sim(prediction, ground_truth); });
  attempt("kld", row.kld, [&] { return metrics::kld(prediction, ground_truth); });
  row.error = fmt::format("{}", fmt::join(notes, "; "));
  return row;
}

namespace {

/// Ground-truth stems in a build-gt output directory; full-precision sidecars win over PNGs.
std::vector<std::string> gt_stems(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument(fmt::format("'{}' is not a directory", dir.string()));
  std::set<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    const auto stem = entry.path().stem().string();
    if (ext != ".json" && ext != ".png") continue;
    if (stem.ends_with("_fixations")) continue;
    stems.insert(stem);
  }
  return {stems.begin(), stems.end()};
}

std::optional<fs::path> map_file(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".json", ".png"}) {
    auto p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

int eval_saliency(const EvalSaliencyOptions& opts, const GlobalOptions&) {
  if (!fs::is_directory(opts.pred_dir)) {
    throw InvalidArgument(fmt::format("'{}' is not a directory", opts.pred_dir.string()));
  }
  const fs::path fix_dir = opts.fixations_dir.empty() ? opts.gt_dir : opts.fixations_dir;

  std::vector<SaliencyRow> rows;
  for (const auto& stem : gt_stems(opts.gt_dir)) {
    SaliencyRow row;
    row.stem = stem;
    try {
      const auto pred_path = map_file(opts.pred_dir, stem);
      if (!pred_path) {
        row.error = "no prediction";
        rows.push_back(std::move(row));
        continue;
      }
      const auto gt = read_saliency_file(*map_file(opts.gt_dir, stem));
      const auto pred = read_saliency_file(*pred_path);
      const auto fixations = read_fixations(fix_dir / (stem + "_fixations.json"));
      row = evaluate_saliency_pair(stem, pred, gt, fixations);
    } catch (const ParseError& e) {
      row.error = e.what();
    } catch (const InvalidArgument& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::string out = "image_id,auc_judd,nss,cc,sim,kld,error\n";
  std::array<double, 5> sums{};
  std::array<int, 5> counts{};
  for (const auto& r : rows) {
    const std::array<std::optional<double>, 5> vals = {r.auc_judd, r.nss, r.cc, r.sim, r.kld};
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!vals[i]) continue;
      sums[i] += *vals[i];
      ++counts[i];
    }
    out += fmt::format("{},{},{},{},{},{},{}\n", r.stem, cell(r.auc_judd), cell(r.nss), cell(r.cc), cell(r.sim),
                       cell(r.kld), quote(r.error));
  }
  std::array<std::optional<double>, 5> means;
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (counts[i] > 0) means[i] = sums[i] / counts[i];
  }
  out += fmt::format("mean,{},{},{},{},{},\"\"\n", cell(means[0]), cell(means[1]), cell(means[2]), cell(means[3]),
                     cell(means[4]));
  write_text(opts.out, out);

  const auto errors = std::count_if(rows.begin(), rows.end(), [](const SaliencyRow& r) { return !r.error.empty(); });
  spdlog::info("eval-saliency: {} maps, {} with errors, table at {}", rows.size(), errors, opts.out.string());
  return 0;
}

// ---------------------------------------------------------------- compute-mos

std::vector<mos::RatingRecord> load_ratings(const fs::path& path) {
  if (path.extension() == ".json") {
    try {
      return read_json(path).get<std::vector<mos::RatingRecord>>();
    } catch (const json::exception& e) {
      throw ParseError(fmt::format("ratings '{}': {}", path.string(), e.what()));
    }
  }
  const Bytes raw = read_file(path);
  std::istringstream in(std::string(raw.begin(), raw.end()));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(fmt::format("ratings '{}' is empty", path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "annotator_id,image_id,dimension,raw_score") {
    throw ParseError(fmt::format("ratings '{}': expected header annotator_id,image_id,dimension,raw_score",
                                 path.string()));
  }
  std::vector<mos::RatingRecord> out;
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
    if (fields.size() != 4) throw ParseError(fmt::format("ratings '{}' line {}: expected 4 fields", path.string(), line_no));
    mos::RatingRecord r;
    r.annotator_id = fields[0];
    r.image_id = fields[1];
    try {
      r.dimension = parse_dimension(fields[2]);
      std::size_t used = 0;
      r.raw_score = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception& e) {
      throw ParseError(fmt::format("ratings '{}' line {}: {}", path.string(), line_no, e.what()));
    }
    out.push_back(std::move(r));
  }
  return out;
}

int compute_mos(const ComputeMosOptions& opts, const GlobalOptions&) {
  mos::OutlierScope scope;
  if (opts.outlier_scope == "per-image") {
    scope = mos::OutlierScope::per_image;
  } else if (opts.outlier_scope == "per-annotator") {
    scope = mos::OutlierScope::per_annotator;
  } else {
    throw InvalidArgument(fmt::format("unknown outlier scope '{}'", opts.outlier_scope));
  }
  const auto ratings = load_ratings(opts.ratings);
  const auto result = mos::run_pipeline(ratings, scope);
  write_text(opts.out, mos::to_csv(result.mos.results));

  for (const auto& w : result.mos.warnings) spdlog::warn("compute-mos: {}: {}", w.annotator_id, w.message);
  spdlog::info("compute-mos: {} ratings, {} outliers removed, {} annotators excluded, {} MOS rows", ratings.size(),
               result.outliers.removed.size(), result.excluded_annotators.size(), result.mos.results.size());

  if (opts.report) {
    json stats = json::array();
    for (const auto& s : result.outliers.stats) {
      stats.push_back({{"annotator_id", s.annotator_id},
                       {"n_ratings", s.n_ratings},
                       {"n_outliers", s.n_outliers},
                       {"mean", s.mean},
                       {"std", s.std}});
    }
    json warnings = json::array();
    for (const auto& w : result.mos.warnings) {
      warnings.push_back({{"annotator_id", w.annotator_id}, {"dimension", to_string(w.dimension)}, {"message", w.message}});
    }
    const json report = {{"annotators", stats},
                         {"excluded_annotators", result.excluded_annotators},
                         {"removed_ratings", result.outliers.removed},
                         {"warnings", warnings}};
    write_text(*opts.report, report.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------- refine

std::vector<std::pair<std::string, std::vector<DimensionScores>>> load_mock_schedule(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw ParseError(fmt::format("schedule '{}' must be an object keyed by image id", path.string()));
  std::vector<std::pair<std::string, std::vector<DimensionScores>>> out;
  for (const auto& [id, entries] : j.items()) {
    if (!entries.is_array()) throw ParseError(fmt::format("schedule '{}': entry '{}' is not a list", path.string(), id));
    std::vector<DimensionScores> scores;
    for (const auto& e : entries) {
      if (e.is_number()) {
        scores.push_back(backends::uniform_scores(e.get<double>()));
      } else if (e.is_array() && e.size() == 3 && e[0].is_number() && e[1].is_number() && e[2].is_number()) {
        scores.push_back({e[0].get<double>(), e[1].get<double>(), e[2].get<double>()});
      } else {
        throw ParseError(fmt::format("schedule '{}': entry '{}' has a malformed score", path.string(), id));
      }
    }
    out.emplace_back(id, std::move(scores));
  }
  return out;
}

namespace {

backends::Endpoints parse_endpoints(const std::string& spec) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) return backends::Endpoints::single(spec);
  const json j = read_json(spec);
  try {
    return {j.at("perception").get<std::string>(), j.at("reasoning").get<std::string>(),
            j.at("action").get<std::string>(), j.at("evaluation").get<std::string>()};
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("endpoints '{}': {}", spec, e.what()));
  }
}

}  // namespace

int refine(const RefineOptions& opts, const GlobalOptions& global) {
  if (opts.mock == opts.endpoints.has_value()) throw InvalidArgument("exactly one of --mock and --endpoints is required");
  if (opts.mock_schedule && !opts.mock) throw InvalidArgument("--mock-schedule needs --mock");

  LoopConfig cfg;
  cfg.max_turns = opts.max_turns;
  cfg.improvement_epsilon = opts.improvement_epsilon;
  cfg.keep_best = !opts.keep_last;
  cfg.perception_post.tau = opts.tau;
  cfg.perception_post.min_component_area = opts.min_area;
  if (opts.connectivity == "four") {
    cfg.perception_post.connectivity = PerceptionPostConfig::Connectivity::four;
  } else if (opts.connectivity == "eight") {
    cfg.perception_post.connectivity = PerceptionPostConfig::Connectivity::eight;
  } else {
    throw InvalidArgument(fmt::format("unknown connectivity '{}'", opts.connectivity));
  }
  validate(cfg);

  const auto manifest = load_annotation_manifest(opts.manifest);
  std::vector<SessionInput> inputs;
  for (const auto& img : manifest.images) inputs.push_back(session_input_from(img));

  BackendFactory factory;
  std::function<json(const SessionInput&)> describe;
  if (opts.mock) {
    std::map<std::string, std::vector<DimensionScores>, std::less<>> schedules;
    if (opts.mock_schedule) {
      for (auto& [id, s] : load_mock_schedule(*opts.mock_schedule)) schedules.emplace(id, std::move(s));
    }
    auto options_for = [schedules, seed = global.seed](const SessionInput& in) {
      backends::MockOptions o;
      o.seed = seed;
      auto it = schedules.find(in.image_id);
      if (it == schedules.end()) it = schedules.find("*");
      if (it != schedules.end()) o.evaluation_schedule = it->second;
      return o;
    };
    factory = [options_for](const SessionInput& in) { return backends::make_mock_suite(options_for(in)); };
    describe = [options_for](const SessionInput& in) { return describe_mock(options_for(in)); };
  } else {
    const auto endpoints = parse_endpoints(*opts.endpoints);
    const auto shared = backends::make_http_backends(endpoints);
    factory = [shared](const SessionInput&) { return shared; };
    const json desc = {{"kind", "http"},
                       {"endpoints",
                        {{"perception", endpoints.perception},
                         {"reasoning", endpoints.reasoning},
                         {"action", endpoints.action},
                         {"evaluation", endpoints.evaluation}}}};
    describe = [desc](const SessionInput&) { return desc; };
  }

  const auto batch = run_batch(inputs, factory, cfg, global.parallelism);

  for (const auto& s : batch.sessions) {
    const auto dir = opts.out_dir / s.input.image_id;
    write_trace(make_trace(s, describe(s.input)), dir);
    if (s.baseline_scores) write_file(dir / "final.png", encode_png_rgb(load_pixels(s.final_image())));
  }
  write_text(opts.out_dir / "sessions.csv", sessions_csv(batch.sessions));
  write_text(opts.out_dir / "summary.csv", summary_csv(batch.summary));

  spdlog::info("refine: {} sessions, {} failed, mean turns {:.3f}", batch.summary.sessions, batch.summary.failures,
               batch.summary.mean_turns);
  return batch.summary.failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------- eval-objectives

int eval_objectives(const EvalObjectivesOptions& opts, const GlobalOptions&) {
  const json j = read_json(opts.fixtures);
  if (!j.is_object()) throw ParseError("objective fixtures must be a JSON object");
  std::string out = "objective,case,term,value\n";
  auto row = [&](std::string_view objective, const std::string& name, std::string_view term, double v) {
    out += fmt::format("{},{},{},{:.17g}\n", objective, name, term, v);
  };

  try {
    for (const auto& c : j.value("grpo", json::array())) {
      objectives::GrpoBatch b;
      b.log_probs_policy = c.at("log_probs_policy").get<std::vector<double>>();
      b.log_probs_ref = c.at("log_probs_ref").get<std::vector<double>>();
      b.advantages = c.at("advantages").get<std::vector<double>>();
      b.clip_eps = c.value("clip_eps", 0.2);
      b.kl_coeff = c.value("kl_coeff", 0.0);
      row("grpo", c.at("name").get<std::string>(), "value", objectives::grpo_objective(b));
    }
    for (const auto& c : j.value("hybrid", json::array())) {
      const int w = c.at("width").get<int>();
      const int h = c.at("height").get<int>();
      const SaliencyMap pred(w, h, c.at("prediction").get<std::vector<double>>());
      const SaliencyMap gt(w, h, c.at("ground_truth").get<std::vector<double>>());
      const objectives::HybridLossWeights weights{c.value("alpha", 0.3), c.value("beta", 0.3)};
      const auto terms = objectives::hybrid_saliency_loss_terms(pred, gt, weights);
      const auto name = c.at("name").get<std::string>();
      row("hybrid", name, "l1", terms.l1);
      row("hybrid", name, "bce", terms.bce);
      row("hybrid", name, "kld", terms.kld);
      row("hybrid", name, "total", terms.total);
    }
    for (const auto& c : j.value("overall", json::array())) {
      row("overall", c.at("name").get<std::string>(), "value",
          objectives::overall_score(c.at("scores").get<DimensionScores>()));
    }
    for (const auto& c : j.value("score_loss", json::array())) {
      const auto pred = c.at("prediction").get<std::vector<DimensionScores>>();
      const auto gt = c.at("ground_truth").get<std::vector<DimensionScores>>();
      row("score_loss", c.at("name").get<std::string>(), "value", objectives::score_loss(pred, gt));
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("objective fixtures '{}': {}", opts.fixtures.string(), e.what()));
  }
  write_text(opts.out, out);
  spdlog::info("eval-objectives: wrote {}", opts.out.string());
  return 0;
}

}  // namespace refiner::cli
