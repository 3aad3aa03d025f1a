#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "refiner/errors.hpp"

namespace refiner::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

void install_logger(const std::string& level) {
  auto logger = std::make_shared<spdlog::logger>("refiner", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(std::move(logger));
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Flaw-aware refinement harness for text-guided image edits."};
  app.name("refiner");
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML or INI file with option defaults; explicit flags win");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Seed for mock backends")->capture_default_str();
  app.add_option("--parallelism", global.parallelism, "Concurrent refinement sessions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--log-level", global.log_level, "trace|debug|info|warn|error|critical|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
      ->capture_default_str();

  BuildGtOptions gt;
  auto* cmd_gt = app.add_subcommand("build-gt", "Ground-truth saliency maps and fixations from a manifest");
  cmd_gt->add_option("--manifest", gt.manifest, "Annotation manifest (JSON)")->required();
  cmd_gt->add_option("--out-dir", gt.out_dir, "Output directory")->required();
  cmd_gt->add_option("--sigma-factor", gt.sigma_factor, "Kernel sigma as a multiple of disk radius")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_gt->add_option("--normalization", gt.normalization, "peak|none")
      ->check(CLI::IsMember({"peak", "none"}))
      ->capture_default_str();

  EvalSaliencyOptions es;
  auto* cmd_es = app.add_subcommand("eval-saliency", "Saliency metrics of predicted maps against ground truth");
  cmd_es->add_option("--pred-dir", es.pred_dir, "Predicted maps (<stem>.png or <stem>.json)")->required();
  cmd_es->add_option("--gt-dir", es.gt_dir, "build-gt output directory")->required();
  cmd_es->add_option("--fixations", es.fixations_dir, "Directory of <stem>_fixations.json (default: --gt-dir)");
  cmd_es->add_option("--out", es.out, "Output CSV")->required();

  ComputeMosOptions cm;
  auto* cmd_mos = app.add_subcommand("compute-mos", "Mean opinion scores from raw ratings");
  cmd_mos->add_option("--ratings", cm.ratings, "Ratings (.json or .csv)")->required();
  cmd_mos->add_option("--out", cm.out, "Output CSV")->required();
  cmd_mos->add_option("--outlier-scope", cm.outlier_scope, "per-image|per-annotator")
      ->check(CLI::IsMember({"per-image", "per-annotator"}))
      ->capture_default_str();
  cmd_mos->add_option("--report", cm.report, "Optional JSON report of outliers and exclusions");

  RefineOptions rf;
  std::string endpoints;
  auto* cmd_rf = app.add_subcommand("refine", "Run the refinement loop over a manifest");
  cmd_rf->add_option("--manifest", rf.manifest, "Manifest listing edited images")->required();
  auto* opt_endpoints = cmd_rf->add_option("--endpoints", endpoints, "Base URL or JSON file of per-agent URLs");
  auto* opt_mock = cmd_rf->add_flag("--mock", rf.mock, "Use deterministic mock backends");
  opt_endpoints->excludes(opt_mock);
  cmd_rf->add_option("--mock-schedule", rf.mock_schedule, "Scripted evaluator scores per image id (JSON)")
      ->needs(opt_mock);
  cmd_rf->add_option("--max-turns", rf.max_turns, "Turn budget")->check(CLI::PositiveNumber)->capture_default_str();
  cmd_rf->add_option("--epsilon", rf.improvement_epsilon, "Minimum overall-score gain that counts as improvement")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd_rf->add_flag("--keep-last", rf.keep_last, "Return the last image instead of the best-scoring one");
  cmd_rf->add_option("--tau", rf.tau, "Saliency threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd_rf->add_option("--min-area", rf.min_area, "Minimum component area in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_rf->add_option("--connectivity", rf.connectivity, "four|eight")
      ->check(CLI::IsMember({"four", "eight"}))
      ->capture_default_str();
  cmd_rf->add_option("--out-dir", rf.out_dir, "Output directory for traces and tables")->required();

  EvalObjectivesOptions eo;
  auto* cmd_eo = app.add_subcommand("eval-objectives", "Evaluate training objectives on fixture inputs");
  cmd_eo->add_option("--fixtures", eo.fixtures, "Objective fixtures (JSON)")->required();
  cmd_eo->add_option("--out", eo.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (!endpoints.empty()) rf.endpoints = endpoints;

  install_logger(global.log_level);
  try {
    if (cmd_gt->parsed()) return build_gt(gt, global);
    if (cmd_es->parsed()) return eval_saliency(es, global);
    if (cmd_mos->parsed()) return compute_mos(cm, global);
    if (cmd_rf->parsed()) return refine(rf, global);
    if (cmd_eo->parsed()) return eval_objectives(eo, global);
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    for (const auto& v : e.violations()) spdlog::error("  {}", v);
    return kExitInput;
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace refiner::cli
