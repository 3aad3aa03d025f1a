#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "fixtures.hpp"
#include "refiner/gt_builder.hpp"
#include "refiner/metrics.hpp"
#include "refiner/raster_io.hpp"
#include "temp_dir.hpp"

namespace refiner::cli {
namespace {

namespace fs = std::filesystem;
using testing::fixture_dir;
using testing::slurp;
using testing::TempDir;

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "refiner");
  args.insert(args.begin() + 1, {"--log-level", "warn"});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

using Table = std::vector<std::vector<std::string>>;

/// Splits a CSV without quoted commas; quoted cells lose their quotes.
Table read_csv(const fs::path& path) {
  Table out;
  std::istringstream in(slurp(path));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> row;
    std::istringstream cells(line);
    for (std::string c; std::getline(cells, c, ',');) {
      if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
      row.push_back(c);
    }
    if (!line.empty() && line.back() == ',') row.emplace_back();
    out.push_back(std::move(row));
  }
  return out;
}

/// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
  }
  return out;
}

const fs::path kManifest = fixture_dir() / "refine" / "manifest.json";
const fs::path kSchedule = fixture_dir() / "refine" / "schedule.json";

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run_cli({}), 2);
  EXPECT_EQ(run_cli({"no-such-command"}), 2);
  EXPECT_EQ(run_cli({"build-gt", "--manifest", kManifest.string()}), 2);
  EXPECT_EQ(run_cli({"--parallelism", "0", "eval-objectives", "--fixtures", "x", "--out", "y"}), 2);
  EXPECT_EQ(run_cli({"--help"}), 0);
}

TEST(Cli, NonPositiveSigmaFactorIsRejectedBeforeAnyIo) {
  TempDir tmp;
  const auto out = tmp / "gt";
  EXPECT_EQ(run_cli({"build-gt", "--manifest", kManifest.string(), "--out-dir", out.string(), "--sigma-factor", "0"}),
            2);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(run_cli({"build-gt", "--manifest", kManifest.string(), "--out-dir", out.string(), "--sigma-factor", "-1"}),
            2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, BadManifestsExitWithTwo) {
  TempDir tmp;
  testing::spit(tmp / "broken.json", "{\"images\": [");
  EXPECT_EQ(run_cli({"build-gt", "--manifest", (tmp / "broken.json").string(), "--out-dir", (tmp / "o").string()}), 2);
  EXPECT_EQ(run_cli({"build-gt", "--manifest", (tmp / "missing.json").string(), "--out-dir", (tmp / "o").string()}), 2);

  auto j = nlohmann::json::parse(slurp(kManifest));
  j["annotations"][0]["boxes"][0]["x_max"] = 500;
  for (auto& img : j["images"]) {
    img["path"] = (fixture_dir() / "refine" / img["path"].get<std::string>()).string();
    img["source"]["path"] = (fixture_dir() / "refine" / img["source"]["path"].get<std::string>()).string();
  }
  testing::spit(tmp / "outside.json", j.dump());
  EXPECT_EQ(run_cli({"build-gt", "--manifest", (tmp / "outside.json").string(), "--out-dir", (tmp / "o").string()}), 2);
  EXPECT_FALSE(fs::exists(tmp / "o"));
}

TEST(Cli, BuildGtWritesOneMapPerImagePerKind) {
  TempDir tmp;
  const auto out = tmp / "gt";
  ASSERT_EQ(run_cli({"build-gt", "--manifest", kManifest.string(), "--out-dir", out.string()}), 0);
  const auto manifest = load_annotation_manifest(kManifest);
  const auto maps = build_gt_maps(manifest);
  ASSERT_EQ(maps.size(), manifest.images.size() * 2);
  for (const auto& gt : maps) {
    const auto stem = gt.stem();
    ASSERT_TRUE(fs::exists(out / (stem + ".png"))) << stem;
    EXPECT_EQ(read_saliency_sidecar(out / (stem + ".json")), gt.map);
    EXPECT_EQ(read_fixations(out / (stem + "_fixations.json")).points, gt.fixations.points);
    const auto png = decode_saliency_png(read_file(out / (stem + ".png")));
    EXPECT_EQ(png.width(), gt.map.width());
    for (std::size_t i = 0; i < png.size(); ++i) EXPECT_NEAR(png.values()[i], gt.map.values()[i], 0.5 / 255 + 1e-12);
  }
  const auto index = read_csv(out / "index.csv");
  EXPECT_EQ(index.size(), maps.size() + 1);
}

TEST(Cli, EvalSaliencyOfGroundTruthAgainstItself) {
  TempDir tmp;
  const auto gt = tmp / "gt";
  ASSERT_EQ(run_cli({"build-gt", "--manifest", kManifest.string(), "--out-dir", gt.string()}), 0);
  ASSERT_EQ(run_cli({"eval-saliency", "--pred-dir", gt.string(), "--gt-dir", gt.string(), "--out",
                     (tmp / "m.csv").string()}),
            0);
  const auto table = read_csv(tmp / "m.csv");
  ASSERT_EQ(table[0], (std::vector<std::string>{"image_id", "auc_judd", "nss", "cc", "sim", "kld", "error"}));
  ASSERT_EQ(table.size(), 6u + 2u);
  for (std::size_t r = 1; r + 1 < table.size(); ++r) {
    const auto& row = table[r];
    EXPECT_EQ(row[6], "") << row[0];
    EXPECT_NEAR(std::stod(row[3]), 1.0, 1e-12);
    EXPECT_NEAR(std::stod(row[4]), 1.0, 1e-12);
    // The floored prediction moves at most N eps of mass, so KL(m || m) <= log(1 + N eps).
    const double n = static_cast<double>(read_saliency_sidecar(gt / (row[0] + ".json")).size());
    EXPECT_GE(std::stod(row[5]), 0.0);
    EXPECT_LE(std::stod(row[5]), std::log1p(n * metrics::kKldEpsilon));
    const auto map = read_saliency_sidecar(gt / (row[0] + ".json"));
    const auto fix = read_fixations(gt / (row[0] + "_fixations.json"));
    EXPECT_EQ(std::stod(row[1]), metrics::auc_judd(map, fix));
    EXPECT_EQ(std::stod(row[2]), metrics::nss(map, fix));
    EXPECT_EQ(std::stod(row[3]), metrics::cc(map, map));
  }
  EXPECT_EQ(table.back()[0], "mean");
}

TEST(Cli, EvalSaliencyReportsMismatchesPerRow) {
  TempDir tmp;
  const auto gt = tmp / "gt";
  const auto pred = tmp / "pred";
  ASSERT_EQ(run_cli({"build-gt", "--manifest", kManifest.string(), "--out-dir", gt.string()}), 0);
  fs::create_directories(pred);
  write_saliency_sidecar(pred / "img-a_artifact.json", SaliencyMap(10, 10, std::vector<double>(100, 0.5)));
  fs::copy_file(gt / "img-b_artifact.json", pred / "img-b_artifact.json");
  ASSERT_EQ(run_cli({"eval-saliency", "--pred-dir", pred.string(), "--gt-dir", gt.string(), "--out",
                     (tmp / "m.csv").string()}),
            0);
  std::map<std::string, std::vector<std::string>> rows;
  for (const auto& row : read_csv(tmp / "m.csv")) rows[row[0]] = row;
  EXPECT_NE(rows["img-a_artifact"][6].find("dimension mismatch"), std::string::npos);
  EXPECT_EQ(rows["img-a_artifact"][3], "");
  EXPECT_EQ(rows["img-b_artifact"][6], "");
  EXPECT_EQ(rows["img-c_artifact"][6], "no prediction");
  EXPECT_NEAR(std::stod(rows["mean"][3]), 1.0, 1e-12);
}

TEST(Cli, ComputeMosMatchesIndependentOracle) {
  TempDir tmp;
  const auto out = tmp / "mos.csv";
  ASSERT_EQ(run_cli({"compute-mos", "--ratings", (fixture_dir() / "mos" / "panel.csv").string(), "--out",
                     out.string(), "--report", (tmp / "report.json").string()}),
            0);
  const auto got = read_csv(out);
  const auto want = read_csv(fixture_dir() / "mos" / "expected_mos.csv");
  ASSERT_EQ(got.size(), want.size());
  EXPECT_EQ(got[0], want[0]);
  for (std::size_t r = 1; r < got.size(); ++r) {
    EXPECT_EQ(got[r][0], want[r][0]);
    EXPECT_EQ(got[r][1], want[r][1]);
    EXPECT_NEAR(std::stod(got[r][2]), std::stod(want[r][2]), 1e-10) << got[r][0];
    EXPECT_NEAR(std::stod(got[r][3]), std::stod(want[r][3]), 1e-10) << got[r][0];
    EXPECT_EQ(got[r][4], want[r][4]);
  }
  const auto report = nlohmann::json::parse(slurp(tmp / "report.json"));
  EXPECT_EQ(report.at("excluded_annotators"), nlohmann::json::array({"ann11"}));
}

TEST(Cli, ComputeMosRejectsBadRatings) {
  TempDir tmp;
  testing::spit(tmp / "r.csv", "annotator_id,image_id,dimension,raw_score\na,i,perceptual_quality,7\n");
  EXPECT_EQ(run_cli({"compute-mos", "--ratings", (tmp / "r.csv").string(), "--out", (tmp / "o.csv").string()}), 2);
  testing::spit(tmp / "h.csv", "who,what\n");
  EXPECT_EQ(run_cli({"compute-mos", "--ratings", (tmp / "h.csv").string(), "--out", (tmp / "o.csv").string()}), 2);
}

TEST(Cli, RefineWithOneTurnBudget) {
  TempDir tmp;
  const auto out = tmp / "run";
  ASSERT_EQ(run_cli({"refine", "--mock", "--manifest", kManifest.string(), "--max-turns", "1", "--out-dir",
                     out.string()}),
            0);
  const auto sessions = read_csv(out / "sessions.csv");
  ASSERT_EQ(sessions.size(), 4u);
  for (const std::string id : {"img-a", "img-b", "img-c"}) {
    const auto trace = nlohmann::json::parse(slurp(out / id / "trace.json"));
    EXPECT_LE(trace.at("turns").size(), 1u);
    EXPECT_TRUE(fs::exists(out / id / "final.png"));
  }
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
}

TEST(Cli, RefineFlagConflictsExitWithTwo) {
  TempDir tmp;
  EXPECT_EQ(run_cli({"refine", "--manifest", kManifest.string(), "--out-dir", tmp.path().string()}), 2);
  EXPECT_EQ(run_cli({"refine", "--mock", "--endpoints", "http://127.0.0.1:9", "--manifest", kManifest.string(),
                     "--out-dir", tmp.path().string()}),
            2);
  EXPECT_EQ(run_cli({"refine", "--mock", "--tau", "1.5", "--manifest", kManifest.string(), "--out-dir",
                     tmp.path().string()}),
            2);
}

TEST(Cli, RefineAgainstUnreachableServerFailsSessions) {
  TempDir tmp;
  const auto out = tmp / "run";
  EXPECT_EQ(run_cli({"refine", "--endpoints", "http://127.0.0.1:9", "--manifest", kManifest.string(), "--out-dir",
                     out.string()}),
            1);
  const auto summary = read_csv(out / "summary.csv");
  bool saw = false;
  for (const auto& row : summary) {
    if (row[0] == "failures") {
      EXPECT_EQ(row[1], "3");
      saw = true;
    }
  }
  EXPECT_TRUE(saw);
}

TEST(Cli, GoldenTraceIsReproducedByteForByte) {
  for (const char* parallelism : {"1", "3"}) {
    TempDir tmp;
    const auto out = tmp / "golden";
    const auto start = std::chrono::steady_clock::now();
    ASSERT_EQ(run_cli({"--seed", "0", "--parallelism", parallelism, "refine", "--mock", "--mock-schedule",
                       kSchedule.string(), "--manifest", kManifest.string(), "--out-dir", out.string()}),
              0);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
    const auto got = tree(out);
    const auto want = tree(fixture_dir() / "golden");
    ASSERT_EQ(got.size(), want.size());
    for (const auto& [path, bytes] : want) {
      const auto it = got.find(path);
      ASSERT_NE(it, got.end()) << path;
      EXPECT_TRUE(it->second == bytes) << path;
    }
  }
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  TempDir tmp;
  testing::spit(tmp / "cfg.toml", "seed = 0\n[refine]\nmax-turns = 1\n");
  const auto out = tmp / "run";
  ASSERT_EQ(run_cli({"--config", (tmp / "cfg.toml").string(), "refine", "--mock", "--mock-schedule",
                     kSchedule.string(), "--manifest", kManifest.string(), "--out-dir", out.string()}),
            0);
  const auto trace = nlohmann::json::parse(slurp(out / "img-b" / "trace.json"));
  EXPECT_EQ(trace.at("turns").size(), 1u);
  EXPECT_EQ(trace.at("stop_reason"), "max_turns");
}

TEST(Cli, EvalObjectivesMatchesHighPrecisionValues) {
  TempDir tmp;
  const auto fixtures = fixture_dir() / "objectives" / "cases.json";
  ASSERT_EQ(run_cli({"eval-objectives", "--fixtures", fixtures.string(), "--out", (tmp / "o.csv").string()}), 0);
  const auto cases = nlohmann::json::parse(slurp(fixtures));
  std::map<std::string, double> got;
  for (const auto& row : read_csv(tmp / "o.csv")) {
    if (row[0] != "objective") got[row[0] + "/" + row[1] + "/" + row[2]] = std::stod(row[3]);
  }
  for (const auto& c : cases.at("overall")) {
    const double expected = std::stod(c.at("expected").get<std::string>());
    EXPECT_NEAR(got.at("overall/" + c.at("name").get<std::string>() + "/value"), expected, 1e-12);
  }
  EXPECT_DOUBLE_EQ(got.at("grpo/clip_high/value"), 1.2);
  EXPECT_DOUBLE_EQ(got.at("grpo/clip_low/value"), -0.8);
  EXPECT_EQ(got.count("hybrid/random_4x3/total"), 1u);
  EXPECT_EQ(got.count("score_loss/three_images/value"), 1u);

  testing::spit(tmp / "bad.json", R"({"overall": [{"name": "x"}]})");
  EXPECT_EQ(run_cli({"eval-objectives", "--fixtures", (tmp / "bad.json").string(), "--out", (tmp / "p.csv").string()}),
            2);
}

}  // namespace
}  // namespace refiner::cli
