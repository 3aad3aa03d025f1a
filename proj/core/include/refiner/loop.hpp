#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "refiner/backends/backend.hpp"
#include "refiner/backends/instruction.hpp"
#include "refiner/gt_builder.hpp"
#include "refiner/perception_post.hpp"
#include "refiner/types.hpp"

namespace refiner {

struct LoopConfig {
  int max_turns = 4;
  /// A turn counts as an improvement only if its overall score exceeds the best so far by more than this.
  double improvement_epsilon = 0.0;
  PerceptionPostConfig perception_post;
  /// Return the best-scoring image rather than the last one.
  bool keep_best = true;
  backends::ReEditTemplate re_edit_template;
};

/// Throws InvalidArgument on max_turns < 1, a negative epsilon, or a bad perception config.
void validate(const LoopConfig& cfg);

/// What one session starts from: the source I_0, the instruction T and the edit to refine.
struct SessionInput {
  std::string image_id;
  ImageRef source;
  ImageRef edited;
  std::string instruction;
};

/// Uses the manifest's source image when present, otherwise the edit serves as its own source.
SessionInput session_input_from(const ManifestImage& image);

/// Post-processing and reasoning for one region kind within a turn.
struct KindAnalysis {
  RegionKind kind = RegionKind::artifact;
  BinaryMask mask;
  std::vector<BoundingBox> boxes;
  /// Absent when there were no boxes to reason about.
  std::optional<backends::ReasoningResponse> reasoning;
};

struct TurnRecord {
  int turn = 0;
  SaliencyMap artifact_map;
  SaliencyMap failure_map;
  std::array<KindAnalysis, 2> kinds;
  BinaryMask joint_mask;
  std::string re_edit_instruction;
  ImageRef output;
  DimensionScores scores;
  double overall = 0.0;
  bool improved = false;

  const KindAnalysis& analysis(RegionKind kind) const { return kinds[static_cast<std::size_t>(kind)]; }
  std::vector<FlawDiagnosis> diagnoses() const;
};

enum class StopReason {
  no_improvement,
  max_turns,
  no_flaws,  // perception found no region that survives post-processing
  error,
};

std::string_view to_string(StopReason reason);
StopReason parse_stop_reason(std::string_view text);

struct SessionResult {
  SessionInput input;
  LoopConfig config;
  std::optional<DimensionScores> baseline_scores;
  double baseline_overall = 0.0;
  std::vector<TurnRecord> history;
  /// A turn that ended before evaluation, because perception found nothing to fix or a backend
  /// failed part-way. Only the stages that ran are populated.
  std::optional<TurnRecord> incomplete_turn;
  /// Turn index of the best evaluated image; 0 is the incoming edit.
  int best_turn = 0;
  double best_overall = 0.0;
  StopReason stop_reason = StopReason::error;
  /// Set when a backend failure aborted the session; history holds the completed turns.
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
  int turns() const { return static_cast<int>(history.size()); }
  const ImageRef& image_at(int turn) const;
  const DimensionScores& scores_at(int turn) const;
  /// The returned image: best-scoring if keep_best, else the last one.
  int final_turn() const;
  const ImageRef& final_image() const { return image_at(final_turn()); }
};

/// Runs baseline evaluation, then perceive, post-process, reason per kind, build the re-edit
/// instruction, act and evaluate, turn after turn. Stops as soon as a turn's overall score is
/// not above the best so far plus epsilon, or after max_turns.
///
/// Backend failures do not escape: they end the session with `error` set and the partial
/// history preserved. Invalid config throws InvalidArgument.
SessionResult run_session(const SessionInput& input, const backends::BackendSet& backends, const LoopConfig& cfg);

/// Builds the backends for one session. Called once per session, possibly from several threads.
using BackendFactory = std::function<backends::BackendSet(const SessionInput&)>;

struct BatchSummary {
  int sessions = 0;
  int failures = 0;
  double mean_turns = 0.0;
  /// Mean of (returned-image score - baseline score) over successful sessions.
  DimensionScores mean_delta;
  double mean_delta_overall = 0.0;
};

struct BatchResult {
  std::vector<SessionResult> sessions;  // manifest order
  BatchSummary summary;
};

BatchSummary summarize(std::span<const SessionResult> sessions);

/// Runs every input as an independent session on up to `parallelism` threads. Results are in
/// input order and do not depend on the thread count.
BatchResult run_batch(std::span<const SessionInput> inputs, const BackendFactory& factory, const LoopConfig& cfg,
                      int parallelism = 1);

/// Per-session table: one row per session.
std::string sessions_csv(std::span<const SessionResult> sessions);
/// Aggregate table with columns metric,value.
std::string summary_csv(const BatchSummary& summary);

}  // namespace refiner
