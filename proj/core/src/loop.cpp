#include "refiner/loop.hpp"

#include <atomic>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "refiner/errors.hpp"
#include "refiner/objectives.hpp"

namespace refiner {

using namespace backends;

void validate(const LoopConfig& cfg) {
  if (cfg.max_turns < 1) throw InvalidArgument("max_turns must be >= 1");
  if (!(cfg.improvement_epsilon >= 0.0)) throw InvalidArgument("improvement_epsilon must be >= 0");
  validate(cfg.perception_post);
}

SessionInput session_input_from(const ManifestImage& image) {
  return {image.edited.id, image.source.value_or(image.edited), image.edited, image.instruction};
}

std::vector<FlawDiagnosis> TurnRecord::diagnoses() const {
  std::vector<FlawDiagnosis> out;
  for (const auto& k : kinds) {
    if (!k.reasoning) continue;
    out.insert(out.end(), k.reasoning->diagnoses.begin(), k.reasoning->diagnoses.end());
  }
  return out;
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::no_improvement:
      return "no_improvement";
    case StopReason::max_turns:
      return "max_turns";
    case StopReason::no_flaws:
      return "no_flaws";
    case StopReason::error:
      return "error";
  }
  return "error";
}

StopReason parse_stop_reason(std::string_view text) {
  for (auto r : {StopReason::no_improvement, StopReason::max_turns, StopReason::no_flaws, StopReason::error}) {
    if (to_string(r) == text) return r;
  }
  throw ParseError(fmt::format("unknown stop reason '{}'", text));
}

const ImageRef& SessionResult::image_at(int turn) const {
  if (turn == 0) return input.edited;
  return history.at(static_cast<std::size_t>(turn - 1)).output;
}

const DimensionScores& SessionResult::scores_at(int turn) const {
  if (turn == 0) {
    if (!baseline_scores) throw InvalidArgument("session has no baseline evaluation");
    return *baseline_scores;
  }
  return history.at(static_cast<std::size_t>(turn - 1)).scores;
}

int SessionResult::final_turn() const { return config.keep_best ? best_turn : turns(); }

namespace {

void analyze(TurnRecord& rec, const SessionInput& input, const ImageRef& current, const BackendSet& be,
             const LoopConfig& cfg) {

  auto perception = call_backend(*be.perception, PerceptionRequest{input.source, current, input.instruction});
  rec.artifact_map = std::move(perception.artifact_map);
  rec.failure_map = std::move(perception.failure_map);

  for (RegionKind kind : kRegionKinds) {
    auto& k = rec.kinds[static_cast<std::size_t>(kind)];
    k.kind = kind;
    k.mask = threshold_map(kind == RegionKind::artifact ? rec.artifact_map : rec.failure_map, cfg.perception_post);
    k.boxes = extract_boxes(k.mask, cfg.perception_post);
    if (k.boxes.empty()) continue;
    k.reasoning = call_backend(*be.reasoning,
                               ReasoningRequest{input.source, current, input.instruction, kind, k.boxes});
  }
  const std::array<BinaryMask, 2> masks = {rec.kinds[0].mask, rec.kinds[1].mask};
  rec.joint_mask = union_masks(masks);
}

}  // namespace

SessionResult run_session(const SessionInput& input, const BackendSet& be, const LoopConfig& cfg) {
  validate(cfg);
  if (!be.complete()) throw InvalidArgument("backend set is incomplete");

  SessionResult result;
  result.input = input;
  result.config = cfg;

  std::optional<TurnRecord> pending;
  try {
    const auto baseline = call_backend(*be.evaluation, EvaluationRequest{input.source, input.edited, input.instruction});
    result.baseline_scores = baseline.scores;
    result.baseline_overall = objectives::overall_score(baseline.scores);
    result.best_overall = result.baseline_overall;
    spdlog::info("[{}] baseline overall {:.4f}", input.image_id, result.baseline_overall);

    ImageRef current = input.edited;
    for (int turn = 1;; ++turn) {
      pending.emplace();
      TurnRecord& rec = *pending;
      rec.turn = turn;
      analyze(rec, input, current, be, cfg);
      if (rec.joint_mask.none()) {
        spdlog::info("[{}] turn {}: no flaw regions, stopping", input.image_id, turn);
        result.stop_reason = StopReason::no_flaws;
        break;
      }

      const auto diagnoses = rec.diagnoses();
      rec.re_edit_instruction =
          build_re_edit_instruction(diagnoses, current.width, current.height, cfg.re_edit_template);
      auto action = call_backend(
          *be.action, ActionRequest{input.source, current, rec.re_edit_instruction, rec.joint_mask});
      rec.output = std::move(action.re_edited);

      const auto eval = call_backend(*be.evaluation, EvaluationRequest{input.source, rec.output, input.instruction});
      rec.scores = eval.scores;
      rec.overall = objectives::overall_score(eval.scores);
      rec.improved = rec.overall > result.best_overall + cfg.improvement_epsilon;
      spdlog::info("[{}] turn {}: overall {:.4f} ({})", input.image_id, turn, rec.overall,
                   rec.improved ? "improved" : "no improvement");

      current = rec.output;
      const bool improved = rec.improved;
      result.history.push_back(std::move(rec));
      pending.reset();
      if (improved) {
        result.best_turn = turn;
        result.best_overall = result.history.back().overall;
      } else {
        result.stop_reason = StopReason::no_improvement;
        break;
      }
      if (turn >= cfg.max_turns) {
        result.stop_reason = StopReason::max_turns;
        break;
      }
    }
  } catch (const std::exception& e) {
    spdlog::error("[{}] session aborted: {}", input.image_id, e.what());
    result.stop_reason = StopReason::error;
    result.error = e.what();
  }
  result.incomplete_turn = std::move(pending);
  return result;
}

namespace {

std::string csv_quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

BatchSummary summarize(std::span<const SessionResult> sessions) {
  BatchSummary s;
  s.sessions = static_cast<int>(sessions.size());
  int ok = 0;
  double turns = 0.0;
  DimensionScores delta{0.0, 0.0, 0.0};
  double delta_overall = 0.0;
  for (const auto& r : sessions) {
    if (!r.ok()) {
      ++s.failures;
      continue;
    }
    ++ok;
    turns += r.turns();
    const auto& fin = r.scores_at(r.final_turn());
    const auto& base = *r.baseline_scores;
    delta.perceptual_quality += fin.perceptual_quality - base.perceptual_quality;
    delta.instruction_following += fin.instruction_following - base.instruction_following;
    delta.visual_consistency += fin.visual_consistency - base.visual_consistency;
    delta_overall += objectives::overall_score(fin) - r.baseline_overall;
  }
  if (ok > 0) {
    s.mean_turns = turns / ok;
    s.mean_delta = {delta.perceptual_quality / ok, delta.instruction_following / ok, delta.visual_consistency / ok};
    s.mean_delta_overall = delta_overall / ok;
  }
  return s;
}

BatchResult run_batch(std::span<const SessionInput> inputs, const BackendFactory& factory, const LoopConfig& cfg,
                      int parallelism) {
  validate(cfg);
  if (parallelism < 1) throw InvalidArgument("parallelism must be >= 1");

  BatchResult out;
  out.sessions.resize(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        out.sessions[i] = run_session(inputs[i], factory(inputs[i]), cfg);
      } catch (const std::exception& e) {
        SessionResult failed;
        failed.input = inputs[i];
        failed.config = cfg;
        failed.error = e.what();
        out.sessions[i] = std::move(failed);
      }
    }
  };

  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), inputs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  out.summary = summarize(out.sessions);
  return out;
}

std::string sessions_csv(std::span<const SessionResult> sessions) {
  std::string out =
      "image_id,status,turns,stop_reason,best_turn,final_turn,final_image_id,baseline_overall,final_overall,"
      "delta_perceptual_quality,delta_instruction_following,delta_visual_consistency,delta_overall,error\n";
  for (const auto& r : sessions) {
    if (!r.ok() && !r.baseline_scores) {
      out += fmt::format("{},failed,{},{},,,,,,,,,,{}\n", r.input.image_id, r.turns(), to_string(r.stop_reason),
                         csv_quote(*r.error));
      continue;
    }
    const auto& fin = r.scores_at(r.final_turn());
    const auto& base = *r.baseline_scores;
    out += fmt::format("{},{},{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n",
                       r.input.image_id, r.ok() ? "ok" : "failed", r.turns(), to_string(r.stop_reason), r.best_turn,
                       r.final_turn(), r.final_image().id, r.baseline_overall, objectives::overall_score(fin),
                       fin.perceptual_quality - base.perceptual_quality,
                       fin.instruction_following - base.instruction_following,
                       fin.visual_consistency - base.visual_consistency,
                       objectives::overall_score(fin) - r.baseline_overall, csv_quote(r.error.value_or("")));
  }
  return out;
}

std::string summary_csv(const BatchSummary& s) {
  return fmt::format(
      "metric,value\nsessions,{}\nfailures,{}\nmean_turns,{:.17g}\nmean_delta_perceptual_quality,{:.17g}\n"
      "mean_delta_instruction_following,{:.17g}\nmean_delta_visual_consistency,{:.17g}\nmean_delta_overall,{:.17g}\n",
      s.sessions, s.failures, s.mean_turns, s.mean_delta.perceptual_quality, s.mean_delta.instruction_following,
      s.mean_delta.visual_consistency, s.mean_delta_overall);
}

}  // namespace refiner
