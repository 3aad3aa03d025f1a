#include <gtest/gtest.h>

#include <atomic>

#include "refiner/backends/mock.hpp"
#include "refiner/errors.hpp"
#include "refiner/loop.hpp"
#include "refiner/objectives.hpp"
#include "refiner/raster_io.hpp"
#include "rng.hpp"

namespace refiner {
namespace {

using backends::BackendSet;
using backends::MockOptions;
using backends::uniform_scores;

ImageRef random_image(const std::string& id, int w, int h, std::uint64_t seed) {
  testing::Rng rng(seed);
  RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.integer(0, 255));
  return ImageRef::from_raster(id, std::move(img));
}

SessionInput make_input(const std::string& id, std::uint64_t seed, int size = 64) {
  return {id, random_image(id + ":source", size, size, seed * 2 + 1), random_image(id, size, size, seed * 2 + 2),
          "brighten the sky"};
}

std::vector<DimensionScores> schedule(std::initializer_list<double> overall) {
  std::vector<DimensionScores> out;
  for (double s : overall) out.push_back(uniform_scores(s));
  return out;
}

BackendSet scripted(std::initializer_list<double> overall, std::uint64_t seed = 0) {
  MockOptions o;
  o.seed = seed;
  o.evaluation_schedule = schedule(overall);
  return backends::make_mock_suite(o);
}

/// Counts calls to an action backend.
class CountingAction final : public backends::ActionBackend {
 public:
  explicit CountingAction(std::shared_ptr<backends::ActionBackend> inner) : inner_(std::move(inner)) {}
  backends::ActionResponse act(const backends::ActionRequest& r) override {
    ++calls;
    return inner_->act(r);
  }
  std::atomic<int> calls{0};

 private:
  std::shared_ptr<backends::ActionBackend> inner_;
};

class FailingEvaluation final : public backends::EvaluationBackend {
 public:
  explicit FailingEvaluation(int fail_at) : fail_at_(fail_at) {}
  backends::EvaluationResponse evaluate(const backends::EvaluationRequest&) override {
    if (++calls_ == fail_at_) throw TransportError("evaluation server unreachable");
    return {uniform_scores(50.0 + calls_)};
  }

 private:
  int fail_at_;
  int calls_ = 0;
};

void check_session_invariants(const SessionResult& r) {
  ASSERT_TRUE(r.baseline_scores.has_value());
  EXPECT_LE(r.turns(), r.config.max_turns);
  EXPECT_DOUBLE_EQ(r.baseline_overall, objectives::overall_score(*r.baseline_scores));
  double best = r.baseline_overall;
  for (const auto& t : r.history) {
    EXPECT_DOUBLE_EQ(t.overall, objectives::overall_score(t.scores));
    EXPECT_EQ(t.improved, t.overall > best + r.config.improvement_epsilon);
    if (t.improved) best = t.overall;
  }
  EXPECT_EQ(r.best_overall, best);
  EXPECT_EQ(r.best_overall, objectives::overall_score(r.scores_at(r.best_turn)));
  // A turn may beat the best by less than epsilon without being accepted.
  for (int i = 0; i <= r.turns(); ++i) {
    EXPECT_GE(r.best_overall + r.config.improvement_epsilon, objectives::overall_score(r.scores_at(i)));
  }
  // Every turn but possibly the last improved, so accepted scores strictly increase.
  for (int i = 0; i + 1 < r.turns(); ++i) EXPECT_TRUE(r.history[static_cast<std::size_t>(i)].improved);
}

TEST(Loop, StopsAtFirstNonImprovingTurnAndKeepsBest) {
  const auto in = make_input("img-a", 1);
  const auto r = run_session(in, scripted({60, 70, 68}), LoopConfig{});
  ASSERT_TRUE(r.ok()) << *r.error;
  EXPECT_EQ(r.turns(), 2);
  EXPECT_EQ(r.stop_reason, StopReason::no_improvement);
  EXPECT_EQ(r.best_turn, 1);
  EXPECT_EQ(r.best_overall, 70.0);
  EXPECT_EQ(r.final_turn(), 1);
  EXPECT_EQ(r.final_image(), r.history[0].output);
  EXPECT_FALSE(r.incomplete_turn.has_value());
  check_session_invariants(r);
}

TEST(Loop, WorseFirstTurnReturnsTheIncomingEdit) {
  const auto in = make_input("img-c", 3);
  const auto r = run_session(in, scripted({70, 65}), LoopConfig{});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.turns(), 1);
  EXPECT_EQ(r.stop_reason, StopReason::no_improvement);
  EXPECT_EQ(r.best_turn, 0);
  EXPECT_EQ(r.final_image(), in.edited);
  check_session_invariants(r);
}

TEST(Loop, StrictlyIncreasingScoresRunToMaxTurns) {
  const auto in = make_input("img-b", 2);
  const auto r = run_session(in, scripted({50, 55, 60, 65, 70}), LoopConfig{});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.turns(), 4);
  EXPECT_EQ(r.stop_reason, StopReason::max_turns);
  EXPECT_EQ(r.best_turn, 4);
  EXPECT_EQ(r.best_overall, 70.0);
  check_session_invariants(r);
}

TEST(Loop, EpsilonRaisesTheBar) {
  LoopConfig cfg;
  cfg.improvement_epsilon = 0.5;
  const auto r = run_session(make_input("x", 4), scripted({60, 60.4, 70}), cfg);
  EXPECT_EQ(r.turns(), 1);
  EXPECT_EQ(r.best_turn, 0);
  check_session_invariants(r);
}

TEST(Loop, KeepLastReturnsTheLastImage) {
  LoopConfig cfg;
  cfg.keep_best = false;
  const auto r = run_session(make_input("img-a", 1), scripted({60, 70, 68}), cfg);
  EXPECT_EQ(r.best_turn, 1);
  EXPECT_EQ(r.final_turn(), 2);
  EXPECT_EQ(r.final_image(), r.history[1].output);
}

TEST(Loop, EachTurnFeedsThePreviousOutputForward) {
  const auto in = make_input("img-b", 2);
  const auto r = run_session(in, scripted({50, 55, 60, 65, 70}), LoopConfig{});
  ASSERT_EQ(r.turns(), 4);
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const auto& t = r.history[i];
    EXPECT_EQ(t.turn, static_cast<int>(i) + 1);
    EXPECT_FALSE(t.joint_mask.none());
    EXPECT_FALSE(t.re_edit_instruction.empty());
    const ImageRef& prev = i == 0 ? in.edited : r.history[i - 1].output;
    EXPECT_FALSE(t.output == prev);
    EXPECT_EQ(t.output.width, prev.width);
    for (const auto& k : t.kinds) EXPECT_EQ(k.reasoning.has_value(), !k.boxes.empty());
  }
}

TEST(Loop, MaxTurnsOneMeansAtMostOneAction) {
  LoopConfig cfg;
  cfg.max_turns = 1;
  auto be = scripted({10, 20, 30, 40});
  auto counting = std::make_shared<CountingAction>(be.action);
  be.action = counting;
  const auto r = run_session(make_input("m", 5), be, cfg);
  EXPECT_EQ(r.turns(), 1);
  EXPECT_EQ(r.stop_reason, StopReason::max_turns);
  EXPECT_EQ(counting->calls.load(), 1);
}

TEST(Loop, EmptyPerceptionStopsWithNoFlaws) {
  MockOptions o;
  o.evaluation_schedule = schedule({60, 70});
  o.fixed_perception = backends::PerceptionResponse{SaliencyMap(64, 64), SaliencyMap(64, 64)};
  auto be = backends::make_mock_suite(o);
  auto counting = std::make_shared<CountingAction>(be.action);
  be.action = counting;
  const auto r = run_session(make_input("n", 6), be, LoopConfig{});
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.turns(), 0);
  EXPECT_EQ(r.stop_reason, StopReason::no_flaws);
  EXPECT_EQ(r.final_image(), r.input.edited);
  EXPECT_EQ(counting->calls.load(), 0);
  ASSERT_TRUE(r.incomplete_turn.has_value());
  EXPECT_TRUE(r.incomplete_turn->joint_mask.none());
}

TEST(Loop, BackendFailureKeepsPartialHistory) {
  auto be = scripted({});
  be.evaluation = std::make_shared<FailingEvaluation>(3);
  const auto r = run_session(make_input("f", 7), be, LoopConfig{});
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.stop_reason, StopReason::error);
  EXPECT_EQ(r.turns(), 1);
  EXPECT_NE(r.error->find("unreachable"), std::string::npos);
  ASSERT_TRUE(r.incomplete_turn.has_value());
  EXPECT_EQ(r.incomplete_turn->turn, 2);
}

TEST(Loop, InvalidConfigThrows) {
  LoopConfig cfg;
  cfg.max_turns = 0;
  EXPECT_THROW(run_session(make_input("v", 8), scripted({50}), cfg), InvalidArgument);
  cfg = LoopConfig{};
  cfg.improvement_epsilon = -1.0;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  cfg = LoopConfig{};
  cfg.perception_post.tau = 1.5;
  EXPECT_THROW(validate(cfg), InvalidArgument);
  EXPECT_THROW(run_session(make_input("v", 8), BackendSet{}, LoopConfig{}), InvalidArgument);
}

TEST(Loop, RandomSchedulesSatisfyInvariants) {
  testing::Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<DimensionScores> sched;
    const int n = static_cast<int>(rng.integer(1, 7));
    for (int i = 0; i < n; ++i) {
      sched.push_back({rng.uniform(1.0, 100.0), rng.uniform(1.0, 100.0), rng.uniform(1.0, 100.0)});
    }
    MockOptions o;
    o.seed = rng.next();
    o.evaluation_schedule = sched;
    LoopConfig cfg;
    cfg.max_turns = static_cast<int>(rng.integer(1, 5));
    cfg.improvement_epsilon = rng.coin(0.5) ? 0.0 : rng.uniform(0.0, 5.0);
    const auto r = run_session(make_input("r", static_cast<std::uint64_t>(trial), 32), backends::make_mock_suite(o), cfg);
    ASSERT_TRUE(r.ok()) << *r.error;
    check_session_invariants(r);
  }
}

// --- batches ---------------------------------------------------------------------

std::vector<std::vector<double>> kBatchSchedules = {{60, 70, 68}, {50, 55, 60, 65, 70}, {70, 65}, {40, 41, 42}};

BackendFactory factory_for(const std::vector<SessionInput>& inputs) {
  return [inputs](const SessionInput& in) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].image_id != in.image_id) continue;
      MockOptions o;
      o.seed = 9;
      for (double s : kBatchSchedules[i % kBatchSchedules.size()]) o.evaluation_schedule.push_back(uniform_scores(s));
      return backends::make_mock_suite(o);
    }
    throw InvalidArgument("unknown session " + in.image_id);
  };
}

std::vector<SessionInput> batch_inputs(int n) {
  std::vector<SessionInput> out;
  for (int i = 0; i < n; ++i) out.push_back(make_input("b" + std::to_string(i), static_cast<std::uint64_t>(i), 48));
  return out;
}

TEST(Batch, ParallelismDoesNotChangeResults) {
  const auto inputs = batch_inputs(8);
  const auto one = run_batch(inputs, factory_for(inputs), LoopConfig{}, 1);
  const auto three = run_batch(inputs, factory_for(inputs), LoopConfig{}, 3);
  EXPECT_EQ(sessions_csv(one.sessions), sessions_csv(three.sessions));
  EXPECT_EQ(summary_csv(one.summary), summary_csv(three.summary));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    EXPECT_EQ(one.sessions[i].input.image_id, inputs[i].image_id);
    EXPECT_EQ(one.sessions[i].final_image(), three.sessions[i].final_image());
  }
}

TEST(Batch, MeanTurnsOverSessions) {
  // Turn counts 2, 3, 2, 3.
  const std::vector<std::vector<double>> scheds = {{60, 70, 68}, {50, 55, 60, 58}, {60, 70, 68}, {50, 55, 60, 58}};
  const auto inputs = batch_inputs(4);
  const BackendFactory factory = [&](const SessionInput& in) {
    MockOptions o;
    for (double s : scheds[static_cast<std::size_t>(std::stoi(in.image_id.substr(1)))]) {
      o.evaluation_schedule.push_back(uniform_scores(s));
    }
    return backends::make_mock_suite(o);
  };
  const auto res = run_batch(inputs, factory, LoopConfig{}, 2);
  EXPECT_EQ(res.summary.sessions, 4);
  EXPECT_EQ(res.summary.failures, 0);
  EXPECT_DOUBLE_EQ(res.summary.mean_turns, 2.5);
  EXPECT_DOUBLE_EQ(res.summary.mean_delta_overall, 10.0);
  EXPECT_DOUBLE_EQ(res.summary.mean_delta.perceptual_quality, 10.0);
}

TEST(Batch, OneFatalSessionDoesNotStopTheOthers) {
  const auto inputs = batch_inputs(3);
  const BackendFactory factory = [](const SessionInput& in) {
    auto be = scripted({60, 70, 68});
    if (in.image_id == "b1") be.evaluation = std::make_shared<FailingEvaluation>(1);
    return be;
  };
  const auto res = run_batch(inputs, factory, LoopConfig{}, 3);
  EXPECT_EQ(res.summary.sessions, 3);
  EXPECT_EQ(res.summary.failures, 1);
  EXPECT_TRUE(res.sessions[0].ok());
  EXPECT_FALSE(res.sessions[1].ok());
  EXPECT_TRUE(res.sessions[2].ok());
  EXPECT_DOUBLE_EQ(res.summary.mean_turns, 2.0);
  const auto csv = sessions_csv(res.sessions);
  EXPECT_NE(csv.find("b1,failed,0,error"), std::string::npos);
}

TEST(Batch, FactoryExceptionBecomesFailedSession) {
  const auto inputs = batch_inputs(2);
  const BackendFactory factory = [](const SessionInput& in) -> BackendSet {
    if (in.image_id == "b0") throw InvalidArgument("no backend");
    return scripted({60, 70, 68});
  };
  const auto res = run_batch(inputs, factory, LoopConfig{}, 1);
  EXPECT_EQ(res.summary.failures, 1);
  EXPECT_EQ(*res.sessions[0].error, "no backend");
}

TEST(Batch, RejectsZeroParallelism) {
  const auto inputs = batch_inputs(1);
  EXPECT_THROW(run_batch(inputs, factory_for(inputs), LoopConfig{}, 0), InvalidArgument);
}

TEST(StopReasonLabels, RoundTrip) {
  for (auto s : {StopReason::no_improvement, StopReason::max_turns, StopReason::no_flaws, StopReason::error}) {
    EXPECT_EQ(parse_stop_reason(to_string(s)), s);
  }
  EXPECT_THROW(parse_stop_reason("bored"), ParseError);
}

}  // namespace
}  // namespace refiner
