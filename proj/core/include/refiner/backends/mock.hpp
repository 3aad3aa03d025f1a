#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

#include "refiner/backends/backend.hpp"

namespace refiner::backends {

struct MockOptions {
  std::uint64_t seed = 0;
  /// Scores returned by successive evaluate() calls; the last entry repeats once exhausted.
  /// When empty, scores come from a seeded random walk keyed by the source image id.
  std::vector<DimensionScores> evaluation_schedule;
  /// When set, perceive() echoes these maps instead of synthesizing them.
  std::optional<PerceptionResponse> fixed_perception;
};

/// Seeded synthetic saliency maps: one or two Gaussian blobs per region kind, positioned by a
/// hash of (seed, region kind, edited-image pixels) and quantized to 16 bits. Blobs sit at
/// least one radius inside the border with peak at least 0.75, so on images of 32 pixels or
/// more each map keeps a component above the default threshold and minimum area.
class MockPerception final : public PerceptionBackend {
 public:
  explicit MockPerception(MockOptions options) : options_(std::move(options)) {}
  PerceptionResponse perceive(const PerceptionRequest& request) override;

 private:
  MockOptions options_;
};

/// One templated diagnosis per requested box; flaw type picked by hashing (seed, kind, box).
class MockReasoning final : public ReasoningBackend {
 public:
  explicit MockReasoning(std::uint64_t seed) : seed_(seed) {}
  ReasoningResponse reason(const ReasoningRequest& request) override;

 private:
  std::uint64_t seed_;
};

/// Returns the previous edit with every masked pixel recolored: averaged with the source pixel
/// (inverted when source and edit differ in size), then shifted by 37 modulo 256 per channel so
/// the change stays visible where edit and source already agree. Output id is derived from the pixels.
class MockAction final : public ActionBackend {
 public:
  ActionResponse act(const ActionRequest& request) override;
};

class MockEvaluation final : public EvaluationBackend {
 public:
  explicit MockEvaluation(MockOptions options) : options_(std::move(options)) {}
  EvaluationResponse evaluate(const EvaluationRequest& request) override;

  int calls() const;

 private:
  MockOptions options_;
  mutable std::mutex mutex_;
  int calls_ = 0;
};

/// Fresh, independent mocks; call counters start at zero.
BackendSet make_mock_suite(const MockOptions& options);

/// Scores for call `index` of the seeded schedule used when no script is given.
DimensionScores seeded_mock_scores(std::uint64_t seed, std::string_view source_id, int index);

/// Uniform score triple (s, s, s), whose overall score is s.
DimensionScores uniform_scores(double s);

}  // namespace refiner::backends
