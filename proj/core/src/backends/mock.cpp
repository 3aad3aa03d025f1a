#include "refiner/backends/mock.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "refiner/gt_builder.hpp"
#include "refiner/raster_io.hpp"

namespace refiner::backends {

namespace {

// Hand-rolled mixing so outputs do not depend on the standard library's distributions.

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}
  double uniform() { return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return splitmix64(state_); }

 private:
  std::uint64_t state_;
};

std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

SaliencyMap synth_map(Stream& rng, int width, int height) {
  const int blobs = rng.uniform() < 0.5 ? 1 : 2;
  std::vector<Disk> disks;
  for (int i = 0; i < blobs; ++i) {
    Disk d;
    // Radius >= 8 keeps the core above tau = 0.5 at amplitude 0.75 wider than 16 pixels.
    d.radius = std::max(8.0, height / 8.0) * (1.0 + 0.25 * rng.uniform());
    // Keep the blob a radius away from the border so its thresholded core is never clipped.
    auto place = [&](int extent) {
      const double span = (extent - 1) - 2.0 * d.radius;
      return span > 0.0 ? d.radius + rng.uniform() * span : (extent - 1) / 2.0;
    };
    d.cx = place(width);
    d.cy = place(height);
    disks.push_back(d);
  }
  const SaliencyMap base = build_gt_map(disks, width, height);
  const double amplitude = 0.75 + 0.25 * rng.uniform();
  std::vector<double> values(base.values().begin(), base.values().end());
  for (double& v : values) v *= amplitude;
  return quantize16(SaliencyMap(width, height, std::move(values)));
}

constexpr int kActionTint = 37;

constexpr std::array<const char*, 4> kArtifactTypes = {"texture distortion", "color inconsistency", "noise",
                                                        "structural deformation"};
constexpr std::array<const char*, 3> kFailureTypes = {"missing edit", "incorrect attribute", "unintended change"};

}  // namespace

PerceptionResponse MockPerception::perceive(const PerceptionRequest& request) {
  if (options_.fixed_perception) return *options_.fixed_perception;
  const std::uint64_t image_key = fnv1a(content_hash(load_pixels(request.edited)));
  const int w = request.edited.width;
  const int h = request.edited.height;
  Stream artifact(combine(combine(options_.seed, image_key), 1));
  Stream failure(combine(combine(options_.seed, image_key), 2));
  return {synth_map(artifact, w, h), synth_map(failure, w, h)};
}

ReasoningResponse MockReasoning::reason(const ReasoningRequest& request) {
  ReasoningResponse out;
  std::vector<std::string> parts;
  for (const auto& box : request.boxes) {
    const std::uint64_t key = combine(
        combine(seed_, static_cast<std::uint64_t>(request.region_kind)),
        fnv1a(fmt::format("{},{},{},{}", box.x_min, box.y_min, box.x_max, box.y_max)));
    const std::string flaw_type = request.region_kind == RegionKind::artifact
                                      ? kArtifactTypes[key % kArtifactTypes.size()]
                                      : kFailureTypes[key % kFailureTypes.size()];
    FlawDiagnosis d;
    d.region_kind = request.region_kind;
    d.flaw_type = flaw_type;
    d.reasoning = fmt::format("The {} spans pixels ({},{})-({},{}) of the edited image.", flaw_type, box.x_min,
                              box.y_min, box.x_max, box.y_max);
    d.box = box;
    parts.push_back(fmt::format("{} at ({},{})-({},{})", flaw_type, box.x_min, box.y_min, box.x_max, box.y_max));
    out.diagnoses.push_back(std::move(d));
  }
  out.summary = fmt::format("{}", fmt::join(parts, "; "));
  return out;
}

ActionResponse MockAction::act(const ActionRequest& request) {
  RgbImage img = load_pixels(request.previous_edit);
  const RgbImage src = load_pixels(request.source);
  const bool aligned = src.width == img.width && src.height == img.height;
  const auto& mask = request.mask;
  for (int y = 0; y < img.height && y < mask.height(); ++y) {
    for (int x = 0; x < img.width && x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
      for (std::size_t c = 0; c < 3; ++c) {
        const int base = aligned ? (img.pixels[i + c] + src.pixels[i + c] + 1) / 2 : 255 - img.pixels[i + c];
        img.pixels[i + c] = static_cast<std::uint8_t>((base + kActionTint) % 256);
      }
    }
  }
  std::string id = "mock-" + content_hash(img).substr(0, 16);
  return {ImageRef::from_raster(std::move(id), std::move(img))};
}

DimensionScores uniform_scores(double s) { return {s, s, s}; }

DimensionScores seeded_mock_scores(std::uint64_t seed, std::string_view source_id, int index) {
  // Random walk: baseline in [45, 65), then steps in [-3, 7) per call.
  Stream rng(combine(seed, fnv1a(source_id)));
  double base = 45.0 + 20.0 * rng.uniform();
  for (int i = 0; i < index; ++i) base += -3.0 + 10.0 * rng.uniform();
  base = std::clamp(base, 1.0, 100.0);
  const double dv = 4.0 * rng.uniform() - 2.0;
  const double dp = 4.0 * rng.uniform() - 2.0;
  return {std::clamp(base + dv, 1.0, 100.0), base, std::clamp(base + dp, 1.0, 100.0)};
}

EvaluationResponse MockEvaluation::evaluate(const EvaluationRequest& request) {
  int index = 0;
  {
    std::lock_guard lock(mutex_);
    index = calls_++;
  }
  const auto& schedule = options_.evaluation_schedule;
  if (!schedule.empty()) {
    return {schedule[std::min<std::size_t>(static_cast<std::size_t>(index), schedule.size() - 1)]};
  }
  return {seeded_mock_scores(options_.seed, request.source.id, index)};
}

int MockEvaluation::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

BackendSet make_mock_suite(const MockOptions& options) {
  return {std::make_shared<MockPerception>(options), std::make_shared<MockReasoning>(options.seed),
          std::make_shared<MockAction>(), std::make_shared<MockEvaluation>(options)};
}

}  // namespace refiner::backends
