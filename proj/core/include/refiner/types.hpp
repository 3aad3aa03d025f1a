#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace refiner {

/// 8-bit interleaved RGB raster, row-major, origin top-left.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// A reference to an image by id: either a file on disk or an in-memory raster.
struct ImageRef {
  using PixelSource = std::variant<std::filesystem::path, std::shared_ptr<const RgbImage>>;

  std::string id;
  int width = 0;
  int height = 0;
  PixelSource pixels;

  static ImageRef from_raster(std::string id, RgbImage raster);

  bool is_inline() const { return std::holds_alternative<std::shared_ptr<const RgbImage>>(pixels); }

  friend bool operator==(const ImageRef& a, const ImageRef& b);
};

std::vector<std::string> validate_image_ref(const ImageRef& img);

/// Row-major grid of reals in [0,1].
class SaliencyMap {
 public:
  SaliencyMap() = default;
  /// All-zero map. Throws InvalidArgument on empty dimensions.
  SaliencyMap(int width, int height);
  /// Throws InvalidArgument on size mismatch, empty dimensions, or any value outside [0,1].
  SaliencyMap(int width, int height, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  double max_value() const;
  bool all_zero() const;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);
  /// Non-zero bytes are true. Throws InvalidArgument on size mismatch.
  BinaryMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }

  std::size_t count() const;
  bool none() const { return count() == 0; }
  BinaryMask complement() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;  // 0 or 1
};

/// Inclusive on both corners, so a single pixel is (x, y, x, y).
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int box_width() const { return x_max - x_min + 1; }
  int box_height() const { return y_max - y_min + 1; }
  bool inside(int width, int height) const {
    return 0 <= x_min && x_min <= x_max && x_max < width && 0 <= y_min && y_min <= y_max &&
           y_max < height;
  }
  bool contains(int x, int y) const { return x_min <= x && x <= x_max && y_min <= y && y <= y_max; }

  friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

struct Disk {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;

  friend bool operator==(const Disk&, const Disk&) = default;
};

/// Disk radius used by the annotation protocol: one twentieth of the image height.
inline double standard_disk_radius(int image_height) { return image_height / 20.0; }

enum class RegionKind { artifact, editing_failure };

inline constexpr RegionKind kRegionKinds[] = {RegionKind::artifact, RegionKind::editing_failure};

std::string_view to_string(RegionKind kind);
/// Throws ParseError on an unknown label.
RegionKind parse_region_kind(std::string_view label);

struct AnnotatedBox {
  BoundingBox box;
  std::vector<Disk> disks;
  std::string description;

  friend bool operator==(const AnnotatedBox&, const AnnotatedBox&) = default;
};

struct RegionAnnotation {
  std::string image_id;
  RegionKind region_kind = RegionKind::artifact;
  std::vector<AnnotatedBox> boxes;

  std::vector<Disk> all_disks() const;

  friend bool operator==(const RegionAnnotation&, const RegionAnnotation&) = default;
};

/// Empty iff every box is in bounds with at least one in-bounds disk of positive radius.
std::vector<std::string> validate_annotation(const RegionAnnotation& annotation, const ImageRef& img);

struct FlawDiagnosis {
  RegionKind region_kind = RegionKind::artifact;
  std::string flaw_type;
  std::string reasoning;
  BoundingBox box;

  friend bool operator==(const FlawDiagnosis&, const FlawDiagnosis&) = default;
};

enum class Dimension { perceptual_quality, instruction_following, visual_consistency };

inline constexpr Dimension kDimensions[] = {Dimension::perceptual_quality,
                                            Dimension::instruction_following,
                                            Dimension::visual_consistency};

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view label);

/// s_v, s_e, s_p on a common positive scale.
struct DimensionScores {
  double perceptual_quality = 0.0;
  double instruction_following = 0.0;
  double visual_consistency = 0.0;

  double get(Dimension d) const;

  friend bool operator==(const DimensionScores&, const DimensionScores&) = default;
};

void to_json(nlohmann::json& j, const BoundingBox& b);
void from_json(const nlohmann::json& j, BoundingBox& b);
void to_json(nlohmann::json& j, const Disk& d);
void from_json(const nlohmann::json& j, Disk& d);
void to_json(nlohmann::json& j, RegionKind k);
void from_json(const nlohmann::json& j, RegionKind& k);
void to_json(nlohmann::json& j, const AnnotatedBox& b);
void from_json(const nlohmann::json& j, AnnotatedBox& b);
void to_json(nlohmann::json& j, const RegionAnnotation& a);
void from_json(const nlohmann::json& j, RegionAnnotation& a);
void to_json(nlohmann::json& j, const FlawDiagnosis& d);
void from_json(const nlohmann::json& j, FlawDiagnosis& d);
void to_json(nlohmann::json& j, const DimensionScores& s);
void from_json(const nlohmann::json& j, DimensionScores& s);

}  // namespace refiner
