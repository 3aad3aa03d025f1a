#include "refiner/types.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refiner/errors.hpp"

namespace refiner {

ImageRef ImageRef::from_raster(std::string id, RgbImage raster) {
  ImageRef ref;
  ref.id = std::move(id);
  ref.width = raster.width;
  ref.height = raster.height;
  ref.pixels = std::make_shared<const RgbImage>(std::move(raster));
  return ref;
}

bool operator==(const ImageRef& a, const ImageRef& b) {
  if (a.id != b.id || a.width != b.width || a.height != b.height) return false;
  if (a.pixels.index() != b.pixels.index()) return false;
  if (const auto* pa = std::get_if<std::filesystem::path>(&a.pixels)) {
    return *pa == std::get<std::filesystem::path>(b.pixels);
  }
  const auto& ra = std::get<std::shared_ptr<const RgbImage>>(a.pixels);
  const auto& rb = std::get<std::shared_ptr<const RgbImage>>(b.pixels);
  if (ra == rb) return true;
  return ra && rb && *ra == *rb;
}

std::vector<std::string> validate_image_ref(const ImageRef& img) {
  std::vector<std::string> out;
  if (img.id.empty()) out.emplace_back("image id is empty");
  if (img.width < 1 || img.height < 1) {
    out.push_back(fmt::format("image '{}' has empty dimensions {}x{}", img.id, img.width, img.height));
  }
  if (const auto* raster = std::get_if<std::shared_ptr<const RgbImage>>(&img.pixels)) {
    if (!*raster) {
      out.push_back(fmt::format("image '{}' has no pixel data", img.id));
    } else if ((*raster)->width != img.width || (*raster)->height != img.height) {
      out.push_back(fmt::format("image '{}' raster is {}x{}, declared {}x{}", img.id, (*raster)->width,
                                (*raster)->height, img.width, img.height));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SaliencyMap::SaliencyMap(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument(fmt::format("saliency map dimensions must be positive, got {}x{}", width, height));
  }
  values_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

SaliencyMap::SaliencyMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 1 || height < 1) {
    throw InvalidArgument(fmt::format("saliency map dimensions must be positive, got {}x{}", width, height));
  }
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument(fmt::format("saliency map {}x{} needs {} values, got {}", width, height,
                                      static_cast<std::size_t>(width) * height, values_.size()));
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("saliency value out of [0,1]");
  }
}

double SaliencyMap::max_value() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

bool SaliencyMap::all_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument(fmt::format("mask dimensions must be positive, got {}x{}", width, height));
  }
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

BinaryMask::BinaryMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 1 || height < 1) {
    throw InvalidArgument(fmt::format("mask dimensions must be positive, got {}x{}", width, height));
  }
  if (bits_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument(fmt::format("mask {}x{} needs {} bits, got {}", width, height,
                                      static_cast<std::size_t>(width) * height, bits_.size()));
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::complement() const {
  std::vector<std::uint8_t> flipped(bits_.size());
  std::transform(bits_.begin(), bits_.end(), flipped.begin(), [](std::uint8_t b) { return b ^ 1; });
  return BinaryMask(width_, height_, std::move(flipped));
}

// ---------------------------------------------------------------------------

std::string_view to_string(RegionKind kind) {
  switch (kind) {
    case RegionKind::artifact:
      return "artifact";
    case RegionKind::editing_failure:
      return "editing_failure";
  }
  return "unknown";
}

RegionKind parse_region_kind(std::string_view label) {
  if (label == "artifact") return RegionKind::artifact;
  if (label == "editing_failure") return RegionKind::editing_failure;
  throw ParseError(fmt::format("unknown region_kind '{}'", label));
}

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::perceptual_quality:
      return "perceptual_quality";
    case Dimension::instruction_following:
      return "instruction_following";
    case Dimension::visual_consistency:
      return "visual_consistency";
  }
  return "unknown";
}

Dimension parse_dimension(std::string_view label) {
  for (Dimension d : kDimensions) {
    if (to_string(d) == label) return d;
  }
  throw ParseError(fmt::format("unknown dimension '{}'", label));
}

double DimensionScores::get(Dimension d) const {
  switch (d) {
    case Dimension::perceptual_quality:
      return perceptual_quality;
    case Dimension::instruction_following:
      return instruction_following;
    case Dimension::visual_consistency:
      return visual_consistency;
  }
  return 0.0;
}

std::vector<Disk> RegionAnnotation::all_disks() const {
  std::vector<Disk> disks;
  for (const auto& b : boxes) disks.insert(disks.end(), b.disks.begin(), b.disks.end());
  return disks;
}

std::vector<std::string> validate_annotation(const RegionAnnotation& annotation, const ImageRef& img) {
  std::vector<std::string> out;
  if (annotation.image_id != img.id) {
    out.push_back(fmt::format("annotation for '{}' checked against image '{}'", annotation.image_id, img.id));
  }
  for (std::size_t i = 0; i < annotation.boxes.size(); ++i) {
    const auto& ab = annotation.boxes[i];
    const auto& b = ab.box;
    if (!b.inside(img.width, img.height)) {
      out.push_back(fmt::format("box {} ({},{},{},{}) out of bounds for {}x{}", i, b.x_min, b.y_min, b.x_max,
                                b.y_max, img.width, img.height));
    }
    if (ab.disks.empty()) {
      out.push_back(fmt::format("box {}: box without disk", i));
    }
    for (std::size_t k = 0; k < ab.disks.size(); ++k) {
      const auto& d = ab.disks[k];
      if (!(d.radius > 0.0) || !std::isfinite(d.radius)) {
        out.push_back(fmt::format("box {} disk {}: radius {} is not positive", i, k, d.radius));
      }
      if (!(d.cx >= 0.0 && d.cx < img.width && d.cy >= 0.0 && d.cy < img.height)) {
        out.push_back(fmt::format("box {} disk {}: center ({}, {}) out of bounds for {}x{}", i, k, d.cx, d.cy,
                                  img.width, img.height));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const BoundingBox& b) {
  j = {{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max}};
}

void from_json(const nlohmann::json& j, BoundingBox& b) {
  j.at("x_min").get_to(b.x_min);
  j.at("y_min").get_to(b.y_min);
  j.at("x_max").get_to(b.x_max);
  j.at("y_max").get_to(b.y_max);
}

void to_json(nlohmann::json& j, const Disk& d) { j = {{"cx", d.cx}, {"cy", d.cy}, {"radius", d.radius}}; }

void from_json(const nlohmann::json& j, Disk& d) {
  j.at("cx").get_to(d.cx);
  j.at("cy").get_to(d.cy);
  j.at("radius").get_to(d.radius);
}

void to_json(nlohmann::json& j, RegionKind k) { j = std::string(to_string(k)); }

void from_json(const nlohmann::json& j, RegionKind& k) { k = parse_region_kind(j.get<std::string>()); }

void to_json(nlohmann::json& j, const AnnotatedBox& b) {
  to_json(j, b.box);
  j["disks"] = b.disks;
  j["description"] = b.description;
}

void from_json(const nlohmann::json& j, AnnotatedBox& b) {
  from_json(j, b.box);
  b.disks = j.value("disks", std::vector<Disk>{});
  b.description = j.value("description", std::string{});
}

void to_json(nlohmann::json& j, const RegionAnnotation& a) {
  j = {{"image_id", a.image_id}, {"region_kind", a.region_kind}, {"boxes", a.boxes}};
}

void from_json(const nlohmann::json& j, RegionAnnotation& a) {
  j.at("image_id").get_to(a.image_id);
  j.at("region_kind").get_to(a.region_kind);
  a.boxes = j.value("boxes", std::vector<AnnotatedBox>{});
}

void to_json(nlohmann::json& j, const FlawDiagnosis& d) {
  j = {{"region_kind", d.region_kind}, {"flaw_type", d.flaw_type}, {"reasoning", d.reasoning}, {"box", d.box}};
}

void from_json(const nlohmann::json& j, FlawDiagnosis& d) {
  j.at("region_kind").get_to(d.region_kind);
  j.at("flaw_type").get_to(d.flaw_type);
  d.reasoning = j.value("reasoning", std::string{});
  j.at("box").get_to(d.box);
}

void to_json(nlohmann::json& j, const DimensionScores& s) {
  j = {{"perceptual_quality", s.perceptual_quality},
       {"instruction_following", s.instruction_following},
       {"visual_consistency", s.visual_consistency}};
}

void from_json(const nlohmann::json& j, DimensionScores& s) {
  j.at("perceptual_quality").get_to(s.perceptual_quality);
  j.at("instruction_following").get_to(s.instruction_following);
  j.at("visual_consistency").get_to(s.visual_consistency);
}

}  // namespace refiner
