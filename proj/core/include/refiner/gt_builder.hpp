#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refiner/metrics.hpp"
#include "refiner/mos.hpp"
#include "refiner/types.hpp"

namespace refiner {

struct GtBuildConfig {
  enum class Normalization {
    peak,  // divide by the grid maximum so the peak is exactly 1
    none,  // raw kernel sum, saturated at 1 where kernels overlap
  };

  /// Kernel sigma as a multiple of the disk radius.
  double kernel_sigma_factor = 0.5;
  Normalization normalization = Normalization::peak;
};

/// Sum of isotropic Gaussians, one per disk, evaluated on the full width x height grid.
///
/// Value at (x, y) is sum_d exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma_d^2)) with
/// sigma_d = kernel_sigma_factor * radius_d. Disks are summed in a canonical order so the
/// result does not depend on the order of `disks`.
/// Throws InvalidArgument on empty dimensions, a non-positive sigma factor, or a disk outside the image.
SaliencyMap build_gt_map(std::span<const Disk> disks, int width, int height, const GtBuildConfig& cfg = {});

/// Disk centers rounded to the nearest pixel and clamped into the image, deduplicated.
FixationSet fixations_from_disks(std::span<const Disk> disks, int width, int height);

/// {"points": [[x, y], ...]}.
void write_fixations(const std::filesystem::path& path, const FixationSet& fixations);
/// Throws ParseError on a missing or malformed file.
FixationSet read_fixations(const std::filesystem::path& path);

/// One edited image listed in a manifest, plus the optional inputs a refinement session needs.
struct ManifestImage {
  ImageRef edited;
  std::optional<ImageRef> source;
  std::string instruction;
};

struct AnnotationManifest {
  std::vector<ManifestImage> images;
  std::vector<RegionAnnotation> annotations;
  std::vector<mos::RatingRecord> ratings;

  const ManifestImage* find_image(std::string_view id) const;
  std::vector<const RegionAnnotation*> annotations_for(std::string_view image_id, RegionKind kind) const;
};

/// Parses and validates a manifest. Relative paths resolve against `base_dir`.
///
/// Throws ParseError on malformed JSON, missing fields or duplicate image ids, and
/// ValidationError (carrying the offending image ids) when any annotation or rating breaks
/// its invariants.
AnnotationManifest parse_annotation_manifest(std::string_view text, const std::filesystem::path& base_dir);
AnnotationManifest load_annotation_manifest(const std::filesystem::path& path);

struct GtMap {
  std::string image_id;
  RegionKind region_kind = RegionKind::artifact;
  SaliencyMap map;
  FixationSet fixations;

  /// "<image_id>_<region_kind>", the stem used for files written by build-gt.
  std::string stem() const;
};

/// One map per image per region kind (kinds with no annotation give an all-zero map).
std::vector<GtMap> build_gt_maps(const AnnotationManifest& manifest, const GtBuildConfig& cfg = {});

}  // namespace refiner
