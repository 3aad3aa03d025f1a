#include "refiner/gt_builder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refiner/errors.hpp"
#include "refiner/raster_io.hpp"

namespace refiner {

SaliencyMap build_gt_map(std::span<const Disk> disks, int width, int height, const GtBuildConfig& cfg) {
  if (width < 1 || height < 1) {
    throw InvalidArgument(fmt::format("build_gt_map: empty image dimensions {}x{}", width, height));
  }
  if (!(cfg.kernel_sigma_factor > 0.0)) {
    throw InvalidArgument("build_gt_map: kernel_sigma_factor must be positive");
  }
  std::vector<Disk> ordered(disks.begin(), disks.end());
  for (const auto& d : ordered) {
    if (!(d.radius > 0.0) || !(d.cx >= 0.0 && d.cx < width && d.cy >= 0.0 && d.cy < height)) {
      throw InvalidArgument(
          fmt::format("build_gt_map: disk ({}, {}, r={}) outside {}x{}", d.cx, d.cy, d.radius, width, height));
    }
  }
  std::sort(ordered.begin(), ordered.end(), [](const Disk& a, const Disk& b) {
    return std::tie(a.cx, a.cy, a.radius) < std::tie(b.cx, b.cy, b.radius);
  });

  const auto w = static_cast<std::size_t>(width);
  std::vector<double> sum(w * static_cast<std::size_t>(height), 0.0);
  std::vector<double> gx(w);
  std::vector<double> gy(static_cast<std::size_t>(height));
  for (const auto& d : ordered) {
    // exp(-(dx^2 + dy^2) / 2s^2) factors into a row term and a column term.
    const double sigma = cfg.kernel_sigma_factor * d.radius;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int x = 0; x < width; ++x) gx[x] = std::exp(-(x - d.cx) * (x - d.cx) * inv);
    for (int y = 0; y < height; ++y) gy[y] = std::exp(-(y - d.cy) * (y - d.cy) * inv);
    for (int y = 0; y < height; ++y) {
      double* row = sum.data() + y * w;
      for (int x = 0; x < width; ++x) row[x] += gy[y] * gx[x];
    }
  }

  const double peak = sum.empty() ? 0.0 : *std::max_element(sum.begin(), sum.end());
  if (cfg.normalization == GtBuildConfig::Normalization::peak) {
    if (peak > 0.0) {
      for (double& v : sum) v /= peak;
    }
  } else {
    for (double& v : sum) v = std::min(v, 1.0);
  }
  return SaliencyMap(width, height, std::move(sum));
}

FixationSet fixations_from_disks(std::span<const Disk> disks, int width, int height) {
  std::set<Pixel> unique;
  for (const auto& d : disks) {
    const int x = std::clamp(static_cast<int>(std::lround(d.cx)), 0, width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(d.cy)), 0, height - 1);
    unique.insert({x, y});
  }
  return FixationSet{{unique.begin(), unique.end()}};
}

void write_fixations(const std::filesystem::path& path, const FixationSet& fixations) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : fixations.points) points.push_back({p.x, p.y});
  const std::string text = nlohmann::json{{"points", points}}.dump() + "\n";
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

FixationSet read_fixations(const std::filesystem::path& path) {
  const Bytes raw = read_file(path);
  const auto j = nlohmann::json::parse(raw.begin(), raw.end(), nullptr, false);
  try {
    if (j.is_discarded()) throw ParseError("not JSON");
    FixationSet out;
    for (const auto& p : j.at("points")) out.points.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    return out;
  } catch (const std::exception& e) {
    throw ParseError(fmt::format("fixations '{}': {}", path.string(), e.what()));
  }
}

const ManifestImage* AnnotationManifest::find_image(std::string_view id) const {
  for (const auto& img : images) {
    if (img.edited.id == id) return &img;
  }
  return nullptr;
}

std::vector<const RegionAnnotation*> AnnotationManifest::annotations_for(std::string_view image_id,
                                                                        RegionKind kind) const {
  std::vector<const RegionAnnotation*> out;
  for (const auto& a : annotations) {
    if (a.image_id == image_id && a.region_kind == kind) out.push_back(&a);
  }
  return out;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

ManifestImage parse_image(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ManifestImage img;
  img.edited.id = j.at("id").get<std::string>();
  img.edited.width = j.at("width").get<int>();
  img.edited.height = j.at("height").get<int>();
  img.edited.pixels = resolve(base_dir, j.at("path").get<std::string>());
  img.instruction = j.value("instruction", std::string{});
  if (j.contains("source")) {
    const auto& s = j.at("source");
    ImageRef src;
    src.id = s.value("id", img.edited.id + ":source");
    src.width = s.value("width", img.edited.width);
    src.height = s.value("height", img.edited.height);
    src.pixels = resolve(base_dir, s.at("path").get<std::string>());
    img.source = std::move(src);
  }
  return img;
}

}  // namespace

AnnotationManifest parse_annotation_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  AnnotationManifest manifest;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& ji : j.at("images")) manifest.images.push_back(parse_image(ji, base_dir));
    if (j.contains("annotations")) manifest.annotations = j.at("annotations").get<std::vector<RegionAnnotation>>();
    if (j.contains("ratings")) manifest.ratings = j.at("ratings").get<std::vector<mos::RatingRecord>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("manifest: {}", e.what()));
  }

  std::set<std::string> ids;
  for (const auto& img : manifest.images) {
    if (!ids.insert(img.edited.id).second) {
      throw ParseError(fmt::format("manifest: duplicate image id '{}'", img.edited.id));
    }
  }

  std::set<std::string> bad_ids;
  std::vector<std::string> violations;
  auto flag = [&](const std::string& id, const std::string& what) {
    bad_ids.insert(id);
    violations.push_back(fmt::format("{}: {}", id, what));
  };
  for (const auto& img : manifest.images) {
    for (const auto& v : validate_image_ref(img.edited)) flag(img.edited.id, v);
    if (img.source) {
      for (const auto& v : validate_image_ref(*img.source)) flag(img.edited.id, v);
    }
  }
  for (const auto& a : manifest.annotations) {
    const ManifestImage* img = manifest.find_image(a.image_id);
    if (!img) {
      flag(a.image_id, "annotation references unknown image");
      continue;
    }
    for (const auto& v : validate_annotation(a, img->edited)) flag(a.image_id, v);
  }
  for (const auto& r : manifest.ratings) {
    if (!manifest.find_image(r.image_id)) flag(r.image_id, "rating references unknown image");
    if (!(r.raw_score >= 1.0 && r.raw_score <= 5.0)) {
      flag(r.image_id, fmt::format("rating {} by '{}' outside [1,5]", r.raw_score, r.annotator_id));
    }
  }
  if (!violations.empty()) {
    std::vector<std::string> idlist(bad_ids.begin(), bad_ids.end());
    throw ValidationError(fmt::format("manifest validation failed for: {}", fmt::join(idlist, ", ")),
                          std::move(idlist), std::move(violations));
  }
  return manifest;
}

AnnotationManifest load_annotation_manifest(const std::filesystem::path& path) {
  const Bytes raw = read_file(path);
  return parse_annotation_manifest(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()),
                                   path.parent_path());
}

std::string GtMap::stem() const { return fmt::format("{}_{}", image_id, to_string(region_kind)); }

std::vector<GtMap> build_gt_maps(const AnnotationManifest& manifest, const GtBuildConfig& cfg) {
  std::vector<GtMap> out;
  for (const auto& img : manifest.images) {
    for (RegionKind kind : kRegionKinds) {
      std::vector<Disk> disks;
      for (const auto* a : manifest.annotations_for(img.edited.id, kind)) {
        const auto d = a->all_disks();
        disks.insert(disks.end(), d.begin(), d.end());
      }
      GtMap gt{img.edited.id, kind, build_gt_map(disks, img.edited.width, img.edited.height, cfg),
               fixations_from_disks(disks, img.edited.width, img.edited.height)};
      out.push_back(std::move(gt));
    }
  }
  return out;
}

}  // namespace refiner
