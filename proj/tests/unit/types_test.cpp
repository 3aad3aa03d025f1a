#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "refiner/errors.hpp"
#include "refiner/mos.hpp"
#include "refiner/types.hpp"
#include "rng.hpp"

namespace refiner {
namespace {

using testing::Rng;

ImageRef blank_image(const std::string& id, int w, int h) {
  return ImageRef::from_raster(id, RgbImage{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)});
}

template <typename T>
T round_trip(const T& value) {
  const nlohmann::json j = value;
  return nlohmann::json::parse(j.dump()).get<T>();
}

Disk random_disk(Rng& rng, int w, int h) {
  return {rng.uniform(0.0, w - 1.0), rng.uniform(0.0, h - 1.0), rng.uniform(0.5, h / 5.0)};
}

RegionAnnotation random_valid_annotation(Rng& rng, const std::string& id, int w, int h) {
  RegionAnnotation a;
  a.image_id = id;
  a.region_kind = rng.coin() ? RegionKind::artifact : RegionKind::editing_failure;
  const int n_boxes = rng.integer(0, 4);
  for (int i = 0; i < n_boxes; ++i) {
    AnnotatedBox ab;
    const int x0 = rng.integer(0, w - 1);
    const int y0 = rng.integer(0, h - 1);
    ab.box = {x0, y0, rng.integer(x0, w - 1), rng.integer(y0, h - 1)};
    const int n_disks = rng.integer(1, 3);
    for (int k = 0; k < n_disks; ++k) ab.disks.push_back(random_disk(rng, w, h));
    ab.description = "box " + std::to_string(i);
    a.boxes.push_back(ab);
  }
  return a;
}

TEST(Types, ValidAnnotationHasNoViolations) {
  const auto img = blank_image("img", 64, 40);
  RegionAnnotation a{"img", RegionKind::artifact, {{{4, 4, 20, 20}, {{10.0, 10.0, standard_disk_radius(40)}}, ""}}};
  EXPECT_TRUE(validate_annotation(a, img).empty());
}

TEST(Types, BoxWithoutDiskIsOneViolation) {
  const auto img = blank_image("img", 64, 40);
  RegionAnnotation a{"img", RegionKind::artifact, {{{4, 4, 20, 20}, {}, ""}}};
  const auto v = validate_annotation(a, img);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("box without disk"), std::string::npos);
}

TEST(Types, BoxReachingWidthIsOutOfBounds) {
  const auto img = blank_image("img", 64, 40);
  RegionAnnotation a{"img", RegionKind::artifact, {{{4, 4, 64, 20}, {{10.0, 10.0, 2.0}}, ""}}};
  const auto v = validate_annotation(a, img);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("out of bounds"), std::string::npos);
}

TEST(Types, ValidateAnnotationPropertyUnderMutation) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int w = rng.integer(4, 80);
    const int h = rng.integer(4, 80);
    const auto img = blank_image("img", w, h);
    auto a = random_valid_annotation(rng, "img", w, h);
    ASSERT_TRUE(validate_annotation(a, img).empty()) << "trial " << trial;
    if (a.boxes.empty()) continue;

    auto& ab = a.boxes[static_cast<std::size_t>(rng.integer(0, static_cast<int>(a.boxes.size()) - 1))];
    switch (rng.integer(0, 5)) {
      case 0:
        ab.disks.clear();
        break;
      case 1:
        ab.box.x_max = w + rng.integer(0, 5);
        break;
      case 2:
        ab.box.y_min = -1 - rng.integer(0, 5);
        break;
      case 3:
        ab.disks[0].radius = -rng.uniform(0.0, 3.0);
        break;
      case 4:
        ab.disks[0].cx = w + rng.uniform(0.0, 10.0);
        break;
      default:
        ab.box.x_min = ab.box.x_max + 1;
        break;
    }
    EXPECT_FALSE(validate_annotation(a, img).empty()) << "trial " << trial;
  }
}

TEST(Types, MismatchedImageIdIsAViolation) {
  const auto img = blank_image("other", 16, 16);
  RegionAnnotation a{"img", RegionKind::artifact, {}};
  EXPECT_EQ(validate_annotation(a, img).size(), 1u);
}

TEST(Types, JsonRoundTripIsIdentity) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_valid_annotation(rng, "img-" + std::to_string(trial), 50, 30);
    EXPECT_EQ(round_trip(a), a);
    for (const auto& ab : a.boxes) {
      EXPECT_EQ(round_trip(ab), ab);
      EXPECT_EQ(round_trip(ab.box), ab.box);
      for (const auto& d : ab.disks) EXPECT_EQ(round_trip(d), d);
    }
    const FlawDiagnosis fd{rng.coin() ? RegionKind::artifact : RegionKind::editing_failure, "noise",
                           "grain in \"sky\"\n", {1, 2, 3, 4}};
    EXPECT_EQ(round_trip(fd), fd);
    const DimensionScores s{rng.uniform(1.0, 100.0), rng.uniform(1.0, 100.0), rng.uniform(1.0, 100.0)};
    EXPECT_EQ(round_trip(s), s);
    const mos::RatingRecord r{"ann", "img", kDimensions[rng.integer(0, 2)], rng.uniform(1.0, 5.0)};
    EXPECT_EQ(round_trip(r), r);
  }
}

TEST(Types, RegionKindAndDimensionLabels) {
  for (RegionKind k : kRegionKinds) EXPECT_EQ(parse_region_kind(to_string(k)), k);
  for (Dimension d : kDimensions) EXPECT_EQ(parse_dimension(to_string(d)), d);
  EXPECT_THROW(parse_region_kind("blur"), ParseError);
  EXPECT_THROW(parse_dimension("sharpness"), ParseError);
}

TEST(Types, SaliencyMapRejectsOutOfRangeValues) {
  EXPECT_THROW(SaliencyMap(2, 1, {0.5, 1.3}), InvalidArgument);
  EXPECT_THROW(SaliencyMap(2, 1, {0.5, -0.1}), InvalidArgument);
  EXPECT_THROW(SaliencyMap(2, 2, {0.5}), InvalidArgument);
  EXPECT_THROW(SaliencyMap(0, 2), InvalidArgument);
  EXPECT_NO_THROW(SaliencyMap(2, 1, {0.0, 1.0}));
}

TEST(Types, BinaryMaskComplementAndCount) {
  BinaryMask m(3, 2, std::vector<std::uint8_t>{1, 0, 7, 0, 0, 1});
  EXPECT_EQ(m.count(), 3u);
  EXPECT_TRUE(m.at(2, 0));
  EXPECT_EQ(m.complement().count(), 3u);
  EXPECT_EQ(m.complement().complement(), m);
}

TEST(Types, BoundingBoxIsInclusive) {
  const BoundingBox b{2, 3, 2, 3};
  EXPECT_EQ(b.box_width(), 1);
  EXPECT_EQ(b.box_height(), 1);
  EXPECT_TRUE(b.contains(2, 3));
  EXPECT_TRUE(b.inside(3, 4));
  EXPECT_FALSE(b.inside(2, 4));
}

TEST(Types, ImageRefValidation) {
  EXPECT_TRUE(validate_image_ref(blank_image("a", 4, 4)).empty());
  ImageRef bad{"", 0, 3, std::filesystem::path("x.png")};
  EXPECT_EQ(validate_image_ref(bad).size(), 2u);
}

}  // namespace
}  // namespace refiner
