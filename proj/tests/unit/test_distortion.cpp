#include "doctest_torch.hpp"

#include <cmath>
#include <numbers>

#include "mtaoiqa/distortion.hpp"
#include "test_support.hpp"

using namespace mtaoiqa;
using namespace mtaoiqa::testing;
using std::numbers::pi;

namespace {

DistortionSpec one_region(DistortionType type, int level, SphereCoord c = {0.0, 0.0}) {
  DistortionSpec s;
  s.type = type;
  s.level = level;
  s.regions.push_back({c, kDefaultRegionRadius});
  return s;
}

}  // namespace

TEST_SUITE("distortion") {

TEST_CASE("no-op spec returns the input") {
  const auto img = procedural_panorama(5, 32);
  CHECK(apply_distortion(img, DistortionSpec{}, 9) == img);
}

TEST_CASE("level-3 noise inside a region has the configured sigma") {
  const auto img = constant_panorama(256, 0.5f, 0.5f, 0.5f);
  const auto spec = one_region(DistortionType::kGaussianNoise, 3);
  const auto out = apply_distortion(img, spec, 17);
  double in_sum = 0, in_sq = 0, out_sq = 0;
  int in_n = 0, out_n = 0;
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 512; ++x) {
      const auto d = pixel_direction(y, x, 256, 512);
      const double dist = angular_distance(d, {0.0, 0.0});
      const double v = out.pixels().at(y, x, 0) - 0.5;
      if (dist < kDefaultRegionRadius) {
        in_sum += v;
        in_sq += v * v;
        ++in_n;
      } else if (dist > kDefaultRegionRadius + kMaskFalloff) {
        out_sq += v * v;
        ++out_n;
      }
    }
  }
  REQUIRE(in_n > 500);
  const double mean = in_sum / in_n;
  const double sd = std::sqrt(in_sq / in_n - mean * mean);
  CHECK(sd == doctest::Approx(0.20).epsilon(0.10));
  CHECK(out_sq / out_n < in_sq / in_n);
}

TEST_CASE("distortion is deterministic per seed") {
  const auto img = procedural_panorama(2, 64);
  for (int t = 0; t < kNumDistortionTypes; ++t) {
    const auto spec = one_region(static_cast<DistortionType>(t), 2, {1.0, 0.1});
    CHECK(apply_distortion(img, spec, 4) == apply_distortion(img, spec, 4));
  }
}

TEST_CASE("pixels beyond the falloff are untouched") {
  const auto img = procedural_panorama(8, 64);
  for (int t = 0; t < kNumDistortionTypes; ++t) {
    const auto spec = one_region(static_cast<DistortionType>(t), 3, {-0.8, 0.2});
    const auto out = apply_distortion(img, spec, 1);
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 128; ++x) {
        const auto d = pixel_direction(y, x, 64, 128);
        if (angular_distance(d, spec.regions[0].center) <= kDefaultRegionRadius + kMaskFalloff) continue;
        for (int c = 0; c < 3; ++c) REQUIRE(out.pixels().at(y, x, c) == img.pixels().at(y, x, c));
      }
    }
  }
}

TEST_CASE("pseudo-MOS reference values") {
  const ScoreRange jufe{1.0, 5.0};
  CHECK(pseudo_mos(DistortionSpec{}, jufe) == 5.0);
  DistortionSpec global;
  global.type = DistortionType::kGaussianNoise;
  global.level = 3;
  global.global = true;
  CHECK(pseudo_mos(global, jufe) == doctest::Approx(1.0).epsilon(1e-15));
  // Hand evaluation: cap area 2*pi*(1 - cos(pi/8)) over the pi steradian reference.
  const double coverage = 2.0 * (1.0 - std::cos(pi / 8.0));
  const double expected = 5.0 - 4.0 * 0.9 * (2.0 / 3.0) * coverage;
  CHECK(pseudo_mos(one_region(DistortionType::kGaussianBlur, 2), jufe) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pseudo-MOS is monotone in level and region count") {
  const ScoreRange oiq{1.0, 3.0};
  for (int t = 0; t < kNumDistortionTypes; ++t) {
    const auto type = static_cast<DistortionType>(t);
    double prev = 4.0;
    for (int level = 1; level <= 3; ++level) {
      const double one = pseudo_mos(one_region(type, level), oiq);
      auto two = one_region(type, level);
      two.regions.push_back({{pi, 0.0}, kDefaultRegionRadius});
      CHECK(pseudo_mos(two, oiq) <= one);
      CHECK(one <= prev);
      prev = one;
    }
  }
}

TEST_CASE("spec validation") {
  auto s = one_region(DistortionType::kBrightness, 4);
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s.level = 2;
  CHECK_NOTHROW(validate(s));
  s.regions.push_back({{0.1, 0.0}, kDefaultRegionRadius});
  CHECK_THROWS_AS(validate(s), std::invalid_argument);  // overlapping caps
  s.regions.pop_back();
  s.global = true;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

TEST_CASE("procedural panoramas are bounded and seed dependent") {
  const auto a = procedural_panorama(1, 32);
  const auto b = procedural_panorama(2, 32);
  CHECK(a.width() == 64);
  CHECK_FALSE(a == b);
  CHECK(a.pixels().min_value() >= 0.1f);
  CHECK(a.pixels().max_value() <= 0.9f);
}

}  // TEST_SUITE
