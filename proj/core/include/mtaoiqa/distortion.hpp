#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtaoiqa/image.hpp"
#include "mtaoiqa/projection.hpp"

namespace mtaoiqa {

enum class DistortionType { kGaussianNoise, kGaussianBlur, kBrightness, kStitching };

inline constexpr int kNumDistortionTypes = 4;
inline constexpr int kNumDistortionLevels = 3;

/// Two-letter code used in manifests and report strata: GN, GB, BD, ST.
std::string_view to_code(DistortionType type);
DistortionType distortion_type_from_code(std::string_view code);

struct DistortedRegion {
  SphereCoord center;
  double radius = std::numbers::pi / 8.0;
};

struct DistortionSpec {
  DistortionType type = DistortionType::kGaussianNoise;
  int level = 1;  // 1..3
  std::vector<DistortedRegion> regions;
  bool global = false;

  bool is_noop() const { return !global && regions.empty(); }
};

/// Throws std::invalid_argument when level is outside 1..3, a global spec carries regions,
/// more than two regions are given, or two region centers are not separated by more
/// than twice the radius.
void validate(const DistortionSpec& spec);

inline constexpr double kDefaultRegionRadius = std::numbers::pi / 8.0;
inline constexpr double kMaskFalloff = std::numbers::pi / 64.0;

// Per-level parameters.
double noise_sigma(int level);      // 0.05, 0.10, 0.20
double blur_sigma_px(int level);    // 2, 4, 8
double brightness_gain(int level);  // 1.3, 1.6, 2.0
int stitch_shift_px(int level);     // 4, 8, 16

/// Region mask in [0, 1]: 1 inside the cap, raised-cosine falloff of width
/// kMaskFalloff, exactly 0 beyond. Global specs give 1 everywhere.
double region_mask(const DistortionSpec& spec, SphereCoord dir);

/// Applies `spec` to `img`; pixels with zero mask are copied bit-for-bit.
EquirectImage apply_distortion(const EquirectImage& img, const DistortionSpec& spec,
                               std::uint64_t seed);

struct ScoreRange {
  double lo = 1.0;
  double hi = 5.0;
};

inline constexpr double kCoverageReference = 0.25;

/// Solid angle (steradians) covered by the spec's caps; 4*pi for global.
double distorted_solid_angle(const DistortionSpec& spec);

/// Deterministic stand-in for a mean opinion score:
/// hi - (hi - lo) * w_type * (level / 3) * coverage, clamped to [lo, hi].
double pseudo_mos(const DistortionSpec& spec, ScoreRange range);

double type_weight(DistortionType type);

/// Smooth random fields plus geometric patterns, values inside [0.1, 0.9].
EquirectImage procedural_panorama(std::uint64_t seed, int height);

/// `count` procedural bases; base i uses seed * 1000003 + i.
std::vector<EquirectImage> procedural_bases(int count, std::uint64_t seed, int height);

}  // namespace mtaoiqa
