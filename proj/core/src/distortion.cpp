#include "mtaoiqa/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mtaoiqa {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string_view to_code(DistortionType type) {
  switch (type) {
    case DistortionType::kGaussianNoise: return "GN";
    case DistortionType::kGaussianBlur: return "GB";
    case DistortionType::kBrightness: return "BD";
    case DistortionType::kStitching: return "ST";
  }
  return "??";
}

DistortionType distortion_type_from_code(std::string_view code) {
  if (code == "GN") return DistortionType::kGaussianNoise;
  if (code == "GB") return DistortionType::kGaussianBlur;
  if (code == "BD") return DistortionType::kBrightness;
  if (code == "ST") return DistortionType::kStitching;
  throw std::invalid_argument("unknown distortion type code: " + std::string(code));
}

void validate(const DistortionSpec& spec) {
  if (spec.level < 1 || spec.level > kNumDistortionLevels) {
    throw std::invalid_argument("distortion level must be 1, 2 or 3");
  }
  if (spec.global && !spec.regions.empty()) {
    throw std::invalid_argument("global distortion cannot also list regions");
  }
  if (spec.regions.size() > 2) {
    throw std::invalid_argument("at most two distorted regions are supported");
  }
  for (const auto& r : spec.regions) {
    if (!(r.radius > 0.0 && r.radius < kPi / 2.0)) {
      throw std::invalid_argument("region radius must lie in (0, pi/2)");
    }
  }
  if (spec.regions.size() == 2) {
    const auto& a = spec.regions[0];
    const auto& b = spec.regions[1];
    if (angular_distance(a.center, b.center) <= a.radius + b.radius) {
      throw std::invalid_argument("distorted regions overlap");
    }
  }
}

double noise_sigma(int level) {
  static constexpr double kSigma[] = {0.05, 0.10, 0.20};
  return kSigma[level - 1];
}

double blur_sigma_px(int level) {
  static constexpr double kSigma[] = {2.0, 4.0, 8.0};
  return kSigma[level - 1];
}

double brightness_gain(int level) {
  static constexpr double kGain[] = {1.3, 1.6, 2.0};
  return kGain[level - 1];
}

int stitch_shift_px(int level) {
  static constexpr int kShift[] = {4, 8, 16};
  return kShift[level - 1];
}

namespace {

double cap_mask(const DistortedRegion& region, SphereCoord dir) {
  const double d = angular_distance(region.center, dir);
  if (d <= region.radius) return 1.0;
  if (d >= region.radius + kMaskFalloff) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * (d - region.radius) / kMaskFalloff));
}

// Index of the region with the strongest mask at `dir`, and that mask value.
std::pair<int, double> strongest_region(const DistortionSpec& spec, SphereCoord dir) {
  int best = -1;
  double value = 0.0;
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    const double m = cap_mask(spec.regions[i], dir);
    if (m > value) {
      value = m;
      best = static_cast<int>(i);
    }
  }
  return {best, value};
}

RgbImage gaussian_blur(const RgbImage& src, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int h = src.height();
  const int w = src.width();
  RgbImage horiz(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = ((x + i) % w + w) % w;
          acc += kernel[i + radius] * src.at(y, xx, c);
        }
        horiz.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  RgbImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * horiz.at(yy, x, c);
        }
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace

double region_mask(const DistortionSpec& spec, SphereCoord dir) {
  if (spec.global) return 1.0;
  return strongest_region(spec, dir).second;
}

EquirectImage apply_distortion(const EquirectImage& img, const DistortionSpec& spec,
                               std::uint64_t seed) {
  validate(spec);
  if (spec.is_noop()) return img;

  const RgbImage& src = img.pixels();
  const int h = src.height();
  const int w = src.width();
  RgbImage out = src;

  RgbImage blurred;
  if (spec.type == DistortionType::kGaussianBlur) {
    blurred = gaussian_blur(src, blur_sigma_px(spec.level));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = noise_sigma(spec.level);
  const double gain = brightness_gain(spec.level);
  const int shift = stitch_shift_px(spec.level);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Noise is drawn for every pixel in raster order so the stream never depends on masks.
      double noise[3] = {0.0, 0.0, 0.0};
      if (spec.type == DistortionType::kGaussianNoise) {
        for (double& n : noise) n = sigma * normal(rng);
      }
      const SphereCoord dir = pixel_direction(y, x, h, w);
      int region = -1;
      double mask = 1.0;
      if (!spec.global) {
        std::tie(region, mask) = strongest_region(spec, dir);
      }
      if (mask <= 0.0) continue;

      for (int c = 0; c < 3; ++c) {
        const double orig = src.at(y, x, c);
        double distorted = orig;
        switch (spec.type) {
          case DistortionType::kGaussianNoise: distorted = orig + noise[c]; break;
          case DistortionType::kGaussianBlur: distorted = blurred.at(y, x, c); break;
          case DistortionType::kBrightness: distorted = orig * gain; break;
          case DistortionType::kStitching: {
            const double seam_lat = spec.global ? 0.0 : spec.regions[region].center.lat;
            if (dir.lat > seam_lat) {
              distorted = src.at(y, ((x - shift) % w + w) % w, c);
            }
            break;
          }
        }
        distorted = std::clamp(distorted, 0.0, 1.0);
        out.at(y, x, c) = static_cast<float>(std::clamp(orig + mask * (distorted - orig), 0.0, 1.0));
      }
    }
  }
  return EquirectImage(std::move(out));
}

double distorted_solid_angle(const DistortionSpec& spec) {
  if (spec.global) return 4.0 * kPi;
  double total = 0.0;
  for (const auto& r : spec.regions) total += 2.0 * kPi * (1.0 - std::cos(r.radius));
  return total;
}

double type_weight(DistortionType type) {
  switch (type) {
    case DistortionType::kGaussianNoise: return 1.0;
    case DistortionType::kGaussianBlur: return 0.9;
    case DistortionType::kBrightness: return 0.7;
    case DistortionType::kStitching: return 0.8;
  }
  return 1.0;
}

double pseudo_mos(const DistortionSpec& spec, ScoreRange range) {
  validate(spec);
  if (spec.is_noop()) return range.hi;
  const double coverage =
      spec.global ? 1.0
                  : std::min(1.0, distorted_solid_angle(spec) / (4.0 * kPi * kCoverageReference));
  const double q = range.hi - (range.hi - range.lo) * type_weight(spec.type) *
                                  (static_cast<double>(spec.level) / 3.0) * coverage;
  return std::clamp(q, range.lo, range.hi);
}

EquirectImage procedural_panorama(std::uint64_t seed, int height) {
  if (height < 2) throw std::invalid_argument("procedural_panorama: height must be >= 2");
  const int width = 2 * height;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Wave {
    int k_lon;
    double k_lat, phase_lon, phase_lat, amp;
  };
  std::vector<Wave> waves[3];
  for (auto& ch : waves) {
    for (int i = 0; i < 6; ++i) {
      ch.push_back({1 + static_cast<int>(unit(rng) * 5.0), 1.0 + unit(rng) * 4.0,
                    unit(rng) * 2.0 * kPi, unit(rng) * 2.0 * kPi, 0.3 + 0.7 * unit(rng)});
    }
  }
  struct Disk {
    SphereCoord center;
    double radius;
    double color[3];
  };
  std::vector<Disk> disks;
  const int n_disks = 3 + static_cast<int>(unit(rng) * 4.0);
  for (int i = 0; i < n_disks; ++i) {
    Disk d{{-kPi + 2.0 * kPi * unit(rng), (unit(rng) - 0.5) * kPi * 0.6},
           0.15 + 0.3 * unit(rng),
           {unit(rng), unit(rng), unit(rng)}};
    disks.push_back(d);
  }
  const int checker_period = 4 + static_cast<int>(unit(rng) * 5.0);
  const double checker_amp = 0.06 + 0.06 * unit(rng);
  const int stripe_freq = 6 + static_cast<int>(unit(rng) * 10.0);

  RgbImage out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const SphereCoord dir = pixel_direction(y, x, height, width);
      const double checker =
          (((x / checker_period) + (y / checker_period)) % 2 == 0) ? checker_amp : -checker_amp;
      const double stripes = 0.05 * std::sin(stripe_freq * (dir.lon + 2.0 * dir.lat));
      for (int c = 0; c < 3; ++c) {
        double field = 0.0;
        double norm = 0.0;
        for (const Wave& wv : waves[c]) {
          field += wv.amp * std::cos(wv.k_lon * dir.lon + wv.phase_lon) *
                   std::cos(wv.k_lat * dir.lat + wv.phase_lat);
          norm += wv.amp;
        }
        double v = 0.5 + 0.3 * field / norm;
        for (const Disk& d : disks) {
          if (angular_distance(d.center, dir) < d.radius) {
            v = 0.5 * v + 0.5 * (0.2 + 0.6 * d.color[c]);
          }
        }
        v += checker + stripes;
        out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.1, 0.9));
      }
    }
  }
  return EquirectImage(std::move(out));
}

std::vector<EquirectImage> procedural_bases(int count, std::uint64_t seed, int height) {
  std::vector<EquirectImage> bases;
  bases.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) bases.push_back(procedural_panorama(seed * 1000003ULL + i, height));
  return bases;
}

}  // namespace mtaoiqa
