#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "mtaoiqa/image.hpp"
#include "mtaoiqa/projection.hpp"

namespace mtaoiqa::testing {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("mtaoiqa_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
          m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

/// Gnomonic pixel direction built from rotation matrices: the tangent-plane ray
/// (1, px, py) in a frame looking down +x is tilted by Ry(-lat), then turned by Rz(lon).
inline SphereCoord rotation_oracle(SphereCoord center, double fov, int size, int row, int col) {
  const double t = std::tan(fov / 2.0);
  const double px = (2.0 * (col + 0.5) / size - 1.0) * t;
  const double py = (1.0 - 2.0 * (row + 0.5) / size) * t;
  const double a = -center.lat;
  const Mat3 ry{{{std::cos(a), 0.0, std::sin(a)}, {0.0, 1.0, 0.0}, {-std::sin(a), 0.0, std::cos(a)}}};
  const double b = center.lon;
  const Mat3 rz{{{std::cos(b), -std::sin(b), 0.0}, {std::sin(b), std::cos(b), 0.0}, {0.0, 0.0, 1.0}}};
  const Vec3 v = mat_vec(rz, mat_vec(ry, {1.0, px, py}));
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {std::atan2(v[1], v[0]), std::asin(v[2] / norm)};
}

/// Panorama whose channels are affine in latitude plus a single cosine in longitude, so
/// bilinear interpolation along rows is exact up to the cosine's curvature.
inline EquirectImage smooth_panorama(int height) {
  const int width = 2 * height;
  RgbImage img(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto d = pixel_direction(y, x, height, width);
      img.at(y, x, 0) = static_cast<float>(0.5 + 0.3 * d.lat / M_PI);
      img.at(y, x, 1) = static_cast<float>(0.5 + 0.1 * std::cos(d.lon));
      img.at(y, x, 2) = static_cast<float>(0.4 + 0.2 * d.lat / M_PI + 0.1 * std::cos(d.lon));
    }
  }
  return EquirectImage(std::move(img));
}

inline EquirectImage constant_panorama(int height, float r, float g, float b) {
  RgbImage img(height, 2 * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < 2 * height; ++x) {
      img.at(y, x, 0) = r;
      img.at(y, x, 1) = g;
      img.at(y, x, 2) = b;
    }
  }
  return EquirectImage(std::move(img));
}

}  // namespace mtaoiqa::testing
