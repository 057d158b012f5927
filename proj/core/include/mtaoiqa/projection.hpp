#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "mtaoiqa/image.hpp"

namespace mtaoiqa {

/// Direction on the unit sphere. lon in [-pi, pi), lat in [-pi/2, pi/2].
struct SphereCoord {
  double lon = 0.0;
  double lat = 0.0;
};

/// Wraps any longitude into [-pi, pi).
double wrap_longitude(double lon);

/// Great-circle distance between two directions, in radians.
double angular_distance(SphereCoord a, SphereCoord b);

inline constexpr double kDefaultFov = std::numbers::pi / 2.0;
inline constexpr int kDefaultViewportSize = 224;

/// Per-pixel sphere directions of a rectilinear camera, row-major (size*size entries).
/// Row 0 is the top of the viewport; column 0 is its left edge.
class GnomonicGrid {
 public:
  GnomonicGrid(int size, std::vector<SphereCoord> coords)
      : size_(size), coords_(std::move(coords)) {}

  int size() const { return size_; }
  const SphereCoord& at(int row, int col) const {
    return coords_[static_cast<std::size_t>(row) * size_ + col];
  }
  const std::vector<SphereCoord>& coords() const { return coords_; }

 private:
  int size_;
  std::vector<SphereCoord> coords_;
};

/// Tangent-plane grid centered at `center`. Throws std::invalid_argument unless
/// 0 < fov < pi and size >= 2.
GnomonicGrid gnomonic_grid(SphereCoord center, double fov, int size);

/// Continuous equirectangular pixel coordinates (x along longitude, y along latitude)
/// of a direction, in the convention where pixel centers sit at integer coordinates.
struct EquirectPoint {
  double x = 0.0;
  double y = 0.0;
};
EquirectPoint to_equirect(SphereCoord dir, int height, int width);

/// Direction of the center of equirectangular pixel (row, col).
SphereCoord pixel_direction(int row, int col, int height, int width);

/// Bilinear sample with longitudinal wrap-around and latitude clamping.
void sample_bilinear(const RgbImage& img, EquirectPoint p, float out[3]);

/// Renders a size x size perspective viewport.
RgbImage render_viewport(const EquirectImage& img, SphereCoord center, double fov, int size);

/// V rendered viewports stored as one contiguous V x 3 x S x S float block (CHW per viewport).
struct ViewportSequence {
  int count = 0;
  int size = 0;
  std::vector<float> pixels;
  std::vector<SphereCoord> coords;
  std::string source_id;

  float at(int v, int c, int y, int x) const {
    return pixels[((static_cast<std::size_t>(v) * 3 + c) * size + y) * size + x];
  }
};

/// Equatorial sampling: lat = 0, lon_i = -pi + 2*pi*i/V.
ViewportSequence equatorial_sample(const EquirectImage& img, int count, double fov = kDefaultFov,
                                   int size = kDefaultViewportSize, std::string source_id = {});

/// Viewports centered on a Fibonacci lattice covering the whole sphere; used for
/// generalization studies, never by default.
ViewportSequence uniform_sphere_sample(const EquirectImage& img, int count,
                                       double fov = kDefaultFov,
                                       int size = kDefaultViewportSize,
                                       std::string source_id = {});

// Binary tensor container: "MTAV1" magic, then V and S as little-endian uint32,
// then V*3*S*S little-endian float32 values in row-major order.
void write_viewport_tensor(const ViewportSequence& seq, const std::filesystem::path& path);
ViewportSequence read_viewport_tensor(const std::filesystem::path& path);

/// Writes each viewport as `<stem>_vNN.png` into `dir`.
void write_viewport_pngs(const ViewportSequence& seq, const std::filesystem::path& dir,
                         const std::string& stem);

}  // namespace mtaoiqa
