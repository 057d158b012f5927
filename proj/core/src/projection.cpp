#include "mtaoiqa/projection.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mtaoiqa {

namespace {

constexpr double kPi = std::numbers::pi;

using Vec3 = std::array<double, 3>;

Vec3 unit_vector(SphereCoord c) {
  return {std::cos(c.lat) * std::cos(c.lon), std::cos(c.lat) * std::sin(c.lon),
          std::sin(c.lat)};
}

SphereCoord from_vector(const Vec3& v) {
  const double horiz = std::hypot(v[0], v[1]);
  return {wrap_longitude(std::atan2(v[1], v[0])), std::atan2(v[2], horiz)};
}

}  // namespace

double wrap_longitude(double lon) {
  double w = std::fmod(lon + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  w -= kPi;
  // fmod can land exactly on +pi after the shift for inputs a hair below -pi.
  return w >= kPi ? w - 2.0 * kPi : w;
}

double angular_distance(SphereCoord a, SphereCoord b) {
  const Vec3 u = unit_vector(a);
  const Vec3 v = unit_vector(b);
  const Vec3 cross{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                   u[0] * v[1] - u[1] * v[0]};
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return std::atan2(std::sqrt(cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]),
                    dot);
}

GnomonicGrid gnomonic_grid(SphereCoord center, double fov, int size) {
  if (!(fov > 0.0 && fov < kPi)) {
    throw std::invalid_argument("gnomonic_grid: fov must lie in (0, pi)");
  }
  if (size < 2) {
    throw std::invalid_argument("gnomonic_grid: size must be at least 2");
  }
  const double half_extent = std::tan(fov / 2.0);
  const double sl = std::sin(center.lon), cl = std::cos(center.lon);
  const double sp = std::sin(center.lat), cp = std::cos(center.lat);
  // Camera basis: forward toward the center, right pointing east, up toward the north pole.
  const Vec3 forward{cp * cl, cp * sl, sp};
  const Vec3 right{-sl, cl, 0.0};
  const Vec3 up{-sp * cl, -sp * sl, cp};

  std::vector<SphereCoord> coords;
  coords.reserve(static_cast<std::size_t>(size) * size);
  for (int row = 0; row < size; ++row) {
    const double py = (1.0 - 2.0 * (row + 0.5) / size) * half_extent;
    for (int col = 0; col < size; ++col) {
      const double px = (2.0 * (col + 0.5) / size - 1.0) * half_extent;
      if (px == 0.0 && py == 0.0) {
        coords.push_back({wrap_longitude(center.lon), center.lat});
        continue;
      }
      const Vec3 d{forward[0] + px * right[0] + py * up[0],
                   forward[1] + px * right[1] + py * up[1],
                   forward[2] + px * right[2] + py * up[2]};
      coords.push_back(from_vector(d));
    }
  }
  return GnomonicGrid(size, std::move(coords));
}

EquirectPoint to_equirect(SphereCoord dir, int height, int width) {
  return {(dir.lon + kPi) / (2.0 * kPi) * width - 0.5,
          (kPi / 2.0 - dir.lat) / kPi * height - 0.5};
}

SphereCoord pixel_direction(int row, int col, int height, int width) {
  return {wrap_longitude((col + 0.5) / width * 2.0 * kPi - kPi),
          kPi / 2.0 - (row + 0.5) / height * kPi};
}

void sample_bilinear(const RgbImage& img, EquirectPoint p, float out[3]) {
  const int w = img.width();
  const int h = img.height();
  const double y = std::clamp(p.y, 0.0, static_cast<double>(h - 1));
  const double x0f = std::floor(p.x);
  const double y0f = std::floor(y);
  const double fx = p.x - x0f;
  const double fy = y - y0f;
  const int x0 = ((static_cast<int>(x0f) % w) + w) % w;
  const int x1 = (x0 + 1) % w;
  const int y0 = static_cast<int>(y0f);
  const int y1 = std::min(y0 + 1, h - 1);
  for (int c = 0; c < 3; ++c) {
    const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
    const double bottom = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
    out[c] = static_cast<float>((1.0 - fy) * top + fy * bottom);
  }
}

RgbImage render_viewport(const EquirectImage& img, SphereCoord center, double fov, int size) {
  const GnomonicGrid grid = gnomonic_grid(center, fov, size);
  RgbImage out(size, size);
  float px[3];
  for (int row = 0; row < size; ++row) {
    for (int col = 0; col < size; ++col) {
      sample_bilinear(img.pixels(), to_equirect(grid.at(row, col), img.height(), img.width()),
                      px);
      for (int c = 0; c < 3; ++c) out.at(row, col, c) = px[c];
    }
  }
  return out;
}

namespace {

ViewportSequence render_sequence(const EquirectImage& img, const std::vector<SphereCoord>& centers,
                                 double fov, int size, std::string source_id) {
  ViewportSequence seq;
  seq.count = static_cast<int>(centers.size());
  seq.size = size;
  seq.coords = centers;
  seq.source_id = std::move(source_id);
  seq.pixels.resize(static_cast<std::size_t>(seq.count) * 3 * size * size);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int v = 0; v < seq.count; ++v) {
    const RgbImage vp = render_viewport(img, centers[v], fov, size);
    float* base = seq.pixels.data() + static_cast<std::size_t>(v) * 3 * plane;
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        for (int c = 0; c < 3; ++c) {
          base[c * plane + static_cast<std::size_t>(y) * size + x] = vp.at(y, x, c);
        }
      }
    }
  }
  return seq;
}

}  // namespace

ViewportSequence equatorial_sample(const EquirectImage& img, int count, double fov, int size,
                                   std::string source_id) {
  if (count < 1) {
    throw std::invalid_argument("equatorial_sample: viewport count must be >= 1");
  }
  std::vector<SphereCoord> centers;
  centers.reserve(count);
  for (int i = 0; i < count; ++i) {
    centers.push_back({-kPi + 2.0 * kPi * i / count, 0.0});
  }
  return render_sequence(img, centers, fov, size, std::move(source_id));
}

ViewportSequence uniform_sphere_sample(const EquirectImage& img, int count, double fov, int size,
                                       std::string source_id) {
  if (count < 1) {
    throw std::invalid_argument("uniform_sphere_sample: viewport count must be >= 1");
  }
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<SphereCoord> centers;
  centers.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    centers.push_back({wrap_longitude(golden * i), std::asin(z)});
  }
  return render_sequence(img, centers, fov, size, std::move(source_id));
}

namespace {

constexpr char kMagic[5] = {'M', 'T', 'A', 'V', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                              static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("viewport tensor: truncated header");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_viewport_tensor(const ViewportSequence& seq, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, static_cast<std::uint32_t>(seq.count));
  put_u32(os, static_cast<std::uint32_t>(seq.size));
  for (float f : seq.pixels) {
    put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

ViewportSequence read_viewport_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) {
    throw std::runtime_error("viewport tensor: bad magic in " + path.string());
  }
  ViewportSequence seq;
  seq.count = static_cast<int>(get_u32(is));
  seq.size = static_cast<int>(get_u32(is));
  seq.pixels.resize(static_cast<std::size_t>(seq.count) * 3 * seq.size * seq.size);
  for (float& f : seq.pixels) f = std::bit_cast<float>(get_u32(is));
  seq.source_id = path.stem().string();
  return seq;
}

void write_viewport_pngs(const ViewportSequence& seq, const std::filesystem::path& dir,
                         const std::string& stem) {
  std::filesystem::create_directories(dir);
  for (int v = 0; v < seq.count; ++v) {
    RgbImage img(seq.size, seq.size);
    for (int y = 0; y < seq.size; ++y)
      for (int x = 0; x < seq.size; ++x)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = seq.at(v, c, y, x);
    char name[32];
    std::snprintf(name, sizeof(name), "_v%02d.png", v);
    save_png(img, dir / (stem + name));
  }
}

}  // namespace mtaoiqa
