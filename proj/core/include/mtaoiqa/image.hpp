#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mtaoiqa {

/// Interleaved RGB image with channel values stored as float in row-major HWC order.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int height, int width, float fill = 0.0f);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  float min_value() const;
  float max_value() const;

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// Equirectangular panorama: width is exactly twice the height and every value lies in [0, 1].
/// Construction validates both invariants and throws std::invalid_argument on violation.
class EquirectImage {
 public:
  EquirectImage() = default;
  explicit EquirectImage(RgbImage pixels);

  const RgbImage& pixels() const { return pixels_; }
  int height() const { return pixels_.height(); }
  int width() const { return pixels_.width(); }

  friend bool operator==(const EquirectImage&, const EquirectImage&) = default;

 private:
  RgbImage pixels_;
};

// Disk I/O goes through OpenCV; values are 8-bit quantized on write.
RgbImage load_image(const std::filesystem::path& path);
void save_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace mtaoiqa
