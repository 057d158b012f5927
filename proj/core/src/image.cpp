#include "mtaoiqa/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace mtaoiqa {

RgbImage::RgbImage(int height, int width, float fill) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("RgbImage: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

float RgbImage::min_value() const {
  return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

float RgbImage::max_value() const {
  return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

EquirectImage::EquirectImage(RgbImage pixels) : pixels_(std::move(pixels)) {
  if (pixels_.empty()) {
    throw std::invalid_argument("EquirectImage: empty image");
  }
  if (pixels_.width() != 2 * pixels_.height()) {
    throw std::invalid_argument("EquirectImage: aspect ratio must be exactly 2:1, got " +
                                std::to_string(pixels_.width()) + "x" +
                                std::to_string(pixels_.height()));
  }
  for (float v : pixels_.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw std::invalid_argument("EquirectImage: channel values must lie in [0, 1]");
    }
  }
}

RgbImage load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw std::runtime_error("cannot read image: " + path.string());
  }
  RgbImage out(bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = static_cast<float>(row[x][2 - c]) / 255.0f;
      }
    }
  }
  return out;
}

void save_png(const RgbImage& image, const std::filesystem::path& path) {
  cv::Mat bgr(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        row[x][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  if (!cv::imwrite(path.string(), bgr)) {
    throw std::runtime_error("cannot write image: " + path.string());
  }
}

}  // namespace mtaoiqa
