#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string_view>

#include <torch/torch.h>

namespace mtaoiqa {

enum class BackboneProfile { kTiny, kPaper };

std::string_view to_string(BackboneProfile p);
BackboneProfile backbone_profile_from_string(std::string_view s);

struct BackboneConfig {
  BackboneProfile profile = BackboneProfile::kTiny;
  std::array<int, 4> widths{32, 64, 128, 128};

  static BackboneConfig tiny() { return {BackboneProfile::kTiny, {32, 64, 128, 128}}; }
  static BackboneConfig paper() { return {BackboneProfile::kPaper, {256, 512, 1024, 1024}}; }
  static BackboneConfig for_profile(BackboneProfile p) {
    return p == BackboneProfile::kTiny ? tiny() : paper();
  }
};

/// Throws std::invalid_argument unless widths are positive and non-decreasing over stages 1-3.
void validate(const BackboneConfig& cfg);

/// Four stage tensors at strides 8, 16, 32, 32. Each is (N*V) x C_s x h_s x w_s.
struct StageFeatures {
  std::array<torch::Tensor, 4> stages;

  const torch::Tensor& operator[](std::size_t i) const { return stages[i]; }
};

/// Stage contract every backbone must satisfy. A pretrained hierarchical transformer can be
/// plugged in by implementing this interface with matching widths.
class FeatureBackbone : public torch::nn::Module {
 public:
  /// `viewports` is (N*V) x 3 x S x S with S divisible by 32.
  virtual StageFeatures extract(const torch::Tensor& viewports) = 0;
  virtual std::array<int, 4> widths() const = 0;
};

/// Patch-merge stem plus depthwise-separable mixing blocks; no attention.
class StridedMixerBackbone : public FeatureBackbone {
 public:
  explicit StridedMixerBackbone(const BackboneConfig& cfg);

  StageFeatures extract(const torch::Tensor& viewports) override;
  std::array<int, 4> widths() const override { return widths_; }

 private:
  struct Stage {
    torch::nn::Conv2d merge{nullptr};
    torch::nn::GroupNorm merge_norm{nullptr};
    torch::nn::Conv2d depthwise{nullptr};
    torch::nn::GroupNorm mix_norm{nullptr};
    torch::nn::Conv2d expand{nullptr};
    torch::nn::Conv2d project{nullptr};
  };
  torch::Tensor run_stage(Stage& s, const torch::Tensor& x);

  std::array<int, 4> widths_;
  std::array<Stage, 4> stages_;
};

std::shared_ptr<FeatureBackbone> make_backbone(const BackboneConfig& cfg);

}  // namespace mtaoiqa
