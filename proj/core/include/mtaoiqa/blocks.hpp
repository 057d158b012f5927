#pragma once

#include <torch/torch.h>

namespace mtaoiqa {

// Gating primitives shared by every head. Inputs are (N*V) x C x h x w; each viewport is
// processed independently, so all three are equivariant under viewport permutation.
// Biases start at zero.

/// Viewport attention: spatial GAP, 1x1 C -> C/2, GELU, 1x1 C/2 -> 1, sigmoid.
/// Output (N*V) x 1 x 1 x 1.
class ViewportAttentionImpl : public torch::nn::Module {
 public:
  explicit ViewportAttentionImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d reduce_{nullptr};
  torch::nn::Conv2d gate_{nullptr};
};
TORCH_MODULE(ViewportAttention);

/// Type (spatial) attention: 1x1 C -> 1, three parallel dilated convolutions
/// (3x3 rate 3, 5x5 rate 5, 3x3 rate 1) with same-size zero padding, concat, 1x1 3 -> 1, sigmoid.
/// Output (N*V) x 1 x h x w.
class TypeAttentionImpl : public torch::nn::Module {
 public:
  explicit TypeAttentionImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

  /// Largest offset any output pixel reads from; pixels at least this far from the
  /// border never see padding.
  static constexpr int kReceptiveRadius = 10;

 private:
  torch::nn::Conv2d squeeze_{nullptr};
  torch::nn::Conv2d dilated3_{nullptr};
  torch::nn::Conv2d dilated5_{nullptr};
  torch::nn::Conv2d dilated1_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(TypeAttention);

/// Degree (channel) attention: 1x1 C -> C/2, GELU, 1x1 C/2 -> C, sigmoid. Full resolution.
class DegreeAttentionImpl : public torch::nn::Module {
 public:
  explicit DegreeAttentionImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d reduce_{nullptr};
  torch::nn::Conv2d expand_{nullptr};
};
TORCH_MODULE(DegreeAttention);

/// Bias-free 1x1 convolution, the channel-reduction map used after every concatenation.
/// Weights are N(0, 1/in_channels) so a unit-variance input keeps unit variance.
torch::nn::Conv2d pointwise(int in_channels, int out_channels);

/// Mean over the spatial axes, keeping a 4-D shape.
torch::Tensor spatial_gap(const torch::Tensor& x);

}  // namespace mtaoiqa
