#include "mtaoiqa/blocks.hpp"

#include <cmath>

namespace mtaoiqa {

namespace nn = torch::nn;

namespace {

nn::Conv2d biased_conv(int in, int out, int kernel, int dilation = 1) {
  const int pad = dilation * (kernel - 1) / 2;
  nn::Conv2d conv(nn::Conv2dOptions(in, out, kernel).dilation(dilation).padding(pad));
  torch::NoGradGuard guard;
  conv->bias.zero_();
  return conv;
}

}  // namespace

nn::Conv2d pointwise(int in_channels, int out_channels) {
  nn::Conv2d conv(nn::Conv2dOptions(in_channels, out_channels, 1).bias(false));
  torch::NoGradGuard guard;
  conv->weight.normal_(0.0, 1.0 / std::sqrt(static_cast<double>(in_channels)));
  return conv;
}

torch::Tensor spatial_gap(const torch::Tensor& x) { return x.mean({2, 3}, /*keepdim=*/true); }

ViewportAttentionImpl::ViewportAttentionImpl(int channels)
    : reduce_(register_module("reduce", biased_conv(channels, channels / 2, 1))),
      gate_(register_module("gate", biased_conv(channels / 2, 1, 1))) {}

torch::Tensor ViewportAttentionImpl::forward(const torch::Tensor& x) {
  return torch::sigmoid(gate_(torch::gelu(reduce_(spatial_gap(x)))));
}

TypeAttentionImpl::TypeAttentionImpl(int channels)
    : squeeze_(register_module("squeeze", biased_conv(channels, 1, 1))),
      dilated3_(register_module("dac3x3_r3", biased_conv(1, 1, 3, 3))),
      dilated5_(register_module("dac5x5_r5", biased_conv(1, 1, 5, 5))),
      dilated1_(register_module("dac3x3_r1", biased_conv(1, 1, 3, 1))),
      fuse_(register_module("fuse", biased_conv(3, 1, 1))) {}

torch::Tensor TypeAttentionImpl::forward(const torch::Tensor& x) {
  const auto s = squeeze_(x);
  return torch::sigmoid(fuse_(torch::cat({dilated3_(s), dilated5_(s), dilated1_(s)}, 1)));
}

DegreeAttentionImpl::DegreeAttentionImpl(int channels)
    : reduce_(register_module("reduce", biased_conv(channels, channels / 2, 1))),
      expand_(register_module("expand", biased_conv(channels / 2, channels, 1))) {}

torch::Tensor DegreeAttentionImpl::forward(const torch::Tensor& x) {
  return torch::sigmoid(expand_(torch::gelu(reduce_(x))));
}

}  // namespace mtaoiqa
