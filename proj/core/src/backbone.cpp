#include "mtaoiqa/backbone.hpp"

#include <stdexcept>
#include <string>

namespace mtaoiqa {

namespace nn = torch::nn;

std::string_view to_string(BackboneProfile p) {
  return p == BackboneProfile::kTiny ? "tiny" : "paper";
}

BackboneProfile backbone_profile_from_string(std::string_view s) {
  if (s == "tiny") return BackboneProfile::kTiny;
  if (s == "paper") return BackboneProfile::kPaper;
  throw std::invalid_argument("unknown backbone profile '" + std::string(s) + "'");
}

void validate(const BackboneConfig& cfg) {
  for (int w : cfg.widths) {
    if (w <= 0) throw std::invalid_argument("backbone widths must be positive");
  }
  if (cfg.widths[1] < cfg.widths[0] || cfg.widths[2] < cfg.widths[1]) {
    throw std::invalid_argument("backbone widths must be non-decreasing across stages 1-3");
  }
}

StridedMixerBackbone::StridedMixerBackbone(const BackboneConfig& cfg) : widths_(cfg.widths) {
  validate(cfg);
  // Stage s merges `kernel` x `kernel` patches; stage 4 keeps the stride-32 resolution.
  constexpr std::array<int, 4> kernel{8, 2, 2, 1};
  int in = 3;
  for (int s = 0; s < 4; ++s) {
    const int c = widths_[s];
    const std::string p = "stage" + std::to_string(s + 1);
    Stage& st = stages_[s];
    st.merge = register_module(p + "_merge",
                               nn::Conv2d(nn::Conv2dOptions(in, c, kernel[s]).stride(kernel[s])));
    st.merge_norm = register_module(p + "_merge_norm", nn::GroupNorm(nn::GroupNormOptions(1, c)));
    st.depthwise = register_module(
        p + "_dw", nn::Conv2d(nn::Conv2dOptions(c, c, 3).padding(1).groups(c)));
    st.mix_norm = register_module(p + "_mix_norm", nn::GroupNorm(nn::GroupNormOptions(1, c)));
    st.expand = register_module(p + "_expand", nn::Conv2d(nn::Conv2dOptions(c, 2 * c, 1)));
    st.project = register_module(p + "_project", nn::Conv2d(nn::Conv2dOptions(2 * c, c, 1)));
    in = c;
  }
}

torch::Tensor StridedMixerBackbone::run_stage(Stage& s, const torch::Tensor& x) {
  auto h = s.merge_norm(s.merge(x));
  auto mixed = s.project(torch::gelu(s.expand(s.mix_norm(s.depthwise(h)))));
  return h + mixed;
}

StageFeatures StridedMixerBackbone::extract(const torch::Tensor& viewports) {
  if (viewports.dim() != 4 || viewports.size(1) != 3) {
    throw std::invalid_argument("backbone expects (N*V) x 3 x S x S input");
  }
  if (viewports.size(2) % 32 != 0 || viewports.size(3) % 32 != 0) {
    throw std::invalid_argument("viewport side must be divisible by 32, got " +
                                std::to_string(viewports.size(2)) + "x" +
                                std::to_string(viewports.size(3)));
  }
  StageFeatures out;
  torch::Tensor x = viewports;
  for (int s = 0; s < 4; ++s) {
    x = run_stage(stages_[s], x);
    out.stages[s] = x;
  }
  return out;
}

std::shared_ptr<FeatureBackbone> make_backbone(const BackboneConfig& cfg) {
  return std::make_shared<StridedMixerBackbone>(cfg);
}

}  // namespace mtaoiqa
