#include "mtaoiqa/main_head.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mtaoiqa {

namespace nn = torch::nn;

MdiBlockImpl::MdiBlockImpl(int channels, bool da_multiplicative)
    : da_multiplicative_(da_multiplicative),
      va_(register_module("va", ViewportAttention(channels))),
      ta_(register_module("ta", TypeAttention(channels))),
      da_(register_module("da", DegreeAttention(channels))),
      fuse_(register_module("fuse", pointwise(3 * channels, channels))) {}

torch::Tensor MdiBlockImpl::fuse(const torch::Tensor& x, const torch::Tensor& va_gate,
                                 const torch::Tensor& ta_gate, const torch::Tensor& da_gate) {
  const auto degree_branch = da_multiplicative_ ? da_gate * x : da_gate;
  return fuse_(torch::cat({va_gate * x, ta_gate * x, degree_branch}, 1));
}

torch::Tensor MdiBlockImpl::forward(const torch::Tensor& x) {
  return fuse(x, va_(x), ta_(x), da_(x));
}

CrossAttentionImpl::CrossAttentionImpl(int dim)
    : dim_(dim),
      query_(register_module("w_q", nn::Linear(nn::LinearOptions(dim, dim).bias(false)))),
      key_(register_module("w_k", nn::Linear(nn::LinearOptions(dim, dim).bias(false)))) {}

CrossAttentionImpl::Output CrossAttentionImpl::attend(const torch::Tensor& query_source,
                                                      const torch::Tensor& key_source) {
  const auto q = query_(query_source);
  const auto kv = key_(key_source);
  const auto scores = torch::matmul(q, kv.transpose(1, 2)) / std::sqrt(static_cast<double>(dim_));
  const auto weights = torch::softmax(scores, -1);
  return {torch::matmul(weights, kv), weights};
}

MainHeadImpl::MainHeadImpl(const MainHeadConfig& cfg)
    : cfg_(cfg), fusion_active_(cfg.use_maf && cfg.tasks.any()) {
  const int c = cfg.channels;
  embed_width_ = cfg.views * c / 8;
  if (embed_width_ < 1) throw std::invalid_argument("V*C/8 must be at least 1");
  if (cfg.use_mdi) {
    if (cfg.mdi_repeats < 1) throw std::invalid_argument("MDI repeats must be >= 1");
    mdi_blocks_ = register_module("mdi", nn::ModuleList());
    for (int i = 0; i < cfg.mdi_repeats; ++i) {
      mdi_blocks_->push_back(MdiBlock(c, cfg.da_multiplicative));
    }
  }
  embed_ = register_module("embed",
                           nn::Linear(nn::LinearOptions(cfg.views * c, embed_width_).bias(false)));
  if (!fusion_active_) {
    direct_ = register_module("direct_score", nn::Linear(embed_width_, 1));
    return;
  }
  if (embed_width_ != c) {
    if (!cfg.project_widths) {
      throw std::invalid_argument(
          "fusion needs V*C/8 == C (got V=" + std::to_string(cfg.views) +
          ", C=" + std::to_string(c) + "); set project_widths to insert a projection");
    }
    width_projection_ = register_module(
        "width_projection", nn::Linear(nn::LinearOptions(embed_width_, c).bias(false)));
  }
  if (cfg.tasks.range) range_semantic_ = register_module("semantic_range", nn::Linear(cfg.range_classes, c));
  if (cfg.tasks.type) type_semantic_ = register_module("semantic_type", nn::Linear(cfg.type_classes, c));
  if (cfg.tasks.degree) degree_semantic_ = register_module("semantic_degree", nn::Linear(cfg.degree_classes, c));
  semantic_fuse_ = register_module("semantic_fuse", nn::Linear(cfg.tasks.count() * c, c));
  for (int i = 0; i < 3; ++i) {
    cross_[i] = register_module("maf_ca" + std::to_string(i + 1), CrossAttention(c));
  }
  interact_ = register_module("maf_interact", nn::Linear(3 * c, c));
  score_ = register_module("maf_score", nn::Linear(c, 1));
}

torch::Tensor MainHeadImpl::run_mdi_stack(torch::Tensor x) {
  if (!cfg_.use_mdi) return x;
  for (const auto& block : *mdi_blocks_) x = block->as<MdiBlock>()->forward(x);
  return x;
}

torch::Tensor MainHeadImpl::embed_main(const torch::Tensor& q) {
  const int64_t n = q.size(0) / cfg_.views;
  return embed_(spatial_gap(q).reshape({n, static_cast<int64_t>(cfg_.views) * cfg_.channels}));
}

torch::Tensor MainHeadImpl::embed_semantics(const AuxOutputs& aux) {
  if (!fusion_active_) {
    throw std::logic_error("embed_semantics: no auxiliary task feeds the fusion module");
  }
  std::vector<torch::Tensor> parts;
  if (cfg_.tasks.range) parts.push_back(range_semantic_(aux.range.value()));
  if (cfg_.tasks.type) parts.push_back(type_semantic_(aux.type.value()));
  if (cfg_.tasks.degree) parts.push_back(degree_semantic_(aux.degree.value()));
  return semantic_fuse_(torch::cat(parts, 1));
}

MainHeadImpl::FusionOutput MainHeadImpl::maf_fuse(const torch::Tensor& embedding,
                                                  const torch::Tensor& semantics) {
  auto f = width_projection_ ? width_projection_(embedding) : embedding;
  // One token per panorama: N x 1 x C.
  const auto f_tok = f.unsqueeze(1);
  const auto c_tok = semantics.unsqueeze(1);
  const auto a = cross_[0]->attend(c_tok, f_tok);
  const auto b = cross_[1]->attend(f_tok, c_tok);
  const auto s = cross_[2]->attend(c_tok, c_tok);
  FusionOutput out;
  out.concatenated = torch::cat({a.values, b.values, s.values}, 2).squeeze(1);
  out.interaction = torch::gelu(interact_(out.concatenated));
  out.score = score_(out.interaction).squeeze(1);
  out.attention_weights = {a.weights, b.weights, s.weights};
  return out;
}

torch::Tensor MainHeadImpl::predict_no_aux(const torch::Tensor& embedding) {
  if (!direct_) throw std::logic_error("predict_no_aux: head was built with the fusion path");
  return direct_(embedding).squeeze(1);
}

MainOutput MainHeadImpl::forward(const torch::Tensor& quality_selection, const AuxOutputs& aux) {
  MainOutput out;
  out.quality_features = run_mdi_stack(quality_selection);
  out.embedding = embed_main(out.quality_features);
  if (!fusion_active_) {
    out.score = predict_no_aux(out.embedding);
    return out;
  }
  out.semantics = embed_semantics(aux);
  auto fused = maf_fuse(out.embedding, *out.semantics);
  out.score = fused.score;
  out.interaction = fused.interaction;
  out.attention_weights = std::move(fused.attention_weights);
  return out;
}

}  // namespace mtaoiqa
