#pragma once

#include <array>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "mtaoiqa/aux_heads.hpp"
#include "mtaoiqa/blocks.hpp"

namespace mtaoiqa {

/// Quality features: x' = W(cat(VA(x) * x, TA(x) * x, DA(x))).
class MdiBlockImpl : public torch::nn::Module {
 public:
  MdiBlockImpl(int channels, bool da_multiplicative);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor fuse(const torch::Tensor& x, const torch::Tensor& va_gate,
                     const torch::Tensor& ta_gate, const torch::Tensor& da_gate);

 private:
  bool da_multiplicative_;
  ViewportAttention va_{nullptr};
  TypeAttention ta_{nullptr};
  DegreeAttention da_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(MdiBlock);

/// Single-head cross attention with key and value sharing one projection:
/// softmax((X1 Wq)(X2 Wk)^T / sqrt(d2)) (X2 Wk). Inputs are N x L x d.
class CrossAttentionImpl : public torch::nn::Module {
 public:
  explicit CrossAttentionImpl(int dim);

  struct Output {
    torch::Tensor values;   // N x L1 x d
    torch::Tensor weights;  // N x L1 x L2, rows sum to 1
  };
  Output attend(const torch::Tensor& query_source, const torch::Tensor& key_source);
  torch::Tensor forward(const torch::Tensor& query_source, const torch::Tensor& key_source) {
    return attend(query_source, key_source).values;
  }

  const torch::Tensor& key_weight() const { return key_->weight; }

 private:
  int dim_;
  torch::nn::Linear query_{nullptr};
  torch::nn::Linear key_{nullptr};
};
TORCH_MODULE(CrossAttention);

struct MainHeadConfig {
  TaskSet tasks;
  int views = 8;
  int channels = 128;
  int mdi_repeats = 4;
  int range_classes = 2;
  int type_classes = 4;
  int degree_classes = 3;
  bool use_mdi = true;
  bool use_maf = true;
  bool da_multiplicative = false;
  // Allow V*C/8 != C by inserting a learned projection in front of the fusion.
  bool project_widths = false;
};

struct MainOutput {
  torch::Tensor score;                 // N
  torch::Tensor quality_features;      // Q, (N*V) x C x h x w
  torch::Tensor embedding;             // F, N x (V*C/8)
  std::optional<torch::Tensor> semantics;    // C_sem, N x C
  std::optional<torch::Tensor> interaction;  // I, N x C
  std::vector<torch::Tensor> attention_weights;
};

class MainHeadImpl : public torch::nn::Module {
 public:
  explicit MainHeadImpl(const MainHeadConfig& cfg);

  MainOutput forward(const torch::Tensor& quality_selection, const AuxOutputs& aux);

  torch::Tensor run_mdi_stack(torch::Tensor x);
  /// GAP, flatten, bias-free FC to V*C/8.
  torch::Tensor embed_main(const torch::Tensor& q);
  /// Cross-semantic feature from the active probability vectors. Throws std::logic_error
  /// when no auxiliary task is active.
  torch::Tensor embed_semantics(const AuxOutputs& aux);
  struct FusionOutput {
    torch::Tensor score;
    torch::Tensor interaction;
    torch::Tensor concatenated;  // I-bar, N x 3C
    std::vector<torch::Tensor> attention_weights;
  };
  FusionOutput maf_fuse(const torch::Tensor& embedding, const torch::Tensor& semantics);
  torch::Tensor predict_no_aux(const torch::Tensor& embedding);

  /// True when the cross-attention fusion path is built (aux tasks active and MAF enabled).
  bool fusion_active() const { return fusion_active_; }
  const MainHeadConfig& config() const { return cfg_; }
  CrossAttention cross_attention(int i) const { return cross_[i]; }
  /// The linear layer producing the scalar score (fusion or direct path).
  torch::nn::Linear score_layer() const { return fusion_active_ ? score_ : direct_; }

 private:
  MainHeadConfig cfg_;
  bool fusion_active_;
  int embed_width_;
  torch::nn::ModuleList mdi_blocks_{nullptr};
  torch::nn::Linear embed_{nullptr};
  torch::nn::Linear width_projection_{nullptr};
  torch::nn::Linear range_semantic_{nullptr};
  torch::nn::Linear type_semantic_{nullptr};
  torch::nn::Linear degree_semantic_{nullptr};
  torch::nn::Linear semantic_fuse_{nullptr};
  std::array<CrossAttention, 3> cross_{nullptr, nullptr, nullptr};
  torch::nn::Linear interact_{nullptr};
  torch::nn::Linear score_{nullptr};
  torch::nn::Linear direct_{nullptr};
};
TORCH_MODULE(MainHead);

}  // namespace mtaoiqa
