#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <torch/torch.h>

#include "mtaoiqa/aux_heads.hpp"
#include "mtaoiqa/backbone.hpp"
#include "mtaoiqa/main_head.hpp"
#include "mtaoiqa/mfs.hpp"
#include "mtaoiqa/projection.hpp"

namespace mtaoiqa {

struct ModelConfig {
  BackboneConfig backbone = BackboneConfig::tiny();
  int views = 8;
  int channels = 128;
  int viewport_size = 224;
  double fov = kDefaultFov;
  TaskSet tasks = TaskSet::all();
  int range_classes = 2;
  int type_classes = 4;
  int degree_classes = 3;
  int vdp_repeats = 8;
  int sdm_repeats = 4;
  int cdc_repeats = 4;
  int mdi_repeats = 4;
  bool use_mfs = true;
  bool use_mdi = true;
  bool use_maf = true;
  bool da_multiplicative = false;
  bool project_widths = false;
  std::uint64_t seed = 0;
  bool double_precision = false;
  // Per-channel viewport normalization applied before the backbone. Defaults are the
  // ImageNet statistics; training replaces them with training-set statistics.
  std::array<double, 3> input_mean{0.485, 0.456, 0.406};
  std::array<double, 3> input_std{0.229, 0.224, 0.225};

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

/// Throws std::invalid_argument for inconsistent settings (viewport side not divisible by 32,
/// fusion width mismatch without projection, non-positive sizes).
void validate(const ModelConfig& cfg);

struct ModelOutput {
  torch::Tensor score;  // N
  AuxOutputs aux;
  std::optional<SelectionState> selection;
  StageFeatures stages;
  std::array<torch::Tensor, kNumTaskSlots> selections;
  MainOutput main;
};

/// Backbone, multitask feature selection, optional auxiliary heads and the main quality head.
class MtaoiqaNetImpl : public torch::nn::Module {
 public:
  explicit MtaoiqaNetImpl(const ModelConfig& cfg);

  /// `viewports` is N x V x 3 x S x S.
  ModelOutput forward(const torch::Tensor& viewports, SelectionMode mode);
  /// Uses soft selection in training mode and hard selection in evaluation mode.
  ModelOutput forward(const torch::Tensor& viewports) {
    return forward(viewports, is_training() ? SelectionMode::kSoft : SelectionMode::kHard);
  }

  const ModelConfig& config() const { return cfg_; }
  FeatureBackbone& backbone() { return *backbone_; }
  MultitaskFeatureSelection& mfs() { return mfs_; }
  AuxHeads& aux_heads() { return aux_; }
  MainHead& main_head() { return main_; }

  torch::Dtype dtype() const {
    return cfg_.double_precision ? torch::kFloat64 : torch::kFloat32;
  }

 private:
  ModelConfig cfg_;
  std::shared_ptr<FeatureBackbone> backbone_;
  MultitaskFeatureSelection mfs_{nullptr};
  AuxHeads aux_{nullptr};
  MainHead main_{nullptr};
};
TORCH_MODULE(MtaoiqaNet);

/// Builds the network with parameters drawn from cfg.seed.
MtaoiqaNet build_model(const ModelConfig& cfg);

/// Total scalar parameters whose registered name starts with `prefix` (all when empty).
int64_t count_parameters(const torch::nn::Module& module, const std::string& prefix = {});

/// Parameters belonging to auxiliary heads or the fusion path.
int64_t count_auxiliary_parameters(const torch::nn::Module& module);

/// Converts one viewport sequence into a V x 3 x S x S tensor.
torch::Tensor to_tensor(const ViewportSequence& seq);

// A checkpoint directory holds model_config.json and model.pt (parameters keyed by module path).
void save_checkpoint(MtaoiqaNet& net, const std::filesystem::path& dir);
MtaoiqaNet load_checkpoint(const std::filesystem::path& dir);

}  // namespace mtaoiqa
