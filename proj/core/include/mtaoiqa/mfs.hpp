#pragma once

#include <array>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "mtaoiqa/backbone.hpp"

namespace mtaoiqa {

/// Task slots in the order S^r, S^t, S^d, S^q.
enum class TaskSlot { kRange = 0, kType = 1, kDegree = 2, kQuality = 3 };
inline constexpr int kNumTaskSlots = 4;
inline constexpr int kNumLevels = 4;
inline constexpr int kNumCombinations = 15;

/// The 15 non-empty subsets of the four fused levels, ordered by size then
/// lexicographically: {0},{1},{2},{3},{0,1},...,{0,1,2,3}.
const std::array<std::vector<int>, kNumCombinations>& level_combinations();

enum class SelectionMode {
  kSoft,  // expectation over combinations, differentiable; used for training
  kHard,  // argmax combination per panorama; used for evaluation
};

/// Per-panorama selection statistics. `level_weights` is N x 4; each entry of
/// `selection` is N x 15; `chosen` holds the argmax index per panorama (int64, N).
struct SelectionState {
  torch::Tensor level_weights;
  std::array<torch::Tensor, kNumTaskSlots> selection;
  std::array<torch::Tensor, kNumTaskSlots> chosen;
};

struct MfsConfig {
  std::array<int, 4> stage_widths{32, 64, 128, 128};
  int channels = 128;
  int views = 8;
  bool enabled = true;  // false: ablation path, every task receives the plain multi-scale sum
};

class MultitaskFeatureSelectionImpl : public torch::nn::Module {
 public:
  explicit MultitaskFeatureSelectionImpl(const MfsConfig& cfg);

  /// Four bias-free 1x1 maps to the common width.
  std::array<torch::Tensor, kNumLevels> unify(const StageFeatures& sf);

  /// Cross-resolution fusion; returns M_1..M_4, all at the stride-8 size.
  std::array<torch::Tensor, kNumLevels> fuse(const std::array<torch::Tensor, kNumLevels>& unified);

  /// Level weights and per-task selection probabilities from the fused levels.
  SelectionState selection_state(const std::array<torch::Tensor, kNumLevels>& levels);

  /// Fused tensor of combination `index` for one panorama's rows (V x C x h x w), with its
  /// 4-vector of level weights.
  torch::Tensor combination_feature(const std::array<torch::Tensor, kNumLevels>& levels,
                                    const torch::Tensor& level_weights, int index);

  /// Task tensors given a selection state. Soft mode mixes all combinations by their
  /// probabilities; hard mode evaluates only the chosen combination of each panorama.
  std::array<torch::Tensor, kNumTaskSlots> select(
      const std::array<torch::Tensor, kNumLevels>& levels, const SelectionState& state,
      SelectionMode mode);

  struct Output {
    std::array<torch::Tensor, kNumTaskSlots> tasks;
    std::optional<SelectionState> state;  // empty when the module is disabled
  };
  Output forward(const StageFeatures& sf, SelectionMode mode);

  const MfsConfig& config() const { return cfg_; }

 private:
  torch::Tensor per_view(const torch::Tensor& per_panorama) const;

  MfsConfig cfg_;
  std::array<torch::nn::Conv2d, kNumLevels> unify_maps_{nullptr, nullptr, nullptr, nullptr};
  std::array<torch::nn::Conv2d, kNumLevels> fusion_maps_{nullptr, nullptr, nullptr, nullptr};
  torch::nn::Conv2d pool_map_{nullptr};
  torch::nn::Linear trunk_{nullptr};
  torch::nn::Linear weight_head_{nullptr};
  std::array<torch::nn::Linear, kNumTaskSlots> selection_heads_{nullptr, nullptr, nullptr,
                                                                nullptr};
  // One reduction map per combination size (1..4 levels -> C channels).
  std::array<torch::nn::Conv2d, kNumLevels> combo_maps_{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(MultitaskFeatureSelection);

}  // namespace mtaoiqa
