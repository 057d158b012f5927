#pragma once

#include <array>
#include <optional>
#include <string>

#include <torch/torch.h>

#include "mtaoiqa/blocks.hpp"
#include "mtaoiqa/mfs.hpp"

namespace mtaoiqa {

/// Which auxiliary tasks are active: distortion range (R), type (T) and degree (D).
struct TaskSet {
  bool range = true;
  bool type = true;
  bool degree = true;

  int count() const { return int{range} + int{type} + int{degree}; }
  bool any() const { return count() > 0; }
  /// "r,t,d" style; "none" when empty.
  std::string to_string() const;
  /// Accepts comma-separated subsets of r,t,d (any order) or "none".
  static TaskSet parse(const std::string& text);
  static TaskSet none() { return {false, false, false}; }
  static TaskSet all() { return {true, true, true}; }

  friend bool operator==(const TaskSet&, const TaskSet&) = default;
};

/// Range head: x' = W(cat(VA(x) * x, x)).
class VdpBlockImpl : public torch::nn::Module {
 public:
  explicit VdpBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor fuse(const torch::Tensor& x, const torch::Tensor& va_gate);

 private:
  ViewportAttention va_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(VdpBlock);

/// Type head: x' = W(cat(TA(x) * x, VA(x) * x)).
class SdmBlockImpl : public torch::nn::Module {
 public:
  explicit SdmBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor fuse(const torch::Tensor& x, const torch::Tensor& ta_gate,
                     const torch::Tensor& va_gate);

 private:
  TypeAttention ta_{nullptr};
  ViewportAttention va_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(SdmBlock);

/// Degree head: x' = W(cat(DA(x), VA(x) * x)). With `multiplicative` the first branch is
/// DA(x) * x instead.
class CdcBlockImpl : public torch::nn::Module {
 public:
  CdcBlockImpl(int channels, bool multiplicative);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor fuse(const torch::Tensor& x, const torch::Tensor& da_gate,
                     const torch::Tensor& va_gate);

 private:
  bool multiplicative_;
  DegreeAttention da_{nullptr};
  ViewportAttention va_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(CdcBlock);

/// GAP, flatten across viewports, hidden FC (GELU), FC to `classes`, softmax.
/// Returns N x classes probabilities.
class ClassifierImpl : public torch::nn::Module {
 public:
  ClassifierImpl(int views, int channels, int classes);
  torch::Tensor forward(const torch::Tensor& x);
  torch::Tensor logits(const torch::Tensor& x);
  /// Zeroes the output layer so every class receives identical logits.
  void zero_output_layer();

 private:
  int views_;
  int channels_;
  torch::nn::Linear hidden_{nullptr};
  torch::nn::Linear output_{nullptr};
};
TORCH_MODULE(Classifier);

struct AuxConfig {
  TaskSet tasks;
  int views = 8;
  int channels = 128;
  int range_repeats = 8;
  int type_repeats = 4;
  int degree_repeats = 4;
  int range_classes = 2;
  int type_classes = 4;
  int degree_classes = 3;
  bool da_multiplicative = false;
};

/// Probability vectors (N x classes) for the active tasks, plus the block-stack outputs
/// that feed each classifier.
struct AuxOutputs {
  std::optional<torch::Tensor> range;
  std::optional<torch::Tensor> type;
  std::optional<torch::Tensor> degree;
  std::optional<torch::Tensor> range_features;
  std::optional<torch::Tensor> type_features;
  std::optional<torch::Tensor> degree_features;

  bool any() const { return range || type || degree; }
};

class AuxHeadsImpl : public torch::nn::Module {
 public:
  explicit AuxHeadsImpl(const AuxConfig& cfg);
  AuxOutputs forward(const std::array<torch::Tensor, kNumTaskSlots>& selections);

  torch::Tensor run_range_stack(torch::Tensor x);
  torch::Tensor run_type_stack(torch::Tensor x);
  torch::Tensor run_degree_stack(torch::Tensor x);

  const AuxConfig& config() const { return cfg_; }

 private:
  AuxConfig cfg_;
  torch::nn::ModuleList range_blocks_{nullptr};
  torch::nn::ModuleList type_blocks_{nullptr};
  torch::nn::ModuleList degree_blocks_{nullptr};
  Classifier range_classifier_{nullptr};
  Classifier type_classifier_{nullptr};
  Classifier degree_classifier_{nullptr};
};
TORCH_MODULE(AuxHeads);

}  // namespace mtaoiqa
