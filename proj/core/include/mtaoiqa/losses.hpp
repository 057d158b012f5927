#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace mtaoiqa {

/// Mean squared error over the batch. Throws std::invalid_argument for empty or
/// mismatched inputs.
torch::Tensor loss_main(const torch::Tensor& pred, const torch::Tensor& target);

/// Cross entropy -log(probs[label]) averaged over rows whose label is >= 0. `probs` is
/// N x K, `labels` is an int64 tensor of N. Probabilities below 1e-12 are clamped and
/// counted in aux_clamp_count(). Returns an undefined tensor when no row has a label.
torch::Tensor loss_aux(const torch::Tensor& probs, const torch::Tensor& labels);

/// Number of probabilities clamped by loss_aux since process start.
std::int64_t aux_clamp_count();

/// One trainable log-sigma per loss term.
class UncertaintyWeightsImpl : public torch::nn::Module {
 public:
  explicit UncertaintyWeightsImpl(int terms);

  /// sum_k L_k / (2 sigma_k^2) + ln sigma_k with sigma_k = exp(log_sigma_k).
  torch::Tensor forward(const std::vector<torch::Tensor>& losses);

  torch::Tensor sigmas() const { return log_sigma_.exp(); }
  torch::Tensor& log_sigma() { return log_sigma_; }
  int terms() const { return static_cast<int>(log_sigma_.size(0)); }

 private:
  torch::Tensor log_sigma_;
};
TORCH_MODULE(UncertaintyWeights);

/// Free-function form of the weighted total; `log_sigma` holds one entry per loss.
torch::Tensor loss_total(const std::vector<torch::Tensor>& losses, const torch::Tensor& log_sigma);

}  // namespace mtaoiqa
