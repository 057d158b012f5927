#include "mtaoiqa/losses.hpp"

#include <stdexcept>

namespace mtaoiqa {

namespace {
std::atomic<std::int64_t> g_clamped{0};
constexpr double kMinProbability = 1e-12;
}  // namespace

torch::Tensor loss_main(const torch::Tensor& pred, const torch::Tensor& target) {
  if (pred.numel() == 0) throw std::invalid_argument("loss_main: empty batch");
  if (pred.sizes() != target.sizes()) throw std::invalid_argument("loss_main: shape mismatch");
  return (pred - target).pow(2).mean();
}

torch::Tensor loss_aux(const torch::Tensor& probs, const torch::Tensor& labels) {
  if (probs.dim() != 2 || labels.dim() != 1 || probs.size(0) != labels.size(0)) {
    throw std::invalid_argument("loss_aux: expects N x K probabilities and N labels");
  }
  if (probs.size(0) == 0) throw std::invalid_argument("loss_aux: empty batch");
  const auto valid = labels.ge(0);
  if (labels.max().item<int64_t>() >= probs.size(1)) {
    throw std::invalid_argument("loss_aux: label out of range");
  }
  const auto rows = valid.nonzero().squeeze(1);
  if (rows.numel() == 0) return {};
  const auto picked = probs.index_select(0, rows).gather(1, labels.index_select(0, rows).unsqueeze(1));
  const auto clamped = picked.lt(kMinProbability).sum().item<int64_t>();
  if (clamped > 0) g_clamped += clamped;
  return -picked.clamp_min(kMinProbability).log().mean();
}

std::int64_t aux_clamp_count() { return g_clamped.load(); }

torch::Tensor loss_total(const std::vector<torch::Tensor>& losses, const torch::Tensor& log_sigma) {
  if (static_cast<int64_t>(losses.size()) != log_sigma.size(0)) {
    throw std::invalid_argument("loss_total: one sigma per loss term required");
  }
  torch::Tensor total = torch::zeros({}, log_sigma.options());
  for (std::size_t k = 0; k < losses.size(); ++k) {
    const auto s = log_sigma[static_cast<int64_t>(k)];
    total = total + losses[k] * torch::exp(-2.0 * s) / 2.0 + s;
  }
  return total;
}

UncertaintyWeightsImpl::UncertaintyWeightsImpl(int terms) {
  if (terms < 1) throw std::invalid_argument("UncertaintyWeights needs at least one term");
  log_sigma_ = register_parameter("log_sigma", torch::zeros({terms}));
}

torch::Tensor UncertaintyWeightsImpl::forward(const std::vector<torch::Tensor>& losses) {
  return loss_total(losses, log_sigma_);
}

}  // namespace mtaoiqa
