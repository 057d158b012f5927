#include "mtaoiqa/mfs.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include "mtaoiqa/blocks.hpp"

namespace mtaoiqa {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

const std::array<std::vector<int>, kNumCombinations>& level_combinations() {
  static const std::array<std::vector<int>, kNumCombinations> combos = [] {
    std::array<std::vector<int>, kNumCombinations> out;
    int k = 0;
    for (int size = 1; size <= kNumLevels; ++size) {
      for (int mask = 1; mask < (1 << kNumLevels); ++mask) {
        if (__builtin_popcount(mask) != size) continue;
        std::vector<int> members;
        for (int m = 0; m < kNumLevels; ++m) {
          if (mask & (1 << m)) members.push_back(m);
        }
        out[k++] = std::move(members);
      }
    }
    // Masks iterate low bit first, which is not lexicographic for size 2 and 3 subsets.
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return out;
  }();
  return combos;
}

namespace {

torch::Tensor resize_to(const torch::Tensor& x, const torch::Tensor& like) {
  if (x.size(2) == like.size(2) && x.size(3) == like.size(3)) return x;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{like.size(2), like.size(3)})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

}  // namespace

MultitaskFeatureSelectionImpl::MultitaskFeatureSelectionImpl(const MfsConfig& cfg) : cfg_(cfg) {
  const int c = cfg.channels;
  for (int m = 0; m < kNumLevels; ++m) {
    unify_maps_[m] =
        register_module("unify" + std::to_string(m + 1), pointwise(cfg.stage_widths[m], c));
  }
  if (!cfg.enabled) return;
  for (int m = 0; m < kNumLevels; ++m) {
    fusion_maps_[m] = register_module("fusion" + std::to_string(m + 1), pointwise(2 * c, c));
    combo_maps_[m] = register_module("combo_size" + std::to_string(m + 1), pointwise((m + 1) * c, c));
  }
  pool_map_ = register_module("pool_map", pointwise(4 * c, c));
  trunk_ = register_module("trunk", nn::Linear(cfg.views * c, c));
  weight_head_ = register_module("level_weight_head", nn::Linear(c, kNumLevels));
  static constexpr const char* kTaskNames[] = {"range", "type", "degree", "quality"};
  for (int t = 0; t < kNumTaskSlots; ++t) {
    selection_heads_[t] = register_module(std::string("selection_head_") + kTaskNames[t],
                                          nn::Linear(c, kNumCombinations));
  }
}

std::array<torch::Tensor, kNumLevels> MultitaskFeatureSelectionImpl::unify(const StageFeatures& sf) {
  std::array<torch::Tensor, kNumLevels> out;
  for (int m = 0; m < kNumLevels; ++m) out[m] = unify_maps_[m](sf[m]);
  return out;
}

std::array<torch::Tensor, kNumLevels> MultitaskFeatureSelectionImpl::fuse(
    const std::array<torch::Tensor, kNumLevels>& unified) {
  if (!cfg_.enabled) throw std::logic_error("fuse called on a disabled selection module");
  std::array<torch::Tensor, kNumLevels> out;
  for (int m = 0; m < kNumLevels; ++m) {
    torch::Tensor interaction;
    for (int n = 0; n < kNumLevels; ++n) {
      if (n == m) continue;
      auto pair = torch::cat({unified[m], resize_to(unified[n], unified[m])}, 1);
      interaction = interaction.defined() ? interaction + pair : pair;
    }
    out[m] = resize_to(fusion_maps_[m](interaction), unified[0]);
  }
  return out;
}

torch::Tensor MultitaskFeatureSelectionImpl::per_view(const torch::Tensor& per_panorama) const {
  return per_panorama.repeat_interleave(cfg_.views, 0)
      .view({per_panorama.size(0) * cfg_.views, per_panorama.size(1), 1, 1});
}

SelectionState MultitaskFeatureSelectionImpl::selection_state(
    const std::array<torch::Tensor, kNumLevels>& levels) {
  const auto pooled = spatial_gap(pool_map_(torch::cat({levels[0], levels[1], levels[2], levels[3]}, 1)));
  const int64_t n = pooled.size(0) / cfg_.views;
  const auto trunk = torch::gelu(trunk_(pooled.reshape({n, cfg_.views * cfg_.channels})));
  SelectionState state;
  state.level_weights = torch::softmax(weight_head_(trunk), 1);
  for (int t = 0; t < kNumTaskSlots; ++t) {
    const auto logits = selection_heads_[t](trunk);
    state.selection[t] = torch::softmax(logits, 1);
    state.chosen[t] = logits.argmax(1);
  }
  return state;
}

torch::Tensor MultitaskFeatureSelectionImpl::combination_feature(
    const std::array<torch::Tensor, kNumLevels>& levels, const torch::Tensor& level_weights,
    int index) {
  const auto& members = level_combinations().at(index);
  std::vector<torch::Tensor> parts;
  parts.reserve(members.size());
  for (int m : members) parts.push_back(levels[m] * level_weights[m]);
  return combo_maps_[members.size() - 1](torch::cat(parts, 1));
}

std::array<torch::Tensor, kNumTaskSlots> MultitaskFeatureSelectionImpl::select(
    const std::array<torch::Tensor, kNumLevels>& levels, const SelectionState& state,
    SelectionMode mode) {
  std::array<torch::Tensor, kNumTaskSlots> out;
  const int64_t n = state.level_weights.size(0);
  const int64_t views = cfg_.views;

  if (mode == SelectionMode::kHard) {
    for (int t = 0; t < kNumTaskSlots; ++t) {
      std::vector<torch::Tensor> rows;
      rows.reserve(n);
      for (int64_t i = 0; i < n; ++i) {
        std::array<torch::Tensor, kNumLevels> slice;
        for (int m = 0; m < kNumLevels; ++m) slice[m] = levels[m].narrow(0, i * views, views);
        rows.push_back(combination_feature(slice, state.level_weights[i],
                                           static_cast<int>(state.chosen[t][i].item<int64_t>())));
      }
      out[t] = torch::cat(rows, 0);
    }
    return out;
  }

  // Soft mode. Every combination is a 1x1 map of weighted levels, which is linear, so
  //   sum_k p_k * W_|k|(cat_j w_{m_j} M_{m_j}) = sum_{(size, slot, m)} alpha * (W_size[slot] M_m)
  // where alpha collects p_k * w_m over combinations placing level m at that slot. The
  // (size, slot, level) products are shared by all four tasks.
  using Key = std::tuple<int, int, int>;
  std::map<Key, torch::Tensor> products;
  const int64_t c = cfg_.channels;
  const auto& combos = level_combinations();
  for (const auto& members : combos) {
    const int size = static_cast<int>(members.size());
    const auto& weight = combo_maps_[size - 1]->weight;
    for (int slot = 0; slot < size; ++slot) {
      const Key key{size, slot, members[slot]};
      if (products.count(key)) continue;
      products[key] = torch::conv2d(levels[members[slot]], weight.narrow(1, slot * c, c));
    }
  }
  for (int t = 0; t < kNumTaskSlots; ++t) {
    std::map<Key, torch::Tensor> alpha;
    for (int k = 0; k < kNumCombinations; ++k) {
      const auto& members = combos[k];
      const int size = static_cast<int>(members.size());
      for (int slot = 0; slot < size; ++slot) {
        const Key key{size, slot, members[slot]};
        auto term = state.selection[t].select(1, k) * state.level_weights.select(1, members[slot]);
        auto it = alpha.find(key);
        if (it == alpha.end()) {
          alpha.emplace(key, term);
        } else {
          it->second = it->second + term;
        }
      }
    }
    torch::Tensor acc;
    for (const auto& [key, coeff] : alpha) {
      auto term = products.at(key) * per_view(coeff.unsqueeze(1));
      acc = acc.defined() ? acc + term : term;
    }
    out[t] = acc;
  }
  return out;
}

MultitaskFeatureSelectionImpl::Output MultitaskFeatureSelectionImpl::forward(
    const StageFeatures& sf, SelectionMode mode) {
  const auto unified = unify(sf);
  Output out;
  if (!cfg_.enabled) {
    auto sum = unified[0];
    for (int m = 1; m < kNumLevels; ++m) sum = sum + resize_to(unified[m], unified[0]);
    out.tasks.fill(sum);
    return out;
  }
  const auto levels = fuse(unified);
  out.state = selection_state(levels);
  out.tasks = select(levels, *out.state, mode);
  return out;
}

}  // namespace mtaoiqa
