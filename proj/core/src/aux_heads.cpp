#include "mtaoiqa/aux_heads.hpp"

#include <sstream>
#include <stdexcept>

namespace mtaoiqa {

namespace nn = torch::nn;

std::string TaskSet::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(range, "r");
  add(type, "t");
  add(degree, "d");
  return out.empty() ? "none" : out;
}

TaskSet TaskSet::parse(const std::string& text) {
  TaskSet out = none();
  if (text == "none" || text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "r" || item == "R") {
      out.range = true;
    } else if (item == "t" || item == "T") {
      out.type = true;
    } else if (item == "d" || item == "D") {
      out.degree = true;
    } else {
      throw std::invalid_argument("unknown task '" + item + "' (expected r, t, d or none)");
    }
  }
  return out;
}

VdpBlockImpl::VdpBlockImpl(int channels)
    : va_(register_module("va", ViewportAttention(channels))),
      fuse_(register_module("fuse", pointwise(2 * channels, channels))) {}

torch::Tensor VdpBlockImpl::fuse(const torch::Tensor& x, const torch::Tensor& va_gate) {
  return fuse_(torch::cat({va_gate * x, x}, 1));
}

torch::Tensor VdpBlockImpl::forward(const torch::Tensor& x) { return fuse(x, va_(x)); }

SdmBlockImpl::SdmBlockImpl(int channels)
    : ta_(register_module("ta", TypeAttention(channels))),
      va_(register_module("va", ViewportAttention(channels))),
      fuse_(register_module("fuse", pointwise(2 * channels, channels))) {}

torch::Tensor SdmBlockImpl::fuse(const torch::Tensor& x, const torch::Tensor& ta_gate,
                                 const torch::Tensor& va_gate) {
  return fuse_(torch::cat({ta_gate * x, va_gate * x}, 1));
}

torch::Tensor SdmBlockImpl::forward(const torch::Tensor& x) { return fuse(x, ta_(x), va_(x)); }

CdcBlockImpl::CdcBlockImpl(int channels, bool multiplicative)
    : multiplicative_(multiplicative),
      da_(register_module("da", DegreeAttention(channels))),
      va_(register_module("va", ViewportAttention(channels))),
      fuse_(register_module("fuse", pointwise(2 * channels, channels))) {}

torch::Tensor CdcBlockImpl::fuse(const torch::Tensor& x, const torch::Tensor& da_gate,
                                 const torch::Tensor& va_gate) {
  const auto degree_branch = multiplicative_ ? da_gate * x : da_gate;
  return fuse_(torch::cat({degree_branch, va_gate * x}, 1));
}

torch::Tensor CdcBlockImpl::forward(const torch::Tensor& x) { return fuse(x, da_(x), va_(x)); }

ClassifierImpl::ClassifierImpl(int views, int channels, int classes)
    : views_(views), channels_(channels) {
  if (classes < 2) throw std::invalid_argument("classifier needs at least two classes");
  const int width = views * channels;
  const int hidden = std::max(1, width / 8);
  hidden_ = register_module("hidden", nn::Linear(width, hidden));
  output_ = register_module("output", nn::Linear(hidden, classes));
}

torch::Tensor ClassifierImpl::logits(const torch::Tensor& x) {
  const int64_t n = x.size(0) / views_;
  const auto flat = spatial_gap(x).reshape({n, static_cast<int64_t>(views_) * channels_});
  return output_(torch::gelu(hidden_(flat)));
}

torch::Tensor ClassifierImpl::forward(const torch::Tensor& x) {
  return torch::softmax(logits(x), 1);
}

void ClassifierImpl::zero_output_layer() {
  torch::NoGradGuard guard;
  output_->weight.zero_();
  output_->bias.zero_();
}

AuxHeadsImpl::AuxHeadsImpl(const AuxConfig& cfg) : cfg_(cfg) {
  if (cfg.range_repeats < 1 || cfg.type_repeats < 1 || cfg.degree_repeats < 1) {
    throw std::invalid_argument("block repeats must be >= 1");
  }
  const int c = cfg.channels;
  if (cfg.tasks.range) {
    range_blocks_ = register_module("vdp", nn::ModuleList());
    for (int i = 0; i < cfg.range_repeats; ++i) range_blocks_->push_back(VdpBlock(c));
    range_classifier_ =
        register_module("range_classifier", Classifier(cfg.views, c, cfg.range_classes));
  }
  if (cfg.tasks.type) {
    type_blocks_ = register_module("sdm", nn::ModuleList());
    for (int i = 0; i < cfg.type_repeats; ++i) type_blocks_->push_back(SdmBlock(c));
    type_classifier_ =
        register_module("type_classifier", Classifier(cfg.views, c, cfg.type_classes));
  }
  if (cfg.tasks.degree) {
    degree_blocks_ = register_module("cdc", nn::ModuleList());
    for (int i = 0; i < cfg.degree_repeats; ++i) {
      degree_blocks_->push_back(CdcBlock(c, cfg.da_multiplicative));
    }
    degree_classifier_ =
        register_module("degree_classifier", Classifier(cfg.views, c, cfg.degree_classes));
  }
}

torch::Tensor AuxHeadsImpl::run_range_stack(torch::Tensor x) {
  for (const auto& block : *range_blocks_) x = block->as<VdpBlock>()->forward(x);
  return x;
}

torch::Tensor AuxHeadsImpl::run_type_stack(torch::Tensor x) {
  for (const auto& block : *type_blocks_) x = block->as<SdmBlock>()->forward(x);
  return x;
}

torch::Tensor AuxHeadsImpl::run_degree_stack(torch::Tensor x) {
  for (const auto& block : *degree_blocks_) x = block->as<CdcBlock>()->forward(x);
  return x;
}

AuxOutputs AuxHeadsImpl::forward(const std::array<torch::Tensor, kNumTaskSlots>& selections) {
  AuxOutputs out;
  if (cfg_.tasks.range) {
    out.range_features = run_range_stack(selections[static_cast<int>(TaskSlot::kRange)]);
    out.range = range_classifier_(*out.range_features);
  }
  if (cfg_.tasks.type) {
    out.type_features = run_type_stack(selections[static_cast<int>(TaskSlot::kType)]);
    out.type = type_classifier_(*out.type_features);
  }
  if (cfg_.tasks.degree) {
    out.degree_features = run_degree_stack(selections[static_cast<int>(TaskSlot::kDegree)]);
    out.degree = degree_classifier_(*out.degree_features);
  }
  return out;
}

}  // namespace mtaoiqa
