#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mtaoiqa/dataset.hpp"
#include "mtaoiqa/metrics.hpp"
#include "mtaoiqa/model.hpp"
#include "mtaoiqa/training.hpp"

namespace mtaoiqa {

/// JUFE-style: BD, GB, GN, ST. OIQ-style: R1..R4.
std::vector<std::string> strata_for(Taxonomy taxonomy);
std::string stratum_of(const SampleRecord& record, Taxonomy taxonomy);

struct Predictions {
  std::vector<double> scores;
  std::vector<std::optional<int>> range, type, degree;
  std::vector<std::array<int, 4>> chosen;
};

/// Hard-selection inference without gradients; the module's training flag is restored.
Predictions predict(MtaoiqaNet& net, const torch::Tensor& viewports, int batch_size = 8);

/// Joins predictions with manifest labels and strata.
std::vector<ScoredSample> scored_samples(const DatasetManifest& manifest,
                                         const SampleTensors& samples, const Predictions& pred);

EvalReport evaluate(MtaoiqaNet& net, const DatasetManifest& manifest, const SampleTensors& samples);

/// Renders the records of `split` and evaluates them. Throws std::invalid_argument when the
/// split is empty.
EvalReport evaluate(MtaoiqaNet& net, const DatasetManifest& manifest,
                    const std::filesystem::path& data_root, Split split = Split::kTest);

}  // namespace mtaoiqa
