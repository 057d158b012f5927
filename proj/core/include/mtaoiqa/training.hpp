#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "mtaoiqa/dataset.hpp"
#include "mtaoiqa/losses.hpp"
#include "mtaoiqa/model.hpp"

namespace mtaoiqa {

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 8;
  int epochs = 50;
  std::uint64_t seed = 0;
  SelectionMode train_selection = SelectionMode::kSoft;  // evaluation always uses hard
  double val_fraction = 0.1;                               // of training source images
  bool init_score_bias = true;   // start the score layer's bias at the mean training MOS
  bool fit_input_stats = true;   // normalize viewports by training-set channel statistics
};

/// Throws std::invalid_argument unless learning_rate > 0, epochs >= 1, batch_size >= 1.
void validate(const TrainConfig& cfg);

/// Viewport tensors and labels for a set of manifest records, held in memory.
struct SampleTensors {
  torch::Tensor viewports;  // M x V x 3 x S x S
  torch::Tensor mos;        // M
  torch::Tensor range;      // M, int64, -1 when not applicable
  torch::Tensor type;
  torch::Tensor degree;
  std::vector<std::size_t> records;  // manifest indices

  int64_t size() const { return static_cast<int64_t>(records.size()); }
  SampleTensors subset(const std::vector<int64_t>& rows) const;
};

/// Renders V equatorial viewports for each listed record from the PNGs under `root`.
SampleTensors load_samples(const DatasetManifest& manifest, const std::filesystem::path& root,
                           const std::vector<std::size_t>& records, int views, int size, double fov);

std::vector<std::size_t> split_records(const DatasetManifest& manifest, Split split);

/// Partitions the training records by source image: round(val_fraction * sources), at
/// least one, become validation when two or more sources exist.
struct TrainValSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
TrainValSplit train_validation_split(const DatasetManifest& manifest, double val_fraction,
                                     std::uint64_t seed);

struct EpochLog {
  int epoch = 0;  // 0 holds the losses of the untrained model
  double loss_main = 0.0;
  std::optional<double> loss_range, loss_type, loss_degree;
  double loss_total = 0.0;
  double sigma_main = 1.0;
  std::optional<double> sigma_range, sigma_type, sigma_degree;
  std::optional<double> val_plcc, val_srcc;
};

std::string training_log_csv(const std::vector<EpochLog>& log);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  MtaoiqaNet model{nullptr};
  UncertaintyWeights weights{nullptr};
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Adam on the model and log-sigma parameters. Data order for epoch e is a shuffle seeded
/// by seed + e. The returned model holds the weights of the epoch with the best validation
/// SRCC (the last epoch without validation data). Throws DivergenceError when the total
/// loss becomes non-finite.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const SampleTensors& train_set,
                  const SampleTensors* validation_set, std::ostream* progress = nullptr);

/// Loads the manifest's PNGs, splits train/validation and trains. When `out_dir` is non-empty
/// it receives train_log.csv and checkpoint/ (model_config.json, model.pt, uncertainty.pt).
TrainResult train(const DatasetManifest& manifest, const std::filesystem::path& data_root,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

}  // namespace mtaoiqa
