#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mtaoiqa/distortion.hpp"

namespace mtaoiqa {

/// JUFE-style: one or two distorted regions only, scores in [1, 5].
/// OIQ-style: none / one / two / global distortion ranges, scores in [1, 3].
enum class Taxonomy { kJufe, kOiq };

std::string_view to_string(Taxonomy t);
Taxonomy taxonomy_from_string(std::string_view s);

struct TaxonomyInfo {
  int range_classes;
  int type_classes = kNumDistortionTypes;
  int degree_classes = kNumDistortionLevels;
  ScoreRange score_range;
};
TaxonomyInfo taxonomy_info(Taxonomy t);

/// Marks a label as not applicable (undistorted OIQ records have no type or degree).
inline constexpr int kNoLabel = -1;

enum class Split { kTrain, kTest };

struct SampleRecord {
  std::string path;  // relative to the manifest directory
  int source = 0;    // index of the base panorama
  std::uint64_t seed = 0;
  DistortionSpec spec;
  int range_label = 0;
  int type_label = kNoLabel;
  int degree_label = kNoLabel;
  double pseudo_mos = 0.0;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  int version = 1;
  Taxonomy taxonomy = Taxonomy::kJufe;
  std::uint64_t seed = 0;
  int base_height = 0;
  std::vector<SampleRecord> records;

  TaxonomyInfo info() const { return taxonomy_info(taxonomy); }
};

/// Label triple implied by a spec under a taxonomy.
struct Labels {
  int range;
  int type;
  int degree;
};
Labels derive_labels(const DistortionSpec& spec, Taxonomy taxonomy);

/// Builds the manifest (no pixels). Deterministic per seed; record i draws its random
/// stream from seed ^ i. Throws std::invalid_argument for fewer than two base images.
DatasetManifest generate_dataset(int base_count, Taxonomy taxonomy, int n_per_image,
                                 std::uint64_t seed);

/// Pixels of one record, reproduced from its base panorama.
EquirectImage render_record(std::span<const EquirectImage> bases, const SampleRecord& record);

/// Re-derives every label and score from the stored specs; returns the indices of
/// inconsistent records (empty when the manifest is self-consistent).
std::vector<std::size_t> check_labels(const DatasetManifest& manifest);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const std::string& text);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Writes manifest.json plus one PNG per record under `dir`.
void write_dataset(const DatasetManifest& manifest, std::span<const EquirectImage> bases,
                   const std::filesystem::path& dir);

}  // namespace mtaoiqa
