#include "mtaoiqa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mtaoiqa {

namespace {
constexpr double kPi = std::numbers::pi;
using nlohmann::json;
}  // namespace

std::string_view to_string(Taxonomy t) { return t == Taxonomy::kJufe ? "jufe" : "oiq"; }

Taxonomy taxonomy_from_string(std::string_view s) {
  if (s == "jufe") return Taxonomy::kJufe;
  if (s == "oiq") return Taxonomy::kOiq;
  throw std::invalid_argument("unknown taxonomy '" + std::string(s) + "' (expected jufe or oiq)");
}

TaxonomyInfo taxonomy_info(Taxonomy t) {
  if (t == Taxonomy::kJufe) return {2, kNumDistortionTypes, kNumDistortionLevels, {1.0, 5.0}};
  return {4, kNumDistortionTypes, kNumDistortionLevels, {1.0, 3.0}};
}

Labels derive_labels(const DistortionSpec& spec, Taxonomy taxonomy) {
  const int type = static_cast<int>(spec.type);
  const int degree = spec.level - 1;
  if (taxonomy == Taxonomy::kJufe) {
    if (spec.global || spec.regions.empty() || spec.regions.size() > 2) {
      throw std::invalid_argument("JUFE-style records need one or two regions");
    }
    return {static_cast<int>(spec.regions.size()) - 1, type, degree};
  }
  if (spec.is_noop()) return {0, kNoLabel, kNoLabel};
  if (spec.global) return {3, type, degree};
  return {static_cast<int>(spec.regions.size()), type, degree};
}

namespace {

DistortedRegion random_region(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lon(-kPi, kPi);
  std::uniform_real_distribution<double> lat(-kPi / 8.0, kPi / 8.0);
  return {{lon(rng), lat(rng)}, kDefaultRegionRadius};
}

std::vector<DistortedRegion> random_regions(std::mt19937_64& rng, int count) {
  std::vector<DistortedRegion> regions{random_region(rng)};
  while (static_cast<int>(regions.size()) < count) {
    DistortedRegion r = random_region(rng);
    // Keep the falloff bands disjoint too.
    if (angular_distance(r.center, regions[0].center) >
        2.0 * kDefaultRegionRadius + 2.0 * kMaskFalloff) {
      regions.push_back(r);
    }
  }
  return regions;
}

}  // namespace

DatasetManifest generate_dataset(int base_count, Taxonomy taxonomy, int n_per_image,
                                 std::uint64_t seed) {
  if (base_count < 2) {
    throw std::invalid_argument("generate_dataset: need at least two base images");
  }
  if (n_per_image < 1) {
    throw std::invalid_argument("generate_dataset: n_per_image must be >= 1");
  }
  DatasetManifest manifest;
  manifest.taxonomy = taxonomy;
  manifest.seed = seed;
  const TaxonomyInfo info = taxonomy_info(taxonomy);

  std::vector<int> order(base_count);
  for (int i = 0; i < base_count; ++i) order[i] = i;
  std::mt19937_64 split_rng(seed);
  std::shuffle(order.begin(), order.end(), split_rng);
  const int n_test = std::max(1, static_cast<int>(std::lround(0.2 * base_count)));
  std::vector<Split> split_of(base_count, Split::kTrain);
  for (int i = 0; i < n_test; ++i) split_of[order[i]] = Split::kTest;

  const int period = taxonomy == Taxonomy::kJufe ? 24 : 48;
  for (int img = 0; img < base_count; ++img) {
    for (int k = 0; k < n_per_image; ++k) {
      const std::size_t index = manifest.records.size();
      const int cell = static_cast<int>((static_cast<long long>(img) * n_per_image + k) % period);
      SampleRecord rec;
      rec.source = img;
      rec.seed = seed ^ static_cast<std::uint64_t>(index);
      std::mt19937_64 rng(rec.seed);

      int range_class = 0;
      if (taxonomy == Taxonomy::kJufe) {
        range_class = cell % 2;
        rec.spec.type = static_cast<DistortionType>((cell / 2) % 4);
        rec.spec.level = (cell / 8) % 3 + 1;
        rec.spec.regions = random_regions(rng, range_class + 1);
      } else {
        range_class = cell % 4;
        rec.spec.type = static_cast<DistortionType>((cell / 4) % 4);
        rec.spec.level = (cell / 16) % 3 + 1;
        if (range_class == 1 || range_class == 2) {
          rec.spec.regions = random_regions(rng, range_class);
        } else if (range_class == 3) {
          rec.spec.global = true;
        }
      }
      validate(rec.spec);
      const Labels labels = derive_labels(rec.spec, taxonomy);
      rec.range_label = labels.range;
      rec.type_label = labels.type;
      rec.degree_label = labels.degree;
      rec.pseudo_mos = pseudo_mos(rec.spec, info.score_range);
      rec.split = split_of[img];
      char name[48];
      std::snprintf(name, sizeof(name), "images/rec_%05zu.png", index);
      rec.path = name;
      manifest.records.push_back(std::move(rec));
    }
  }
  return manifest;
}

EquirectImage render_record(std::span<const EquirectImage> bases, const SampleRecord& record) {
  if (record.source < 0 || static_cast<std::size_t>(record.source) >= bases.size()) {
    throw std::out_of_range("render_record: source index out of range");
  }
  return apply_distortion(bases[record.source], record.spec, record.seed);
}

std::vector<std::size_t> check_labels(const DatasetManifest& manifest) {
  std::vector<std::size_t> bad;
  const TaxonomyInfo info = manifest.info();
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    try {
      const Labels l = derive_labels(r.spec, manifest.taxonomy);
      if (l.range != r.range_label || l.type != r.type_label || l.degree != r.degree_label ||
          pseudo_mos(r.spec, info.score_range) != r.pseudo_mos) {
        bad.push_back(i);
      }
    } catch (const std::invalid_argument&) {
      bad.push_back(i);
    }
  }
  return bad;
}

std::string manifest_to_json(const DatasetManifest& m) {
  const TaxonomyInfo info = m.info();
  json j;
  j["version"] = m.version;
  j["taxonomy"] = std::string(to_string(m.taxonomy));
  j["seed"] = m.seed;
  j["base_height"] = m.base_height;
  j["score_range"] = {info.score_range.lo, info.score_range.hi};
  j["classes"] = {{"r", info.range_classes}, {"t", info.type_classes}, {"d", info.degree_classes}};
  json records = json::array();
  for (const auto& r : m.records) {
    json regions = json::array();
    for (const auto& reg : r.spec.regions) {
      regions.push_back({{"lon", reg.center.lon}, {"lat", reg.center.lat}, {"radius", reg.radius}});
    }
    const bool noop = r.spec.is_noop();
    records.push_back({{"path", r.path},
                       {"source", r.source},
                       {"seed", r.seed},
                       {"type", noop ? std::string("none") : std::string(to_code(r.spec.type))},
                       {"level", noop ? 0 : r.spec.level},
                       {"regions", regions},
                       {"global", r.spec.global},
                       {"range_label", r.range_label},
                       {"type_label", r.type_label},
                       {"degree_label", r.degree_label},
                       {"pseudo_mos", r.pseudo_mos},
                       {"split", r.split == Split::kTrain ? "train" : "test"}});
  }
  j["records"] = std::move(records);
  return j.dump(1) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
  const json j = json::parse(text);
  DatasetManifest m;
  m.version = j.at("version").get<int>();
  m.taxonomy = taxonomy_from_string(j.at("taxonomy").get<std::string>());
  m.seed = j.value("seed", std::uint64_t{0});
  m.base_height = j.value("base_height", 0);
  for (const auto& jr : j.at("records")) {
    SampleRecord r;
    r.path = jr.at("path").get<std::string>();
    r.source = jr.at("source").get<int>();
    r.seed = jr.value("seed", std::uint64_t{0});
    const std::string type = jr.at("type").get<std::string>();
    r.spec.global = jr.at("global").get<bool>();
    for (const auto& reg : jr.at("regions")) {
      r.spec.regions.push_back(
          {{reg.at("lon").get<double>(), reg.at("lat").get<double>()}, reg.at("radius").get<double>()});
    }
    if (type != "none") {
      r.spec.type = distortion_type_from_code(type);
      r.spec.level = jr.at("level").get<int>();
    }
    r.range_label = jr.at("range_label").get<int>();
    r.type_label = jr.at("type_label").get<int>();
    r.degree_label = jr.at("degree_label").get<int>();
    r.pseudo_mos = jr.at("pseudo_mos").get<double>();
    const std::string split = jr.at("split").get<std::string>();
    if (split != "train" && split != "test") {
      throw std::invalid_argument("manifest: split must be train or test");
    }
    r.split = split == "train" ? Split::kTrain : Split::kTest;
    m.records.push_back(std::move(r));
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write manifest: " + path.string());
  os << manifest_to_json(manifest);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read manifest: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return manifest_from_json(ss.str());
}

void write_dataset(const DatasetManifest& manifest, std::span<const EquirectImage> bases,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  for (const auto& rec : manifest.records) {
    save_png(render_record(bases, rec).pixels(), dir / rec.path);
  }
  save_manifest(manifest, dir / "manifest.json");
}

}  // namespace mtaoiqa
