#include "mtaoiqa/run_config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace mtaoiqa {

using nlohmann::json;

std::string RunConfig::to_json() const {
  const auto& m = model;
  json j;
  j["manifest"] = manifest.string();
  j["profile"] = std::string(to_string(m.backbone.profile));
  j["backbone_widths"] = m.backbone.widths;
  j["tasks"] = m.tasks.to_string();
  j["views"] = m.views;
  j["channels"] = m.channels;
  j["viewport_size"] = m.viewport_size;
  j["fov_degrees"] = m.fov * 180.0 / std::numbers::pi;
  j["repeats"] = {{"vdp", m.vdp_repeats}, {"sdm", m.sdm_repeats}, {"cdc", m.cdc_repeats}, {"mdi", m.mdi_repeats}};
  j["use_mfs"] = m.use_mfs;
  j["use_mdi"] = m.use_mdi;
  j["use_maf"] = m.use_maf;
  j["da_multiplicative"] = m.da_multiplicative;
  j["project_widths"] = m.project_widths;
  j["double_precision"] = m.double_precision;
  j["seed"] = train.seed;
  j["learning_rate"] = train.learning_rate;
  j["batch_size"] = train.batch_size;
  j["epochs"] = train.epochs;
  j["val_fraction"] = train.val_fraction;
  j["init_score_bias"] = train.init_score_bias;
  j["fit_input_stats"] = train.fit_input_stats;
  j["train_selection"] = train.train_selection == SelectionMode::kSoft ? "soft" : "hard";
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig cfg;
  apply_json(cfg, text);
  return cfg;
}

namespace {

template <typename T>
T get(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

void apply_json(RunConfig& cfg, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  auto& m = cfg.model;
  auto& t = cfg.train;
  // The profile resets the widths, so it must land before any explicit backbone_widths.
  if (j.contains("profile")) {
    try {
      m.backbone = BackboneConfig::for_profile(backbone_profile_from_string(get<std::string>(j["profile"], "profile")));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key 'profile': " + std::string(e.what()));
    }
  }
  for (const auto& [key, v] : j.items()) {
    if (key == "manifest") {
      cfg.manifest = get<std::string>(v, key);
    } else if (key == "profile") {
      continue;
    } else if (key == "backbone_widths") {
      m.backbone.widths = get<std::array<int, 4>>(v, key);
    } else if (key == "tasks") {
      try {
        m.tasks = TaskSet::parse(get<std::string>(v, key));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config key 'tasks': " + std::string(e.what()));
      }
    } else if (key == "views") {
      m.views = get<int>(v, key);
    } else if (key == "channels") {
      m.channels = get<int>(v, key);
    } else if (key == "viewport_size") {
      m.viewport_size = get<int>(v, key);
    } else if (key == "fov_degrees") {
      m.fov = get<double>(v, key) * std::numbers::pi / 180.0;
    } else if (key == "repeats") {
      if (!v.is_object()) throw ConfigError("config key 'repeats' must be an object");
      for (const auto& [name, r] : v.items()) {
        const int n = get<int>(r, "repeats." + name);
        if (name == "vdp") m.vdp_repeats = n;
        else if (name == "sdm") m.sdm_repeats = n;
        else if (name == "cdc") m.cdc_repeats = n;
        else if (name == "mdi") m.mdi_repeats = n;
        else throw ConfigError("unknown config key 'repeats." + name + "'");
      }
    } else if (key == "use_mfs") {
      m.use_mfs = get<bool>(v, key);
    } else if (key == "use_mdi") {
      m.use_mdi = get<bool>(v, key);
    } else if (key == "use_maf") {
      m.use_maf = get<bool>(v, key);
    } else if (key == "da_multiplicative") {
      m.da_multiplicative = get<bool>(v, key);
    } else if (key == "project_widths") {
      m.project_widths = get<bool>(v, key);
    } else if (key == "double_precision") {
      m.double_precision = get<bool>(v, key);
    } else if (key == "seed") {
      t.seed = get<std::uint64_t>(v, key);
    } else if (key == "learning_rate") {
      t.learning_rate = get<double>(v, key);
    } else if (key == "batch_size") {
      t.batch_size = get<int>(v, key);
    } else if (key == "epochs") {
      t.epochs = get<int>(v, key);
    } else if (key == "val_fraction") {
      t.val_fraction = get<double>(v, key);
    } else if (key == "init_score_bias") {
      t.init_score_bias = get<bool>(v, key);
    } else if (key == "fit_input_stats") {
      t.fit_input_stats = get<bool>(v, key);
    } else if (key == "train_selection") {
      const auto s = get<std::string>(v, key);
      if (s == "soft") t.train_selection = SelectionMode::kSoft;
      else if (s == "hard") t.train_selection = SelectionMode::kHard;
      else throw ConfigError("config key 'train_selection' must be 'soft' or 'hard'");
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  m.seed = t.seed;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  auto cfg = RunConfig::from_json(ss.str());
  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  try {
    validate(cfg.model);
    validate(cfg.train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace mtaoiqa
