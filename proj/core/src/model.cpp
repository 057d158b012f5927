#include "mtaoiqa/model.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mtaoiqa {

using nlohmann::json;

std::string ModelConfig::to_json() const {
  json j;
  j["backbone_profile"] = std::string(to_string(backbone.profile));
  j["backbone_widths"] = backbone.widths;
  j["views"] = views;
  j["channels"] = channels;
  j["viewport_size"] = viewport_size;
  j["fov"] = fov;
  j["tasks"] = tasks.to_string();
  j["range_classes"] = range_classes;
  j["type_classes"] = type_classes;
  j["degree_classes"] = degree_classes;
  j["repeats"] = {{"vdp", vdp_repeats}, {"sdm", sdm_repeats}, {"cdc", cdc_repeats}, {"mdi", mdi_repeats}};
  j["use_mfs"] = use_mfs;
  j["use_mdi"] = use_mdi;
  j["use_maf"] = use_maf;
  j["da_multiplicative"] = da_multiplicative;
  j["project_widths"] = project_widths;
  j["seed"] = seed;
  j["double_precision"] = double_precision;
  j["input_mean"] = input_mean;
  j["input_std"] = input_std;
  return j.dump(2) + "\n";
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelConfig c;
  c.backbone.profile = backbone_profile_from_string(j.at("backbone_profile").get<std::string>());
  c.backbone.widths = j.at("backbone_widths").get<std::array<int, 4>>();
  c.views = j.at("views").get<int>();
  c.channels = j.at("channels").get<int>();
  c.viewport_size = j.at("viewport_size").get<int>();
  c.fov = j.at("fov").get<double>();
  c.tasks = TaskSet::parse(j.at("tasks").get<std::string>());
  c.range_classes = j.at("range_classes").get<int>();
  c.type_classes = j.at("type_classes").get<int>();
  c.degree_classes = j.at("degree_classes").get<int>();
  const auto& r = j.at("repeats");
  c.vdp_repeats = r.at("vdp").get<int>();
  c.sdm_repeats = r.at("sdm").get<int>();
  c.cdc_repeats = r.at("cdc").get<int>();
  c.mdi_repeats = r.at("mdi").get<int>();
  c.use_mfs = j.at("use_mfs").get<bool>();
  c.use_mdi = j.at("use_mdi").get<bool>();
  c.use_maf = j.at("use_maf").get<bool>();
  c.da_multiplicative = j.at("da_multiplicative").get<bool>();
  c.project_widths = j.at("project_widths").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.double_precision = j.value("double_precision", false);
  if (j.contains("input_mean")) c.input_mean = j.at("input_mean").get<std::array<double, 3>>();
  if (j.contains("input_std")) c.input_std = j.at("input_std").get<std::array<double, 3>>();
  return c;
}

void validate(const ModelConfig& cfg) {
  validate(cfg.backbone);
  if (cfg.views < 1) throw std::invalid_argument("views must be >= 1");
  if (cfg.channels < 2 || cfg.channels % 2 != 0) {
    throw std::invalid_argument("channels must be an even number >= 2");
  }
  if (cfg.viewport_size < 32 || cfg.viewport_size % 32 != 0) {
    throw std::invalid_argument("viewport size must be a positive multiple of 32");
  }
  if (cfg.range_classes < 2 || cfg.type_classes < 2 || cfg.degree_classes < 2) {
    throw std::invalid_argument("class counts must be >= 2");
  }
  for (double s : cfg.input_std) {
    if (!(s > 0.0)) throw std::invalid_argument("input_std entries must be positive");
  }
  const bool fusion = cfg.use_maf && cfg.tasks.any();
  if (fusion && cfg.views * cfg.channels / 8 != cfg.channels && !cfg.project_widths) {
    throw std::invalid_argument("fusion needs V*C/8 == C (V = 8); enable project_widths otherwise");
  }
}

MtaoiqaNetImpl::MtaoiqaNetImpl(const ModelConfig& cfg) : cfg_(cfg) {
  validate(cfg);
  backbone_ = register_module("backbone", make_backbone(cfg.backbone));

  MfsConfig mfs_cfg;
  mfs_cfg.stage_widths = backbone_->widths();
  mfs_cfg.channels = cfg.channels;
  mfs_cfg.views = cfg.views;
  mfs_cfg.enabled = cfg.use_mfs;
  mfs_ = register_module("mfs", MultitaskFeatureSelection(mfs_cfg));

  if (cfg.tasks.any()) {
    AuxConfig aux_cfg;
    aux_cfg.tasks = cfg.tasks;
    aux_cfg.views = cfg.views;
    aux_cfg.channels = cfg.channels;
    aux_cfg.range_repeats = cfg.vdp_repeats;
    aux_cfg.type_repeats = cfg.sdm_repeats;
    aux_cfg.degree_repeats = cfg.cdc_repeats;
    aux_cfg.range_classes = cfg.range_classes;
    aux_cfg.type_classes = cfg.type_classes;
    aux_cfg.degree_classes = cfg.degree_classes;
    aux_cfg.da_multiplicative = cfg.da_multiplicative;
    aux_ = register_module("aux", AuxHeads(aux_cfg));
  }

  MainHeadConfig main_cfg;
  main_cfg.tasks = cfg.tasks;
  main_cfg.views = cfg.views;
  main_cfg.channels = cfg.channels;
  main_cfg.mdi_repeats = cfg.mdi_repeats;
  main_cfg.range_classes = cfg.range_classes;
  main_cfg.type_classes = cfg.type_classes;
  main_cfg.degree_classes = cfg.degree_classes;
  main_cfg.use_mdi = cfg.use_mdi;
  main_cfg.use_maf = cfg.use_maf;
  main_cfg.da_multiplicative = cfg.da_multiplicative;
  main_cfg.project_widths = cfg.project_widths;
  main_ = register_module("main", MainHead(main_cfg));
}

ModelOutput MtaoiqaNetImpl::forward(const torch::Tensor& viewports, SelectionMode mode) {
  if (viewports.dim() != 5 || viewports.size(1) != cfg_.views) {
    throw std::invalid_argument("model expects N x V x 3 x S x S input with V = " +
                                std::to_string(cfg_.views));
  }
  const int64_t n = viewports.size(0);
  const auto opts = viewports.options();
  const auto mean = torch::tensor({cfg_.input_mean[0], cfg_.input_mean[1], cfg_.input_mean[2]}, opts).view({1, 3, 1, 1});
  const auto std = torch::tensor({cfg_.input_std[0], cfg_.input_std[1], cfg_.input_std[2]}, opts).view({1, 3, 1, 1});
  const auto flat =
      (viewports.reshape({n * cfg_.views, 3, viewports.size(3), viewports.size(4)}) - mean) / std;

  ModelOutput out;
  out.stages = backbone_->extract(flat);
  auto selected = mfs_->forward(out.stages, mode);
  out.selections = selected.tasks;
  out.selection = std::move(selected.state);
  if (aux_) out.aux = aux_->forward(out.selections);
  out.main = main_->forward(out.selections[static_cast<int>(TaskSlot::kQuality)], out.aux);
  out.score = out.main.score;
  return out;
}

MtaoiqaNet build_model(const ModelConfig& cfg) {
  torch::manual_seed(cfg.seed);
  MtaoiqaNet net(cfg);
  if (cfg.double_precision) net->to(torch::kFloat64);
  return net;
}

int64_t count_parameters(const torch::nn::Module& module, const std::string& prefix) {
  int64_t total = 0;
  for (const auto& item : module.named_parameters()) {
    if (item.key().rfind(prefix, 0) == 0) total += item.value().numel();
  }
  return total;
}

int64_t count_auxiliary_parameters(const torch::nn::Module& module) {
  int64_t total = 0;
  for (const auto& item : module.named_parameters()) {
    const auto& k = item.key();
    if (k.rfind("aux.", 0) == 0 || k.rfind("main.semantic", 0) == 0 ||
        k.rfind("main.maf", 0) == 0 || k.rfind("main.width_projection", 0) == 0) {
      total += item.value().numel();
    }
  }
  return total;
}

torch::Tensor to_tensor(const ViewportSequence& seq) {
  return torch::from_blob(const_cast<float*>(seq.pixels.data()),
                          {seq.count, 3, seq.size, seq.size}, torch::kFloat32)
      .clone();
}

void save_checkpoint(MtaoiqaNet& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "model_config.json");
    if (!os) throw std::runtime_error("cannot write " + (dir / "model_config.json").string());
    os << net->config().to_json();
  }
  torch::serialize::OutputArchive archive;
  net->save(archive);
  archive.save_to((dir / "model.pt").string());
}

MtaoiqaNet load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream is(dir / "model_config.json");
  if (!is) throw std::runtime_error("missing model_config.json in " + dir.string());
  std::stringstream ss;
  ss << is.rdbuf();
  auto net = build_model(ModelConfig::from_json(ss.str()));
  torch::serialize::InputArchive archive;
  archive.load_from((dir / "model.pt").string());
  net->load(archive);
  return net;
}

}  // namespace mtaoiqa
