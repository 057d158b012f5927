// mtaoiqa: dataset generation, training, evaluation and ablation from the command line.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 I/O failure,
// 3 training diverged.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <tuple>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtaoiqa/ablation.hpp"
#include "mtaoiqa/dataset.hpp"
#include "mtaoiqa/distortion.hpp"
#include "mtaoiqa/evaluate.hpp"
#include "mtaoiqa/image.hpp"
#include "mtaoiqa/run_config.hpp"
#include "mtaoiqa/training.hpp"

namespace fs = std::filesystem;
using namespace mtaoiqa;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitDiverged = 3;

fs::path data_root_default() {
  const char* env = std::getenv("MTA_DATA_DIR");
  return env && *env ? fs::path(env) : fs::path("data");
}

// <root>/<YYYYmmdd-HHMMSS>-<command>, suffixed when the name is taken.
fs::path timestamped_dir(const fs::path& root, const std::string& command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream name;
  name << std::put_time(&tm, "%Y%m%d-%H%M%S") << '-' << command;
  fs::path dir = root / name.str();
  for (int i = 1; fs::exists(dir); ++i) dir = root / (name.str() + "-" + std::to_string(i));
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::vector<EquirectImage> load_bases(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<EquirectImage> out;
  for (const auto& f : files) out.emplace_back(load_image(f));
  return out;
}

void print_coverage(const DatasetManifest& m) {
  std::map<std::tuple<int, int, int>, int> cells;
  for (const auto& r : m.records) ++cells[{r.range_label, r.type_label, r.degree_label}];
  const auto info = m.info();
  const int expected = m.taxonomy == Taxonomy::kOiq
                           ? 1 + (info.range_classes - 1) * info.type_classes * info.degree_classes
                           : info.range_classes * info.type_classes * info.degree_classes;
  std::cout << "records " << m.records.size() << ", (range,type,degree) cells covered "
            << cells.size() << " of " << expected << '\n';
  for (const auto& [cell, count] : cells) {
    const auto [r, t, d] = cell;
    std::cout << "  R" << r + 1 << ' ' << (t < 0 ? std::string("--") : std::string(to_code(static_cast<DistortionType>(t))))
              << ' ' << (d < 0 ? std::string("-") : std::to_string(d + 1)) << "  " << count << '\n';
  }
}

// Flags shared by train and ablate; unset flags leave the config file's value.
struct ModelFlags {
  std::string config;
  std::string manifest;
  std::optional<std::string> profile, tasks, selection;
  std::optional<int> views, channels, viewport_size, epochs, batch_size;
  std::optional<double> fov_degrees, learning_rate, val_fraction;
  std::optional<std::uint64_t> seed;
  std::optional<bool> double_precision, init_score_bias, fit_input_stats;
  std::string run_dir, runs_root;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON run config");
    app->add_option("--manifest", manifest, "dataset manifest (default $MTA_DATA_DIR/manifest.json)");
    app->add_option("--profile", profile, "backbone profile: tiny | paper");
    app->add_option("--tasks", tasks, "auxiliary tasks: comma list of r,t,d or none");
    app->add_option("--views", views, "viewports per panorama");
    app->add_option("--channels", channels, "unified channel width C");
    app->add_option("--viewport-size", viewport_size, "viewport side in pixels");
    app->add_option("--fov", fov_degrees, "viewport field of view in degrees");
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", learning_rate, "Adam learning rate");
    app->add_option("--val-fraction", val_fraction, "share of training sources held out for validation");
    app->add_option("--seed", seed);
    app->add_option("--train-selection", selection, "soft | hard");
    app->add_option("--double", double_precision, "64-bit parameters and activations");
    app->add_option("--init-score-bias", init_score_bias, "start the score bias at the mean training MOS");
    app->add_option("--fit-input-stats", fit_input_stats, "normalize viewports by training-set channel statistics");
    app->add_option("--run-dir", run_dir, "output directory (default: timestamped under --runs-root)");
    app->add_option("--runs-root", runs_root, "parent of timestamped run directories");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config.empty()) {
      std::ifstream is(config);
      if (!is) throw std::runtime_error("cannot read config " + config);
      std::stringstream ss;
      ss << is.rdbuf();
      apply_json(cfg, ss.str());
    }
    nlohmann::json o = nlohmann::json::object();
    if (!manifest.empty()) o["manifest"] = manifest;
    if (profile) o["profile"] = *profile;
    if (tasks) o["tasks"] = *tasks;
    if (views) o["views"] = *views;
    if (channels) o["channels"] = *channels;
    if (viewport_size) o["viewport_size"] = *viewport_size;
    if (fov_degrees) o["fov_degrees"] = *fov_degrees;
    if (epochs) o["epochs"] = *epochs;
    if (batch_size) o["batch_size"] = *batch_size;
    if (learning_rate) o["learning_rate"] = *learning_rate;
    if (val_fraction) o["val_fraction"] = *val_fraction;
    if (seed) o["seed"] = *seed;
    if (selection) o["train_selection"] = *selection;
    if (double_precision) o["double_precision"] = *double_precision;
    if (init_score_bias) o["init_score_bias"] = *init_score_bias;
    if (fit_input_stats) o["fit_input_stats"] = *fit_input_stats;
    apply_json(cfg, o.dump());
    if (cfg.manifest.empty()) cfg.manifest = data_root_default() / "manifest.json";
    validate(cfg);
    return cfg;
  }

  fs::path output_dir(const std::string& command) const {
    if (!run_dir.empty()) return run_dir;
    return timestamped_dir(runs_root.empty() ? data_root_default() / "runs" : fs::path(runs_root), command);
  }
};

int cmd_gen_data(const std::string& taxonomy, int procedural, const std::string& bases_dir,
                 int per_image, std::uint64_t seed, int height, std::string out) {
  const Taxonomy tax = taxonomy_from_string(taxonomy);
  std::vector<EquirectImage> bases;
  if (procedural > 0) {
    bases = procedural_bases(procedural, seed, height);
  } else if (!bases_dir.empty()) {
    bases = load_bases(bases_dir);
  } else {
    throw std::invalid_argument("gen-data needs --procedural N or --bases DIR");
  }
  auto manifest = generate_dataset(static_cast<int>(bases.size()), tax, per_image, seed);
  manifest.base_height = bases.front().height();
  const fs::path dir = out.empty() ? data_root_default() : fs::path(out);
  write_dataset(manifest, bases, dir);
  std::cout << "wrote " << (dir / "manifest.json").string() << '\n';
  print_coverage(manifest);
  return 0;
}

int cmd_train(const ModelFlags& flags) {
  const RunConfig cfg = flags.resolve();
  const auto manifest = load_manifest(cfg.manifest);
  const fs::path dir = flags.output_dir("train");
  fs::create_directories(dir);
  write_text(dir / "config.json", cfg.to_json());
  std::cout << "run directory " << dir.string() << '\n';
  auto result = train(manifest, cfg.manifest.parent_path(), cfg.model, cfg.train, dir, &std::cout);
  std::cout << "best epoch " << result.best_epoch << ", auxiliary parameters "
            << count_auxiliary_parameters(*result.model) << '\n';
  if (!split_records(manifest, Split::kTest).empty()) {
    const auto report = evaluate(result.model, manifest, cfg.manifest.parent_path(), Split::kTest);
    write_text(dir / "report.json", report_to_json(report));
    std::cout << format_report_table(report);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint, std::string manifest_path, const std::string& cross,
             const std::string& split_name, const std::string& run_dir, const std::string& runs_root) {
  if (!cross.empty()) manifest_path = cross;
  if (manifest_path.empty()) manifest_path = (data_root_default() / "manifest.json").string();
  Split split;
  if (split_name == "test") split = Split::kTest;
  else if (split_name == "train") split = Split::kTrain;
  else throw std::invalid_argument("--split must be 'test' or 'train'");
  auto net = load_checkpoint(checkpoint);
  const auto manifest = load_manifest(manifest_path);
  const auto report = evaluate(net, manifest, fs::path(manifest_path).parent_path(), split);
  const fs::path dir = !run_dir.empty() ? fs::path(run_dir)
                        : timestamped_dir(runs_root.empty() ? data_root_default() / "runs" : fs::path(runs_root), "eval");
  fs::create_directories(dir);
  nlohmann::json resolved = {{"checkpoint", checkpoint}, {"manifest", manifest_path},
                             {"cross", !cross.empty()}, {"split", split_name}};
  write_text(dir / "config.json", resolved.dump(2) + "\n");
  const auto json = report_to_json(report);
  const auto problems = validate_report_json(json);
  if (!problems.empty()) throw std::logic_error("report failed validation: " + problems.front());
  write_text(dir / "report.json", json);
  write_text(dir / "report.txt", format_report_table(report));
  std::cout << format_report_table(report) << "report " << (dir / "report.json").string() << '\n';
  return 0;
}

int cmd_ablate(const ModelFlags& flags, bool modules, bool skip_tasks, int epochs,
               const std::string& module_tasks) {
  const RunConfig cfg = flags.resolve();
  const auto manifest = load_manifest(cfg.manifest);
  AblationOptions opts;
  opts.task_sweep = !skip_tasks;
  opts.module_sweep = modules;
  opts.epochs = epochs;
  opts.module_tasks = TaskSet::parse(module_tasks);
  const fs::path dir = flags.output_dir("ablate");
  fs::create_directories(dir);
  write_text(dir / "config.json", cfg.to_json());
  const auto rows = run_ablation(cfg, manifest, cfg.manifest.parent_path(), dir, opts, &std::cout);
  std::cout << ablation_csv(rows) << "table " << (dir / "ablation.csv").string() << '\n';
  return 0;
}

int cmd_viewports(const std::string& image, int count, int size, double fov_degrees,
                  const std::string& layout, const std::string& format, const std::string& out) {
  const EquirectImage img(load_image(image));
  const double fov = fov_degrees * std::numbers::pi / 180.0;
  const auto stem = fs::path(image).stem().string();
  ViewportSequence seq;
  if (layout == "equatorial") seq = equatorial_sample(img, count, fov, size, stem);
  else if (layout == "sphere") seq = uniform_sphere_sample(img, count, fov, size, stem);
  else throw std::invalid_argument("--layout must be 'equatorial' or 'sphere'");
  fs::create_directories(out);
  if (format == "tensor") {
    write_viewport_tensor(seq, fs::path(out) / (stem + ".mtav"));
  } else if (format == "png") {
    write_viewport_pngs(seq, out, stem);
  } else {
    throw std::invalid_argument("--format must be 'tensor' or 'png'");
  }
  std::cout << "wrote " << count << " viewports of " << size << "x" << size << " to " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multitask auxiliary quality assessment for omnidirectional images"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "render a distorted dataset and its manifest");
  std::string taxonomy = "jufe", bases_dir, gen_out;
  int procedural = 0, per_image = 24, height = 512;
  std::uint64_t gen_seed = 0;
  gen->add_option("--taxonomy", taxonomy, "jufe | oiq")->capture_default_str();
  gen->add_option("--procedural", procedural, "synthesize N base panoramas");
  gen->add_option("--bases", bases_dir, "directory of 2:1 base panoramas");
  gen->add_option("--per-image", per_image, "distorted variants per base")->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--height", height, "procedural panorama height")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory (default $MTA_DATA_DIR or ./data)");

  auto* tr = app.add_subcommand("train", "train a model and evaluate it on the test split");
  ModelFlags train_flags;
  train_flags.add(tr);

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string checkpoint, eval_manifest, cross, split_name = "test", eval_run_dir, eval_runs_root;
  ev->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  ev->add_option("--manifest", eval_manifest);
  ev->add_option("--cross", cross, "manifest of another dataset (cross-dataset protocol)");
  ev->add_option("--split", split_name, "test | train")->capture_default_str();
  ev->add_option("--run-dir", eval_run_dir);
  ev->add_option("--runs-root", eval_runs_root);

  auto* ab = app.add_subcommand("ablate", "task-subset and module-toggle sweeps");
  ModelFlags ablate_flags;
  ablate_flags.add(ab);
  bool modules = false, skip_tasks = false;
  int ablate_epochs = AblationOptions{}.epochs;
  std::string module_tasks = "r,t,d";
  ab->add_flag("--modules", modules, "add the 8 MFS/MDI/MAF toggle rows");
  ab->add_flag("--no-task-sweep", skip_tasks, "skip the 8 task-subset rows");
  ab->add_option("--sweep-epochs", ablate_epochs, "epochs per row")->capture_default_str();
  ab->add_option("--module-tasks", module_tasks, "tasks active in module rows")->capture_default_str();

  auto* vp = app.add_subcommand("viewports", "extract viewports from one panorama");
  std::string vp_image, vp_layout = "equatorial", vp_format = "tensor", vp_out = ".";
  int vp_count = 8, vp_size = 224;
  double vp_fov = 90.0;
  vp->add_option("image", vp_image)->required();
  vp->add_option("--count", vp_count)->capture_default_str();
  vp->add_option("--size", vp_size)->capture_default_str();
  vp->add_option("--fov", vp_fov, "degrees")->capture_default_str();
  vp->add_option("--layout", vp_layout, "equatorial | sphere")->capture_default_str();
  vp->add_option("--format", vp_format, "tensor | png")->capture_default_str();
  vp->add_option("--out", vp_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen_data(taxonomy, procedural, bases_dir, per_image, gen_seed, height, gen_out);
    if (*tr) return cmd_train(train_flags);
    if (*ev) return cmd_eval(checkpoint, eval_manifest, cross, split_name, eval_run_dir, eval_runs_root);
    if (*ab) return cmd_ablate(ablate_flags, modules, skip_tasks, ablate_epochs, module_tasks);
    if (*vp) return cmd_viewports(vp_image, vp_count, vp_size, vp_fov, vp_layout, vp_format, vp_out);
  } catch (const DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
