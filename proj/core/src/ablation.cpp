#include "mtaoiqa/ablation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mtaoiqa/evaluate.hpp"

namespace mtaoiqa {

std::vector<AblationVariant> task_subset_variants() {
  std::vector<AblationVariant> out;
  const TaskSet subsets[] = {TaskSet::none(),       {true, false, false}, {false, true, false},
                             {false, false, true},  {true, true, false},  {true, false, true},
                             {false, true, true},   TaskSet::all()};
  for (const auto& t : subsets) {
    AblationVariant v;
    v.kind = "tasks";
    v.tasks = t;
    v.name = t.to_string();
    v.slug = "tasks_" + (t.any() ? std::string() : std::string("none"));
    if (t.range) v.slug += 'r';
    if (t.type) v.slug += 't';
    if (t.degree) v.slug += 'd';
    out.push_back(v);
  }
  return out;
}

std::vector<AblationVariant> module_toggle_variants(const TaskSet& tasks) {
  const bool rows[8][3] = {{false, false, false}, {true, false, false}, {false, true, false},
                           {false, false, true},  {true, true, false},  {true, false, true},
                           {false, true, true},   {true, true, true}};
  std::vector<AblationVariant> out;
  for (const auto& r : rows) {
    AblationVariant v;
    v.kind = "modules";
    v.tasks = tasks;
    v.use_mfs = r[0];
    v.use_mdi = r[1];
    v.use_maf = r[2];
    v.name = "B";
    v.slug = "modules_b";
    if (r[0]) v.name += "+MFS", v.slug += "_mfs";
    if (r[1]) v.name += "+MDI", v.slug += "_mdi";
    if (r[2]) v.name += "+MAF", v.slug += "_maf";
    out.push_back(v);
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

}  // namespace

std::vector<AblationRow> run_ablation(const RunConfig& base, const DatasetManifest& manifest,
                                      const std::filesystem::path& data_root,
                                      const std::filesystem::path& out_dir,
                                      const AblationOptions& options, std::ostream* progress) {
  std::vector<AblationVariant> variants;
  if (options.task_sweep) variants = task_subset_variants();
  if (options.module_sweep) {
    for (auto& v : module_toggle_variants(options.module_tasks)) variants.push_back(v);
  }

  const auto& m = base.model;
  const auto split = train_validation_split(manifest, base.train.val_fraction, base.train.seed);
  if (split.train.empty()) throw std::invalid_argument("ablation: manifest has no training records");
  const auto test_records = split_records(manifest, Split::kTest);
  if (test_records.empty()) throw std::invalid_argument("ablation: manifest has no test records");
  const auto train_set = load_samples(manifest, data_root, split.train, m.views, m.viewport_size, m.fov);
  std::optional<SampleTensors> val_set;
  if (!split.validation.empty()) {
    val_set = load_samples(manifest, data_root, split.validation, m.views, m.viewport_size, m.fov);
  }
  const auto test_set = load_samples(manifest, data_root, test_records, m.views, m.viewport_size, m.fov);

  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    RunConfig cfg = base;
    cfg.model.tasks = v.tasks;
    cfg.model.use_mfs = v.use_mfs;
    cfg.model.use_mdi = v.use_mdi;
    cfg.model.use_maf = v.use_maf;
    cfg.train.epochs = options.epochs;
    validate(cfg);

    AblationRow row;
    row.variant = v;
    row.dir = out_dir / "rows" / v.slug;
    std::filesystem::create_directories(row.dir);
    write_text(row.dir / "config.json", cfg.to_json());
    if (progress) *progress << "[" << v.kind << "] " << v.name << '\n';

    auto result = train(cfg.model, cfg.train, train_set, val_set ? &*val_set : nullptr, progress);
    write_text(row.dir / "train_log.csv", training_log_csv(result.log));
    save_checkpoint(result.model, row.dir / "checkpoint");
    row.report = evaluate(result.model, manifest, test_set);
    const auto json = report_to_json(row.report);
    write_text(row.dir / "report.json", json);
    row.report_valid = validate_report_json(json).empty();
    row.aux_parameters = count_auxiliary_parameters(*result.model);
    rows.push_back(std::move(row));
  }
  write_text(out_dir / "ablation.csv", ablation_csv(rows));
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "kind,name,tasks,mfs,mdi,maf,aux_params,plcc,srcc,rmse,acc_r,acc_t,acc_d,report_valid\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return std::string(buf);
  };
  auto acc = [&](const EvalReport& r, const char* key) {
    const auto it = r.accuracy.find(key);
    return it == r.accuracy.end() ? std::string() : num(it->second.accuracy);
  };
  for (const auto& r : rows) {
    const auto& v = r.variant;
    os << v.kind << ",\"" << v.name << "\",\"" << v.tasks.to_string() << "\"," << v.use_mfs << ','
       << v.use_mdi << ',' << v.use_maf << ',' << r.aux_parameters << ',' << num(r.report.overall.plcc)
       << ',' << num(r.report.overall.srcc) << ',' << num(r.report.overall.rmse) << ','
       << acc(r.report, "R") << ',' << acc(r.report, "T") << ',' << acc(r.report, "D") << ','
       << r.report_valid << '\n';
  }
  return os.str();
}

}  // namespace mtaoiqa
