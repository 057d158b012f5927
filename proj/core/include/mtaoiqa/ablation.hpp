#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "mtaoiqa/metrics.hpp"
#include "mtaoiqa/run_config.hpp"

namespace mtaoiqa {

struct AblationVariant {
  std::string kind;  // "tasks" or "modules"
  std::string name;  // e.g. "r,d" or "B+MFS+MAF"
  std::string slug;  // directory name
  TaskSet tasks;
  bool use_mfs = true;
  bool use_mdi = true;
  bool use_maf = true;
};

/// The 8 task subsets, from the empty set (no auxiliary heads) to all three.
std::vector<AblationVariant> task_subset_variants();
/// The 8 module rows: baseline, each of MFS/MDI/MAF alone, pairs, and all three. Every row
/// keeps `tasks` active so the fusion toggle has an effect.
std::vector<AblationVariant> module_toggle_variants(const TaskSet& tasks);

struct AblationOptions {
  bool task_sweep = true;
  bool module_sweep = false;
  int epochs = 5;  // reduced from the training default to keep a sweep short
  TaskSet module_tasks = TaskSet::all();
};

struct AblationRow {
  AblationVariant variant;
  EvalReport report;
  int64_t aux_parameters = 0;
  bool report_valid = false;
  std::filesystem::path dir;
};

/// Trains and evaluates every selected variant on the manifest's train/test split. Each row
/// directory receives config.json, train_log.csv, checkpoint/ and report.json.
std::vector<AblationRow> run_ablation(const RunConfig& base, const DatasetManifest& manifest,
                                      const std::filesystem::path& data_root,
                                      const std::filesystem::path& out_dir,
                                      const AblationOptions& options, std::ostream* progress = nullptr);

/// One line per row: kind, name, tasks, toggles, aux parameter count, PLCC/SRCC/RMSE, ACC_*.
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace mtaoiqa
