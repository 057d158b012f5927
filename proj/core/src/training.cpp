#include "mtaoiqa/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mtaoiqa/evaluate.hpp"
#include "mtaoiqa/image.hpp"

namespace mtaoiqa {

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
    throw std::invalid_argument("val_fraction must be in [0, 1)");
  }
}

SampleTensors SampleTensors::subset(const std::vector<int64_t>& rows) const {
  const auto idx = torch::tensor(rows, torch::kInt64);
  SampleTensors s;
  s.viewports = viewports.index_select(0, idx);
  s.mos = mos.index_select(0, idx);
  s.range = range.index_select(0, idx);
  s.type = type.index_select(0, idx);
  s.degree = degree.index_select(0, idx);
  for (int64_t r : rows) s.records.push_back(records.at(r));
  return s;
}

SampleTensors load_samples(const DatasetManifest& manifest, const std::filesystem::path& root,
                           const std::vector<std::size_t>& records, int views, int size, double fov) {
  const auto m = static_cast<int64_t>(records.size());
  SampleTensors s;
  s.viewports = torch::empty({m, views, 3, size, size}, torch::kFloat32);
  std::vector<double> mos;
  std::vector<int64_t> range, type, degree;
  for (int64_t i = 0; i < m; ++i) {
    const auto& rec = manifest.records.at(records[i]);
    const EquirectImage img(load_image(root / rec.path));
    const auto seq = equatorial_sample(img, views, fov, size, rec.path);
    s.viewports[i].copy_(to_tensor(seq));
    mos.push_back(rec.pseudo_mos);
    range.push_back(rec.range_label);
    type.push_back(rec.type_label);
    degree.push_back(rec.degree_label);
  }
  s.mos = torch::tensor(mos, torch::kFloat64);
  s.range = torch::tensor(range, torch::kInt64);
  s.type = torch::tensor(type, torch::kInt64);
  s.degree = torch::tensor(degree, torch::kInt64);
  s.records = records;
  return s;
}

std::vector<std::size_t> split_records(const DatasetManifest& manifest, Split split) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (manifest.records[i].split == split) out.push_back(i);
  }
  return out;
}

TrainValSplit train_validation_split(const DatasetManifest& manifest, double val_fraction,
                                     std::uint64_t seed) {
  const auto train = split_records(manifest, Split::kTrain);
  std::set<int> source_set;
  for (auto i : train) source_set.insert(manifest.records[i].source);
  std::vector<int> sources(source_set.begin(), source_set.end());
  std::mt19937_64 rng(seed);
  std::shuffle(sources.begin(), sources.end(), rng);
  std::size_t n_val = 0;
  if (sources.size() >= 2 && val_fraction > 0.0) {
    n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(val_fraction * sources.size())));
    n_val = std::min(n_val, sources.size() - 1);
  }
  const std::set<int> val_sources(sources.begin(), sources.begin() + n_val);
  TrainValSplit out;
  for (auto i : train) {
    (val_sources.count(manifest.records[i].source) ? out.validation : out.train).push_back(i);
  }
  return out;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch,loss_main,loss_r,loss_t,loss_d,loss_total,sigma_main,sigma_r,sigma_t,sigma_d,"
        "val_plcc,val_srcc\n";
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  for (const auto& e : log) {
    os << e.epoch << ',' << num(e.loss_main) << ',' << opt(e.loss_range) << ',' << opt(e.loss_type)
       << ',' << opt(e.loss_degree) << ',' << num(e.loss_total) << ',' << num(e.sigma_main) << ','
       << opt(e.sigma_range) << ',' << opt(e.sigma_type) << ',' << opt(e.sigma_degree) << ','
       << opt(e.val_plcc) << ',' << opt(e.val_srcc) << '\n';
  }
  return os.str();
}

namespace {

// Running sums of one epoch's per-batch losses.
struct LossSums {
  double main = 0.0, total = 0.0;
  std::array<double, 3> aux{};
  std::array<int, 3> aux_batches{};
  int batches = 0;
};

struct StepLosses {
  torch::Tensor total;
  double main = 0.0;
  std::array<std::optional<double>, 3> aux;
};

StepLosses batch_losses(MtaoiqaNet& net, UncertaintyWeights& uw, const SampleTensors& data,
                        const torch::Tensor& rows, SelectionMode mode) {
  const auto dtype = net->dtype();
  const auto x = data.viewports.index_select(0, rows).to(dtype);
  const auto out = net->forward(x, mode);
  const auto target = data.mos.index_select(0, rows).to(dtype);

  const auto& tasks = net->config().tasks;
  const auto lm = loss_main(out.score, target);
  StepLosses res;
  res.main = lm.item<double>();
  const auto& ls = uw->log_sigma();
  res.total = lm * torch::exp(-2.0 * ls[0]) / 2.0 + ls[0];

  const std::array<bool, 3> active{tasks.range, tasks.type, tasks.degree};
  const std::array<const std::optional<torch::Tensor>*, 3> probs{&out.aux.range, &out.aux.type,
                                                                 &out.aux.degree};
  const std::array<const torch::Tensor*, 3> labels{&data.range, &data.type, &data.degree};
  int term = 1;
  for (int k = 0; k < 3; ++k) {
    if (!active[k]) continue;
    const auto l = loss_aux(probs[k]->value(), labels[k]->index_select(0, rows));
    // A batch without any applicable label leaves that term (and its sigma) untouched.
    if (l.defined()) {
      res.aux[k] = l.item<double>();
      res.total = res.total + l * torch::exp(-2.0 * ls[term]) / 2.0 + ls[term];
    }
    ++term;
  }
  return res;
}

void accumulate(LossSums& sums, const StepLosses& step) {
  sums.main += step.main;
  sums.total += step.total.item<double>();
  for (int k = 0; k < 3; ++k) {
    if (step.aux[k]) {
      sums.aux[k] += *step.aux[k];
      ++sums.aux_batches[k];
    }
  }
  ++sums.batches;
}

EpochLog summarize(int epoch, const LossSums& sums, const TaskSet& tasks, const UncertaintyWeights& uw) {
  EpochLog e;
  e.epoch = epoch;
  e.loss_main = sums.main / sums.batches;
  e.loss_total = sums.total / sums.batches;
  const auto sig = uw->sigmas().to(torch::kFloat64).contiguous();
  e.sigma_main = sig[0].item<double>();
  const std::array<bool, 3> active{tasks.range, tasks.type, tasks.degree};
  std::array<std::optional<double>*, 3> losses{&e.loss_range, &e.loss_type, &e.loss_degree};
  std::array<std::optional<double>*, 3> sigmas{&e.sigma_range, &e.sigma_type, &e.sigma_degree};
  int term = 1;
  for (int k = 0; k < 3; ++k) {
    if (!active[k]) continue;
    if (sums.aux_batches[k] > 0) *losses[k] = sums.aux[k] / sums.aux_batches[k];
    *sigmas[k] = sig[term++].item<double>();
  }
  return e;
}

std::string snapshot(torch::nn::Module& module) {
  torch::serialize::OutputArchive archive;
  module.save(archive);
  std::ostringstream os;
  archive.save_to(os);
  return os.str();
}

void restore(torch::nn::Module& module, const std::string& bytes) {
  torch::serialize::InputArchive archive;
  std::istringstream is(bytes);
  archive.load_from(is);
  module.load(archive);
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const SampleTensors& train_set,
                  const SampleTensors* validation_set, std::ostream* progress) {
  validate(cfg);
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training split");
  TrainResult result;
  ModelConfig fitted = model_cfg;
  if (cfg.fit_input_stats) {
    const auto x = train_set.viewports.to(torch::kFloat64);
    const auto mean = x.mean({0, 1, 3, 4});
    const auto std = x.std({0, 1, 3, 4});
    for (int c = 0; c < 3; ++c) {
      fitted.input_mean[c] = mean[c].item<double>();
      // A constant channel keeps unit scale rather than dividing by zero.
      const double s = std[c].item<double>();
      fitted.input_std[c] = s > 1e-12 ? s : 1.0;
    }
  }
  result.model = build_model(fitted);
  auto& net = result.model;
  result.weights = UncertaintyWeights(1 + model_cfg.tasks.count());
  auto& uw = result.weights;
  uw->to(net->dtype());

  if (cfg.init_score_bias) {
    torch::NoGradGuard no_grad;
    net->main_head()->score_layer()->bias.fill_(train_set.mos.mean().item<double>());
  }

  std::vector<torch::Tensor> params = net->parameters();
  for (const auto& p : uw->parameters()) params.push_back(p);
  torch::optim::Adam optimizer(params, torch::optim::AdamOptions(cfg.learning_rate));

  const int64_t m = train_set.size();
  auto validate_epoch = [&](EpochLog& e) {
    if (!validation_set || validation_set->size() < 3) return;
    const auto pred = predict(net, validation_set->viewports, cfg.batch_size);
    std::vector<double> mos(validation_set->size());
    for (int64_t i = 0; i < validation_set->size(); ++i) mos[i] = validation_set->mos[i].item<double>();
    std::vector<double> mapped = pred.scores;
    if (mapped.size() >= 5) {
      const auto fit = fit_logistic(pred.scores, mos);
      if (fit.ok) {
        for (double& v : mapped) v = fit.params(v);
      }
    }
    e.val_plcc = plcc(mapped, mos);
    e.val_srcc = srcc(pred.scores, mos);
  };

  // Epoch 0: losses of the untrained model over the training order of epoch 1.
  {
    torch::NoGradGuard no_grad;
    net->train();
    LossSums sums;
    for (int64_t start = 0; start < m; start += cfg.batch_size) {
      const auto rows = torch::arange(start, std::min<int64_t>(m, start + cfg.batch_size), torch::kInt64);
      accumulate(sums, batch_losses(net, uw, train_set, rows, cfg.train_selection));
    }
    auto e = summarize(0, sums, model_cfg.tasks, uw);
    if (!std::isfinite(e.loss_total)) throw DivergenceError("non-finite loss before training");
    validate_epoch(e);
    result.log.push_back(e);
  }

  std::optional<double> best_srcc;
  std::string best_model, best_weights;
  std::vector<int64_t> order(m);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    net->train();
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    LossSums sums;
    for (int64_t start = 0; start < m; start += cfg.batch_size) {
      const int64_t end = std::min<int64_t>(m, start + cfg.batch_size);
      const auto rows = torch::tensor(std::vector<int64_t>(order.begin() + start, order.begin() + end),
                                      torch::kInt64);
      optimizer.zero_grad();
      auto step = batch_losses(net, uw, train_set, rows, cfg.train_selection);
      const double total = step.total.item<double>();
      if (!std::isfinite(total)) {
        throw DivergenceError("total loss became non-finite in epoch " + std::to_string(epoch));
      }
      step.total.backward();
      optimizer.step();
      accumulate(sums, step);
    }
    auto e = summarize(epoch, sums, model_cfg.tasks, uw);
    validate_epoch(e);
    result.log.push_back(e);
    if (progress) {
      *progress << "epoch " << epoch << "/" << cfg.epochs << " loss_total " << e.loss_total
                << " loss_main " << e.loss_main;
      if (e.val_srcc) *progress << " val_srcc " << *e.val_srcc;
      *progress << std::endl;
    }
    // Without a validation SRCC the latest epoch wins until one becomes available.
    const bool take = e.val_srcc ? (!best_srcc || *e.val_srcc > *best_srcc) : !best_srcc;
    if (take) {
      best_srcc = e.val_srcc;
      result.best_epoch = epoch;
      best_model = snapshot(*net);
      best_weights = snapshot(*uw);
    }
  }
  restore(*net, best_model);
  restore(*uw, best_weights);
  net->eval();
  return result;
}

TrainResult train(const DatasetManifest& manifest, const std::filesystem::path& data_root,
                  const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::filesystem::path& out_dir, std::ostream* progress) {
  validate(cfg);
  validate(model_cfg);
  const auto split = train_validation_split(manifest, cfg.val_fraction, cfg.seed);
  if (split.train.empty()) throw std::invalid_argument("train: manifest has no training records");
  const auto train_set = load_samples(manifest, data_root, split.train, model_cfg.views,
                                      model_cfg.viewport_size, model_cfg.fov);
  std::optional<SampleTensors> val_set;
  if (!split.validation.empty()) {
    val_set = load_samples(manifest, data_root, split.validation, model_cfg.views,
                           model_cfg.viewport_size, model_cfg.fov);
  }
  auto result = train(model_cfg, cfg, train_set, val_set ? &*val_set : nullptr, progress);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream log(out_dir / "train_log.csv", std::ios::binary);
    if (!log) throw std::runtime_error("cannot write " + (out_dir / "train_log.csv").string());
    log << training_log_csv(result.log);
    save_checkpoint(result.model, out_dir / "checkpoint");
    torch::serialize::OutputArchive archive;
    result.weights->save(archive);
    archive.save_to((out_dir / "checkpoint" / "uncertainty.pt").string());
  }
  return result;
}

}  // namespace mtaoiqa
