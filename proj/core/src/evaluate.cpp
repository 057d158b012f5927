#include "mtaoiqa/evaluate.hpp"

#include <stdexcept>

namespace mtaoiqa {

std::vector<std::string> strata_for(Taxonomy taxonomy) {
  if (taxonomy == Taxonomy::kOiq) return {"R1", "R2", "R3", "R4"};
  return {"BD", "GB", "GN", "ST"};
}

std::string stratum_of(const SampleRecord& record, Taxonomy taxonomy) {
  if (taxonomy == Taxonomy::kOiq) return "R" + std::to_string(record.range_label + 1);
  return std::string(to_code(record.spec.type));
}

Predictions predict(MtaoiqaNet& net, const torch::Tensor& viewports, int batch_size) {
  const bool was_training = net->is_training();
  net->eval();
  torch::NoGradGuard no_grad;
  Predictions out;
  const int64_t m = viewports.size(0);
  auto argmax_rows = [](const std::optional<torch::Tensor>& probs, std::vector<std::optional<int>>& dst,
                        int64_t rows) {
    if (!probs) {
      dst.insert(dst.end(), rows, std::nullopt);
      return;
    }
    const auto idx = probs->argmax(1).to(torch::kInt64).contiguous();
    for (int64_t i = 0; i < rows; ++i) dst.push_back(static_cast<int>(idx[i].item<int64_t>()));
  };
  for (int64_t start = 0; start < m; start += batch_size) {
    const int64_t rows = std::min<int64_t>(batch_size, m - start);
    const auto batch = viewports.narrow(0, start, rows).to(net->dtype());
    const auto res = net->forward(batch, SelectionMode::kHard);
    const auto scores = res.score.to(torch::kFloat64).contiguous();
    for (int64_t i = 0; i < rows; ++i) out.scores.push_back(scores[i].item<double>());
    argmax_rows(res.aux.range, out.range, rows);
    argmax_rows(res.aux.type, out.type, rows);
    argmax_rows(res.aux.degree, out.degree, rows);
    for (int64_t i = 0; i < rows; ++i) {
      std::array<int, 4> chosen{-1, -1, -1, -1};
      if (res.selection) {
        for (int t = 0; t < 4; ++t) chosen[t] = static_cast<int>(res.selection->chosen[t][i].item<int64_t>());
      }
      out.chosen.push_back(chosen);
    }
  }
  net->train(was_training);
  return out;
}

std::vector<ScoredSample> scored_samples(const DatasetManifest& manifest,
                                         const SampleTensors& samples, const Predictions& pred) {
  std::vector<ScoredSample> out;
  out.reserve(samples.records.size());
  for (std::size_t i = 0; i < samples.records.size(); ++i) {
    const auto& rec = manifest.records.at(samples.records[i]);
    ScoredSample s;
    s.prediction = pred.scores[i];
    s.mos = rec.pseudo_mos;
    s.stratum = stratum_of(rec, manifest.taxonomy);
    s.range_pred = pred.range[i];
    s.type_pred = pred.type[i];
    s.degree_pred = pred.degree[i];
    s.range_label = rec.range_label;
    s.type_label = rec.type_label;
    s.degree_label = rec.degree_label;
    s.chosen = pred.chosen[i];
    out.push_back(std::move(s));
  }
  return out;
}

EvalReport evaluate(MtaoiqaNet& net, const DatasetManifest& manifest, const SampleTensors& samples) {
  if (samples.size() == 0) throw std::invalid_argument("evaluate: no records to evaluate");
  const auto pred = predict(net, samples.viewports);
  const auto scored = scored_samples(manifest, samples, pred);
  const auto info = manifest.info();
  ClassCounts classes{info.range_classes, info.type_classes, info.degree_classes,
                      net->config().range_classes == info.range_classes};
  return compute_report(scored, strata_for(manifest.taxonomy), classes);
}

EvalReport evaluate(MtaoiqaNet& net, const DatasetManifest& manifest,
                    const std::filesystem::path& data_root, Split split) {
  const auto records = split_records(manifest, split);
  if (records.empty()) throw std::invalid_argument("evaluate: the requested split is empty");
  const auto& cfg = net->config();
  const auto samples = load_samples(manifest, data_root, records, cfg.views, cfg.viewport_size, cfg.fov);
  return evaluate(net, manifest, samples);
}

}  // namespace mtaoiqa
