#include "vp/metrics.h"

#include <algorithm>
#include <cmath>

#include "vp/error.h"

namespace vp {

namespace {

std::size_t Argmax(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

MetricsReport AccuracyReport(const Predictor& predictor, const Vocab& vocab,
                             const Corpus& corpus, std::span<const std::size_t> positions,
                             std::size_t max_len) {
  if (corpus.empty()) throw Error("accuracy report needs a non-empty test corpus");
  for (std::size_t pos : positions) {
    if (pos >= max_len) throw Error("position " + std::to_string(pos) + " is beyond max_len");
  }
  const TaskSchema& schema = predictor.schema();
  MetricsReport report;
  report.num_dialogs = corpus.size();
  std::vector<std::size_t> issue_hits(positions.size(), 0), recon_hits(positions.size(), 0);
  report.actions.resize(schema.num_actions());
  for (std::size_t a = 0; a < schema.num_actions(); ++a) report.actions[a].name = schema.actions[a];

  for (const DialogRecord& r : corpus) {
    const EncodedLabels labels = EncodeLabels(r.labels, schema);
    const TokenizedDialog d = TokenizeDialog(r, vocab, max_len);
    const std::vector<PredictionFrame> frames = predictor.Forward(d.tokens);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const PredictionFrame& f = frames[std::min(positions[i], frames.size() - 1)];
      if (Argmax(f.issue) == labels.issue) ++issue_hits[i];
      if ((f.no_recontact >= 0.5) == labels.no_recontact) ++recon_hits[i];
    }
    const PredictionFrame& last = frames.back();
    for (std::size_t a = 0; a < schema.num_actions(); ++a) {
      const bool predicted = last.actions[a] >= 0.5;
      const bool actual = labels.actions[a];
      ActionMetrics& m = report.actions[a];
      m.predicted_positive += predicted;
      m.actual_positive += actual;
      m.true_positive += predicted && actual;
    }
  }
  const double n = static_cast<double>(corpus.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    report.positions.push_back({positions[i], static_cast<double>(issue_hits[i]) / n,
                                static_cast<double>(recon_hits[i]) / n});
  }
  for (ActionMetrics& m : report.actions) {
    if (m.predicted_positive > 0) {
      m.precision = static_cast<double>(m.true_positive) / static_cast<double>(m.predicted_positive);
    }
    if (m.actual_positive > 0) {
      m.recall = static_cast<double>(m.true_positive) / static_cast<double>(m.actual_positive);
    }
  }
  return report;
}

TaskCalibration ComputeCalibration(std::string task, std::span<const double> confidence,
                                   const std::vector<bool>& hit, std::size_t n_bins) {
  if (n_bins < 2) throw Error("calibration needs at least 2 bins");
  if (confidence.size() != hit.size()) throw Error("confidence and outcome lengths differ");
  TaskCalibration out;
  out.task = std::move(task);
  out.bins.resize(n_bins);
  std::vector<double> conf_sum(n_bins, 0.0), hit_sum(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    out.bins[b].lower = static_cast<double>(b) / static_cast<double>(n_bins);
    out.bins[b].upper = static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double c = std::clamp(confidence[i], 0.0, 1.0);
    auto b = static_cast<std::size_t>(c * static_cast<double>(n_bins));
    b = std::min(b, n_bins - 1);
    ++out.bins[b].count;
    conf_sum[b] += c;
    hit_sum[b] += hit[i] ? 1.0 : 0.0;
  }
  const double total = static_cast<double>(confidence.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    ReliabilityBin& bin = out.bins[b];
    if (bin.count == 0) continue;
    const double n = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / n;
    bin.accuracy = hit_sum[b] / n;
    out.ece += n / total * std::abs(bin.accuracy - bin.mean_confidence);
  }
  return out;
}

std::vector<TaskCalibration> CalibrationReport(const Predictor& predictor, const Vocab& vocab,
                                               const Corpus& corpus, std::size_t n_bins,
                                               std::size_t max_len) {
  const TaskSchema& schema = predictor.schema();
  const std::size_t m = schema.num_actions();
  std::vector<double> issue_conf, recon_conf;
  std::vector<bool> issue_hit, recon_hit;
  std::vector<std::vector<double>> action_conf(m);
  std::vector<std::vector<bool>> action_hit(m);
  for (const DialogRecord& r : corpus) {
    const EncodedLabels labels = EncodeLabels(r.labels, schema);
    const TokenizedDialog d = TokenizeDialog(r, vocab, max_len);
    const PredictionFrame last = predictor.Forward(d.tokens).back();
    const std::size_t top = Argmax(last.issue);
    issue_conf.push_back(last.issue[top]);
    issue_hit.push_back(top == labels.issue);
    recon_conf.push_back(last.no_recontact);
    recon_hit.push_back(labels.no_recontact);
    for (std::size_t a = 0; a < m; ++a) {
      action_conf[a].push_back(last.actions[a]);
      action_hit[a].push_back(labels.actions[a]);
    }
  }
  auto calibrate = [n_bins](std::string name, const std::vector<double>& c,
                            const std::vector<bool>& h) {
    return ComputeCalibration(std::move(name), c, h, n_bins);
  };
  std::vector<TaskCalibration> out;
  out.push_back(calibrate("issue", issue_conf, issue_hit));
  out.push_back(calibrate("no_recontact", recon_conf, recon_hit));
  for (std::size_t a = 0; a < m; ++a) {
    out.push_back(calibrate("action:" + schema.actions[a], action_conf[a], action_hit[a]));
  }
  return out;
}

}  // namespace vp
