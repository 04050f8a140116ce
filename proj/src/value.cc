#include "vp/value.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "vp/error.h"

namespace vp {

Prior EstimatePrior(std::span<const EncodedLabels> labels, const TaskSchema& schema) {
  if (labels.empty()) throw Error("cannot estimate a prior from an empty corpus");
  const std::size_t k = schema.num_issues();
  const std::size_t m = schema.num_actions();
  Prior prior;
  prior.num_dialogs = labels.size();
  prior.issue_counts.assign(k, 0);
  prior.action_counts.assign(m, 0);
  for (const EncodedLabels& l : labels) {
    ++prior.issue_counts.at(l.issue);
    for (std::size_t a = 0; a < m; ++a) {
      if (l.actions.at(a)) ++prior.action_counts[a];
    }
    if (l.no_recontact) ++prior.no_recontact_count;
  }
  const double n = static_cast<double>(prior.num_dialogs);
  for (std::size_t c : prior.issue_counts) {
    prior.issue.push_back((static_cast<double>(c) + 1.0) / (n + static_cast<double>(k)));
  }
  for (std::size_t c : prior.action_counts) {
    prior.actions.push_back((static_cast<double>(c) + 1.0) / (n + 2.0));
  }
  prior.no_recontact = (static_cast<double>(prior.no_recontact_count) + 1.0) / (n + 2.0);
  return prior;
}

Prior EstimatePrior(const Corpus& corpus, const TaskSchema& schema) {
  std::vector<EncodedLabels> labels;
  labels.reserve(corpus.size());
  for (const DialogRecord& r : corpus) labels.push_back(EncodeLabels(r.labels, schema));
  return EstimatePrior(labels, schema);
}

double ConfidenceValue(std::span<const double> p, std::span<const double> p0) {
  if (p.size() != p0.size()) {
    throw Error("distribution arity mismatch: " + std::to_string(p.size()) + " vs " +
                std::to_string(p0.size()));
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / p0[i]);
  }
  // KL is non-negative; rounding can leave a tiny negative residue near p == p0
  return std::max(kl, 0.0);
}

double BernoulliKl(double p, double p0) {
  const double two[] = {p, 1.0 - p};
  const double base[] = {p0, 1.0 - p0};
  return ConfidenceValue(two, base);
}

double PreferenceValue(double p_no_recontact) { return p_no_recontact; }

double ActionValue(std::span<const double> probs, std::span<const double> prior,
                   ActionAggregation aggregation) {
  if (probs.size() != prior.size()) throw Error("action arity mismatch");
  double sum = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) sum += BernoulliKl(probs[a], prior[a]);
  if (aggregation == ActionAggregation::kMean && !probs.empty()) {
    sum /= static_cast<double>(probs.size());
  }
  return sum;
}

double RegressionValue(double q_low, double q_high, RegressionMode mode) {
  if (q_low > q_high) throw Error("lower quantile exceeds upper quantile");
  return mode == RegressionMode::kConfidence ? -(q_high - q_low) : -q_high;
}

std::string_view CollapseModeName(CollapseMode mode) {
  return mode == CollapseMode::kQuantileSum ? "quantile_sum" : "weighted_average";
}

CollapseMode ParseCollapseMode(std::string_view name) {
  if (name == "weighted_average") return CollapseMode::kWeightedAverage;
  if (name == "quantile_sum") return CollapseMode::kQuantileSum;
  throw Error("unknown collapse mode \"" + std::string(name) + "\"");
}

void ScaleCalibration::Validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Error("collapse weights must be finite and non-negative");
  }
  if (range && !(range->first < range->second)) {
    throw Error("normalization range needs min < max");
  }
  if (mode == CollapseMode::kQuantileSum &&
      (issue_samples.empty() || action_samples.empty() || norecon_samples.empty())) {
    throw Error("quantile_sum collapse needs calibration distributions");
  }
}

namespace {

// Fraction of sorted samples <= x.
double EmpiricalCdf(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double RawCollapse(const ValueVector& v, const ScaleCalibration& c) {
  if (c.mode == CollapseMode::kQuantileSum) {
    return EmpiricalCdf(c.issue_samples, v.issue) + EmpiricalCdf(c.action_samples, v.action) +
           EmpiricalCdf(c.norecon_samples, v.norecon);
  }
  return c.alpha * v.issue + c.beta * v.action + v.norecon;
}

// At most `cap` evenly spaced order statistics of the sorted data.
std::vector<double> Thin(std::vector<double> sorted, std::size_t cap) {
  if (sorted.size() <= cap) return sorted;
  std::vector<double> out(cap);
  for (std::size_t i = 0; i < cap; ++i) {
    out[i] = sorted[i * (sorted.size() - 1) / (cap - 1)];
  }
  return out;
}

}  // namespace

double Collapse(const ValueVector& v, const ScaleCalibration& calibration) {
  calibration.Validate();
  double total = RawCollapse(v, calibration);
  if (calibration.range) {
    const auto [lo, hi] = *calibration.range;
    total = (total - lo) / (hi - lo);
  }
  return total;
}

double NearestRankQuantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  const std::size_t n = values.size();
  // the epsilon keeps products such as 0.7 * 10 from rounding up a rank
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   values.end());
  return values[rank - 1];
}

ScaleCalibration CalibrateScales(std::span<const ValueVector> samples, CollapseMode mode,
                                 ActionAggregation aggregation) {
  if (samples.empty()) throw Error("cannot calibrate scales from an empty sample");
  if (samples.size() < 100) {
    std::cerr << "warning: calibrating value scales from only " << samples.size()
              << " samples\n";
  }
  std::vector<double> issue, action, norecon;
  for (const ValueVector& v : samples) {
    issue.push_back(v.issue);
    action.push_back(v.action);
    norecon.push_back(v.norecon);
  }
  ScaleCalibration c;
  c.mode = mode;
  c.action_aggregation = aggregation;
  const double ref = NearestRankQuantile(norecon, 0.9);
  const double p90_issue = NearestRankQuantile(issue, 0.9);
  const double p90_action = NearestRankQuantile(action, 0.9);
  c.alpha = p90_issue > 1e-9 ? ref / p90_issue : 1.0;
  c.beta = p90_action > 1e-9 ? ref / p90_action : 1.0;
  if (!(c.alpha > 0.0)) c.alpha = 1.0;
  if (!(c.beta > 0.0)) c.beta = 1.0;

  if (mode == CollapseMode::kQuantileSum) {
    constexpr std::size_t kMaxSamples = 4096;
    std::sort(issue.begin(), issue.end());
    std::sort(action.begin(), action.end());
    std::sort(norecon.begin(), norecon.end());
    c.issue_samples = Thin(issue, kMaxSamples);
    c.action_samples = Thin(action, kMaxSamples);
    c.norecon_samples = Thin(norecon, kMaxSamples);
  }

  double lo = RawCollapse(samples[0], c);
  double hi = lo;
  for (const ValueVector& v : samples) {
    const double t = RawCollapse(v, c);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (lo < hi) c.range = {lo, hi};
  return c;
}

ValueVector FrameValue(const PredictionFrame& frame, const Prior& prior,
                       const ScaleCalibration& calibration) {
  ValueVector v;
  v.issue = ConfidenceValue(frame.issue, prior.issue);
  v.action = ActionValue(frame.actions, prior.actions, calibration.action_aggregation);
  v.norecon = PreferenceValue(frame.no_recontact);
  if (frame.cost_quantiles.size() >= 2) {
    v.cost = RegressionValue(frame.cost_quantiles.front(), frame.cost_quantiles.back(),
                             calibration.cost_mode);
  }
  v.total = Collapse(v, calibration);
  return v;
}

ValueVector BaselineValue(const Prior& prior, const ScaleCalibration& calibration) {
  ValueVector v;
  v.norecon = prior.no_recontact;
  v.total = Collapse(v, calibration);
  return v;
}

}  // namespace vp
