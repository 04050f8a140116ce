#ifndef VP_VALUE_H_
#define VP_VALUE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "vp/corpus.h"
#include "vp/schema.h"

namespace vp {

// Non-informative baseline: Laplace add-one estimates of the label
// distributions over a training corpus.
struct Prior {
  std::vector<double> issue;    // simplex over K
  std::vector<double> actions;  // Bernoulli parameter per action
  double no_recontact = 0.5;

  std::size_t num_dialogs = 0;
  std::vector<std::size_t> issue_counts;
  std::vector<std::size_t> action_counts;
  std::size_t no_recontact_count = 0;

  bool operator==(const Prior&) const = default;
};

Prior EstimatePrior(std::span<const EncodedLabels> labels, const TaskSchema& schema);
Prior EstimatePrior(const Corpus& corpus, const TaskSchema& schema);

// Per-aspect values. issue/action are in nats, norecon is a probability,
// cost is present only when the predictor has a cost head, total is the
// collapsed scalar.
struct ValueVector {
  double issue = 0.0;
  double action = 0.0;
  double norecon = 0.0;
  std::optional<double> cost;
  double total = 0.0;

  bool operator==(const ValueVector&) const = default;
};

// KL(p || p0) = sum_i p_i ln(p_i / p0_i), with 0 ln 0 = 0.
double ConfidenceValue(std::span<const double> p, std::span<const double> p0);
// KL between Bernoulli(p) and Bernoulli(p0).
double BernoulliKl(double p, double p0);
double PreferenceValue(double p_no_recontact);

enum class ActionAggregation { kSum, kMean };
double ActionValue(std::span<const double> probs, std::span<const double> prior,
                   ActionAggregation aggregation = ActionAggregation::kSum);

enum class RegressionMode { kConfidence, kCost };
// kConfidence: minus the interval length; kCost: minus the upper quantile.
double RegressionValue(double q_low, double q_high, RegressionMode mode);

enum class CollapseMode { kWeightedAverage, kQuantileSum };

std::string_view CollapseModeName(CollapseMode mode);
CollapseMode ParseCollapseMode(std::string_view name);

struct ScaleCalibration {
  double alpha = 1.0;
  double beta = 1.0;
  CollapseMode mode = CollapseMode::kWeightedAverage;
  ActionAggregation action_aggregation = ActionAggregation::kSum;
  RegressionMode cost_mode = RegressionMode::kCost;
  // Corpus min/max of the collapsed value; when set the total is mapped
  // affinely so that min -> 0 and max -> 1 (values outside are not clamped).
  std::optional<std::pair<double, double>> range;
  // Sorted calibration samples per component, required by kQuantileSum.
  std::vector<double> issue_samples;
  std::vector<double> action_samples;
  std::vector<double> norecon_samples;

  void Validate() const;
  bool operator==(const ScaleCalibration&) const = default;
};

// Collapses issue/action/norecon of `v` into a scalar (v.total is ignored).
double Collapse(const ValueVector& v, const ScaleCalibration& calibration);

// alpha and beta match the P90 of the issue and action values to the P90 of
// the no-recontact values (weight 1 when a denominator P90 is <= 1e-9), then
// the min/max of the collapsed samples are stored for normalization.
ScaleCalibration CalibrateScales(std::span<const ValueVector> samples,
                                 CollapseMode mode = CollapseMode::kWeightedAverage,
                                 ActionAggregation aggregation = ActionAggregation::kSum);

// Values of one prediction frame, including the collapsed total.
ValueVector FrameValue(const PredictionFrame& frame, const Prior& prior,
                       const ScaleCalibration& calibration);

// Value before any token is read: zero information, prior no-recontact rate.
ValueVector BaselineValue(const Prior& prior, const ScaleCalibration& calibration);

// Nearest-rank empirical quantile (rank ceil(q * n), 1-based) of unsorted data.
double NearestRankQuantile(std::vector<double> values, double q);

}  // namespace vp

#endif  // VP_VALUE_H_
