#ifndef VP_METRICS_H_
#define VP_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vp/corpus.h"
#include "vp/schema.h"
#include "vp/tokenizer.h"

namespace vp {

struct PositionAccuracy {
  std::size_t position = 0;
  double issue_accuracy = 0.0;
  // Thresholded at P(no recontact) >= 0.5.
  double no_recontact_accuracy = 0.0;
};

// Precision is undefined when the action is never predicted, recall when it
// never occurs.
struct ActionMetrics {
  std::string name;
  std::size_t predicted_positive = 0;
  std::size_t actual_positive = 0;
  std::size_t true_positive = 0;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct TaskCalibration {
  std::string task;
  double ece = 0.0;
  std::vector<ReliabilityBin> bins;
};

struct MetricsReport {
  std::size_t num_dialogs = 0;
  std::vector<PositionAccuracy> positions;
  std::vector<ActionMetrics> actions;
  std::vector<TaskCalibration> calibration;
};

// Issue and no-recontact accuracy at each token position (dialogs shorter
// than a position are scored at their last token), and per-action
// precision/recall at the last token, 0.5 threshold.
MetricsReport AccuracyReport(const Predictor& predictor, const Vocab& vocab,
                             const Corpus& corpus, std::span<const std::size_t> positions,
                             std::size_t max_len);

// Equal-width bins over [0, 1]. `confidence[i]` is the predicted probability
// of the event and `hit[i]` whether it happened; ECE is
// sum_b n_b / N * |accuracy_b - mean confidence_b|.
TaskCalibration ComputeCalibration(std::string task, std::span<const double> confidence,
                                   const std::vector<bool>& hit, std::size_t n_bins);

// Last-token calibration per task: "issue" uses the top-class probability and
// whether the argmax is right; "no_recontact" and "action:<name>" use the
// positive-class probability against the label.
std::vector<TaskCalibration> CalibrationReport(const Predictor& predictor, const Vocab& vocab,
                                               const Corpus& corpus, std::size_t n_bins,
                                               std::size_t max_len);

}  // namespace vp

#endif  // VP_METRICS_H_
