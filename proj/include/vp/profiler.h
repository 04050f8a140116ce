#ifndef VP_PROFILER_H_
#define VP_PROFILER_H_

#include <cstddef>
#include <memory>
#include <vector>

#include "vp/corpus.h"
#include "vp/reference_encoder.h"
#include "vp/schema.h"
#include "vp/tokenizer.h"
#include "vp/trace.h"
#include "vp/trainer.h"
#include "vp/value.h"

namespace vp {

// Everything needed to turn raw dialogs into values: tokenizer vocabulary,
// a causal predictor, the baseline prior and the collapse calibration.
struct ProfilerModel {
  Vocab vocab;
  std::size_t max_len = 512;
  std::shared_ptr<const Predictor> predictor;
  Prior prior;
  ScaleCalibration calibration;

  const TaskSchema& schema() const { return predictor->schema(); }
};

struct FitOptions {
  std::size_t min_count = 1;
  std::size_t dim = 32;
  double decay = 0.2;
  std::vector<double> cost_levels = {0.1, 0.9};
  TrainConfig train;
  CollapseMode collapse = CollapseMode::kWeightedAverage;
  ActionAggregation action_aggregation = ActionAggregation::kSum;
};

struct FitResult {
  ProfilerModel model;
  TrainLog log;
};

// Builds the vocabulary and schema from `corpus`, trains a reference encoder,
// estimates the prior and calibrates the collapse scales on the training
// corpus's token-level values.
FitResult FitProfiler(const Corpus& corpus, const FitOptions& options);

// Prior + scale calibration for an already trained predictor.
void CalibrateProfiler(ProfilerModel& model, const Corpus& corpus,
                       CollapseMode mode = CollapseMode::kWeightedAverage,
                       ActionAggregation aggregation = ActionAggregation::kSum);

struct DialogProfile {
  TokenizedDialog dialog;
  std::vector<PredictionFrame> frames;
  ValueTrace trace;
};

// Offline profiling: first max_len tokens, chosen smoothing for turn values.
DialogProfile ProfileDialog(const ProfilerModel& model, const DialogRecord& record,
                            Smoothing smoothing = Smoothing::kOffline);

}  // namespace vp

#endif  // VP_PROFILER_H_
