#include "vp/profiler.h"

#include "vp/error.h"

namespace vp {

void CalibrateProfiler(ProfilerModel& model, const Corpus& corpus, CollapseMode mode,
                       ActionAggregation aggregation) {
  model.prior = EstimatePrior(corpus, model.schema());
  ScaleCalibration raw;
  raw.action_aggregation = aggregation;
  std::vector<ValueVector> samples;
  for (const DialogRecord& r : corpus) {
    const TokenizedDialog d = TokenizeDialog(r, model.vocab, model.max_len);
    for (const PredictionFrame& f : model.predictor->Forward(d.tokens)) {
      samples.push_back(FrameValue(f, model.prior, raw));
    }
  }
  model.calibration = CalibrateScales(samples, mode, aggregation);
}

FitResult FitProfiler(const Corpus& corpus, const FitOptions& options) {
  if (corpus.empty()) throw Error("training corpus is empty");
  Vocab vocab = BuildVocab(corpus, options.min_count);
  TaskSchema schema = TaskSchema::FromCorpus(corpus, options.cost_levels);
  auto encoder = std::make_shared<ReferenceEncoder>(
      schema, EncoderParams::Initialize(schema, vocab.size(), options.dim, options.decay,
                                        options.train.seed));
  FitResult result;
  result.log = Train(*encoder, corpus, vocab, options.train);
  result.model.vocab = std::move(vocab);
  result.model.max_len = options.train.max_len;
  result.model.predictor = std::move(encoder);
  CalibrateProfiler(result.model, corpus, options.collapse, options.action_aggregation);
  return result;
}

DialogProfile ProfileDialog(const ProfilerModel& model, const DialogRecord& record,
                            Smoothing smoothing) {
  DialogProfile p;
  p.dialog = TokenizeDialog(record, model.vocab, model.max_len);
  p.frames = model.predictor->Forward(p.dialog.tokens);
  p.trace = Trace(p.frames, p.dialog.turn_starts, model.prior, model.calibration, smoothing);
  return p;
}

}  // namespace vp
