#ifndef VP_TRAINER_H_
#define VP_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "vp/corpus.h"
#include "vp/reference_encoder.h"
#include "vp/tokenizer.h"

namespace vp {

enum class Optimizer { kSgd, kAdam };

Optimizer ParseOptimizer(std::string_view name);

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t max_len = 512;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;
  // Scale the step size linearly from learning_rate down to 0 over the run.
  bool anneal = false;
};

struct TrainLog {
  // Mean per-token loss over each epoch.
  std::vector<double> epoch_loss;
};

// Mini-batch descent on the summed token loss, normalized by the number of
// tokens in the batch. Dialogs longer than max_len contribute a random
// window, redrawn every epoch. Deterministic for a given seed. Throws
// vp::Error if the loss stops being finite.
TrainLog Train(ReferenceEncoder& model, const Corpus& corpus, const Vocab& vocab,
               const TrainConfig& config);

}  // namespace vp

#endif  // VP_TRAINER_H_
