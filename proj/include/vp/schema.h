#ifndef VP_SCHEMA_H_
#define VP_SCHEMA_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vp/corpus.h"
#include "vp/tokenizer.h"

namespace vp {

// Output layout of a predictor: K issue classes (softmax), M independent
// actions (sigmoid), the no-recontact probability, and optionally ordered
// cost quantiles.
struct TaskSchema {
  std::vector<std::string> issues;
  std::vector<std::string> actions;
  // Empty when the cost task is disabled.
  std::vector<double> cost_levels;

  std::size_t num_issues() const { return issues.size(); }
  std::size_t num_actions() const { return actions.size(); }
  bool has_cost() const { return !cost_levels.empty(); }

  void Validate() const;
  bool operator==(const TaskSchema&) const = default;

  // Sorted issue and action names seen in `corpus`; cost enabled with
  // `cost_levels` when any record carries a cost.
  static TaskSchema FromCorpus(const Corpus& corpus,
                               std::vector<double> cost_levels = {0.1, 0.9});
};

// LabelSet mapped onto schema indices.
struct EncodedLabels {
  std::size_t issue = 0;
  std::vector<bool> actions;
  bool no_recontact = true;
  std::optional<double> cost;
};

// Throws vp::Error when the labels use names unknown to the schema.
EncodedLabels EncodeLabels(const LabelSet& labels, const TaskSchema& schema);

struct PredictionFrame {
  std::vector<double> issue;
  std::vector<double> actions;
  double no_recontact = 0.5;
  // Non-decreasing, one per schema cost level.
  std::vector<double> cost_quantiles;

  bool operator==(const PredictionFrame&) const = default;
};

// Opaque per-sequence state for predictors that can extend a prefix one token
// at a time.
class PredictorState {
 public:
  virtual ~PredictorState() = default;
};

// A causal token-level predictor: frame t may depend on tokens 0..t only.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual const TaskSchema& schema() const = 0;
  virtual std::size_t vocab_size() const = 0;

  virtual std::vector<PredictionFrame> Forward(std::span<const TokenId> tokens) const = 0;

  // Returns nullptr when the predictor cannot run incrementally; callers must
  // then re-run Forward on the whole prefix.
  virtual std::unique_ptr<PredictorState> NewState() const { return nullptr; }
  virtual PredictionFrame Step(PredictorState& state, TokenId token) const;
};

}  // namespace vp

#endif  // VP_SCHEMA_H_
