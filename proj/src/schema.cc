#include "vp/schema.h"

#include <algorithm>
#include <set>

#include "vp/error.h"

namespace vp {

void TaskSchema::Validate() const {
  if (issues.size() < 2) throw Error("task schema needs at least 2 issue classes");
  for (std::size_t i = 0; i < cost_levels.size(); ++i) {
    const double q = cost_levels[i];
    if (!(q > 0.0 && q < 1.0)) throw Error("cost quantile levels must lie in (0, 1)");
    if (i > 0 && !(q > cost_levels[i - 1])) {
      throw Error("cost quantile levels must be strictly increasing");
    }
  }
}

TaskSchema TaskSchema::FromCorpus(const Corpus& corpus, std::vector<double> cost_levels) {
  std::set<std::string> issues, actions;
  bool any_cost = false;
  for (const DialogRecord& r : corpus) {
    issues.insert(r.labels.issue);
    actions.insert(r.labels.actions.begin(), r.labels.actions.end());
    any_cost = any_cost || r.labels.cost.has_value();
  }
  TaskSchema schema;
  schema.issues.assign(issues.begin(), issues.end());
  schema.actions.assign(actions.begin(), actions.end());
  if (any_cost) schema.cost_levels = std::move(cost_levels);
  schema.Validate();
  return schema;
}

EncodedLabels EncodeLabels(const LabelSet& labels, const TaskSchema& schema) {
  EncodedLabels out;
  auto it = std::find(schema.issues.begin(), schema.issues.end(), labels.issue);
  if (it == schema.issues.end()) {
    throw Error("issue \"" + labels.issue + "\" is not in the model schema");
  }
  out.issue = static_cast<std::size_t>(it - schema.issues.begin());
  out.actions.assign(schema.num_actions(), false);
  for (const std::string& a : labels.actions) {
    auto at = std::find(schema.actions.begin(), schema.actions.end(), a);
    if (at == schema.actions.end()) {
      throw Error("action \"" + a + "\" is not in the model schema");
    }
    out.actions[static_cast<std::size_t>(at - schema.actions.begin())] = true;
  }
  out.no_recontact = !labels.recontact;
  out.cost = labels.cost;
  return out;
}

PredictionFrame Predictor::Step(PredictorState&, TokenId) const {
  throw Error("predictor does not support incremental evaluation");
}

}  // namespace vp
