#include "vp/loss.h"

#include <cmath>

#include "vp/error.h"

namespace vp {

double Pinball(double q_pred, double y, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error("quantile level must lie in (0, 1)");
  const double r = y - q_pred;
  return std::max(tau * r, (tau - 1.0) * r);
}

namespace {

double BinaryCrossEntropy(double p, bool positive) {
  return positive ? -std::log(p) : -std::log1p(-p);
}

}  // namespace

double TokenLoss(std::span<const PredictionFrame> frames, const EncodedLabels& labels,
                 std::span<const double> cost_levels, std::span<const bool> pad_mask) {
  if (frames.size() != pad_mask.size()) {
    throw Error("frames and pad mask differ in length");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (pad_mask[t]) continue;
    const PredictionFrame& f = frames[t];
    total += -std::log(f.issue.at(labels.issue));
    for (std::size_t a = 0; a < f.actions.size(); ++a) {
      total += BinaryCrossEntropy(f.actions[a], labels.actions.at(a));
    }
    total += BinaryCrossEntropy(f.no_recontact, labels.no_recontact);
    if (labels.cost) {
      for (std::size_t j = 0; j < cost_levels.size(); ++j) {
        total += Pinball(f.cost_quantiles.at(j), *labels.cost, cost_levels[j]);
      }
    }
  }
  // -log(1) is -0.0; report a clean zero
  return total + 0.0;
}

}  // namespace vp
