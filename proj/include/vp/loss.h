#ifndef VP_LOSS_H_
#define VP_LOSS_H_

#include <span>
#include <vector>

#include "vp/schema.h"

namespace vp {

// Quantile (check) loss: max(tau * (y - q), (tau - 1) * (y - q)).
double Pinball(double q_pred, double y, double tau);

// Sum over unmasked tokens of: issue cross-entropy, per-action binary
// cross-entropy, no-recontact binary cross-entropy, and the pinball loss of
// every cost quantile when the labels carry a cost. The same dialog labels
// score every token. `pad_mask[t]` true means token t is padding.
double TokenLoss(std::span<const PredictionFrame> frames, const EncodedLabels& labels,
                 std::span<const double> cost_levels, std::span<const bool> pad_mask);

}  // namespace vp

#endif  // VP_LOSS_H_
