#ifndef VP_REFERENCE_ENCODER_H_
#define VP_REFERENCE_ENCODER_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vp/schema.h"

namespace vp {

// Parameters of the decayed prefix-pooling encoder:
//   s_t = (1 - decay) * s_{t-1} + decay * embedding[x_t],  s_{-1} = 0
// followed by affine heads on s_t. The cost head emits the lowest quantile
// directly and every further quantile as the previous one plus a softplus
// increment, so quantiles never cross.
struct EncoderParams {
  std::size_t vocab_size = 0;
  std::size_t dim = 32;
  double decay = 0.2;

  std::vector<double> embedding;  // vocab_size x dim, row-major
  std::vector<double> issue_w;    // K x dim
  std::vector<double> issue_b;    // K
  std::vector<double> action_w;   // M x dim
  std::vector<double> action_b;   // M
  std::vector<double> norecon_w;  // dim
  std::vector<double> norecon_b;  // 1
  std::vector<double> cost_w;     // L x dim; row 0 = lowest quantile, rows 1.. increments
  std::vector<double> cost_b;     // L

  // Zero-filled arrays shaped for `schema`.
  static EncoderParams Zeros(const TaskSchema& schema, std::size_t vocab_size,
                             std::size_t dim, double decay);
  // Embeddings uniform in [-0.05, 0.05], heads zero.
  static EncoderParams Initialize(const TaskSchema& schema, std::size_t vocab_size,
                                  std::size_t dim, double decay, std::uint64_t seed);

  // Every trainable array, in serialization order.
  std::vector<std::span<double>> Arrays();
  std::vector<std::span<const double>> Arrays() const;

  void CheckShape(const TaskSchema& schema) const;
};

class ReferenceEncoder : public Predictor {
 public:
  ReferenceEncoder(TaskSchema schema, EncoderParams params);

  const TaskSchema& schema() const override { return schema_; }
  std::size_t vocab_size() const override { return params_.vocab_size; }
  const EncoderParams& params() const { return params_; }
  EncoderParams& mutable_params() { return params_; }

  std::vector<PredictionFrame> Forward(std::span<const TokenId> tokens) const override;
  std::unique_ptr<PredictorState> NewState() const override;
  PredictionFrame Step(PredictorState& state, TokenId token) const override;

 private:
  TaskSchema schema_;
  EncoderParams params_;
};

// Summed token loss of one replicated-label sequence, computed from logits.
// When `grad` is non-null the exact gradient is added into it (same shape as
// `params`).
double SequenceLossAndGradient(const EncoderParams& params, const TaskSchema& schema,
                               std::span<const TokenId> tokens,
                               const EncodedLabels& labels, EncoderParams* grad);

}  // namespace vp

#endif  // VP_REFERENCE_ENCODER_H_
