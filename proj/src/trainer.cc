#include "vp/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vp/error.h"
#include "vp/random.h"

namespace vp {

Optimizer ParseOptimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "adam") return Optimizer::kAdam;
  throw Error("unknown optimizer \"" + std::string(name) + "\" (expected sgd or adam)");
}

namespace {

class AdamState {
 public:
  explicit AdamState(const EncoderParams& shape) : m_(Zeroed(shape)), v_(Zeroed(shape)) {}

  void Apply(EncoderParams& params, const EncoderParams& grad, double lr) {
    ++step_;
    const double c1 = 1.0 - std::pow(kBeta1, step_);
    const double c2 = 1.0 - std::pow(kBeta2, step_);
    auto p = params.Arrays();
    auto g = grad.Arrays();
    auto m = m_.Arrays();
    auto v = v_.Arrays();
    for (std::size_t a = 0; a < p.size(); ++a) {
      for (std::size_t i = 0; i < p[a].size(); ++i) {
        m[a][i] = kBeta1 * m[a][i] + (1.0 - kBeta1) * g[a][i];
        v[a][i] = kBeta2 * v[a][i] + (1.0 - kBeta2) * g[a][i] * g[a][i];
        p[a][i] -= lr * (m[a][i] / c1) / (std::sqrt(v[a][i] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  static EncoderParams Zeroed(const EncoderParams& shape) {
    EncoderParams z = shape;
    for (auto a : z.Arrays()) std::fill(a.begin(), a.end(), 0.0);
    return z;
  }

  EncoderParams m_, v_;
  int step_ = 0;
};

}  // namespace

TrainLog Train(ReferenceEncoder& model, const Corpus& corpus, const Vocab& vocab,
               const TrainConfig& config) {
  if (corpus.empty()) throw Error("training corpus is empty");
  if (config.epochs < 1) throw Error("epochs must be at least 1");
  if (!(config.learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (config.batch_size < 1) throw Error("batch size must be at least 1");
  if (vocab.size() != model.vocab_size()) {
    throw Error("vocabulary size does not match the model");
  }

  const TaskSchema& schema = model.schema();
  std::vector<TokenizedDialog> full;
  std::vector<EncodedLabels> labels;
  full.reserve(corpus.size());
  for (const DialogRecord& r : corpus) {
    full.push_back(TokenizeDialog(r, vocab, std::numeric_limits<std::size_t>::max()));
    labels.push_back(EncodeLabels(r.labels, schema));
  }

  EncoderParams& params = model.mutable_params();
  EncoderParams grad = params;
  AdamState adam(params);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batches_per_epoch = (order.size() + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(batches_per_epoch) * config.epochs;
  std::size_t step = 0;

  TrainLog log;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng = MakeRng({config.seed, 0x7a11, static_cast<std::uint64_t>(epoch)});
    Shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      for (auto a : grad.Arrays()) std::fill(a.begin(), a.end(), 0.0);
      double batch_loss = 0.0;
      std::size_t batch_tokens = 0;
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = order[b];
        std::span<const TokenId> tokens = full[i].tokens;
        if (tokens.size() > config.max_len) {
          const auto start = UniformIndex(rng, tokens.size() - config.max_len + 1);
          tokens = tokens.subspan(start, config.max_len);
        }
        batch_loss += SequenceLossAndGradient(params, schema, tokens, labels[i], &grad);
        batch_tokens += tokens.size();
      }
      if (!std::isfinite(batch_loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                    ", batch starting at " + std::to_string(begin) +
                    "; try a smaller learning rate");
      }
      const double scale = 1.0 / static_cast<double>(batch_tokens);
      for (auto a : grad.Arrays()) {
        for (double& g : a) g *= scale;
      }
      const double lr = config.anneal ? config.learning_rate * (1.0 - step / total_steps)
                                      : config.learning_rate;
      ++step;
      if (config.optimizer == Optimizer::kAdam) {
        adam.Apply(params, grad, lr);
      } else {
        auto p = params.Arrays();
        auto g = grad.Arrays();
        for (std::size_t a = 0; a < p.size(); ++a) {
          for (std::size_t j = 0; j < p[a].size(); ++j) p[a][j] -= lr * g[a][j];
        }
      }
      epoch_loss += batch_loss;
      epoch_tokens += batch_tokens;
    }
    log.epoch_loss.push_back(epoch_loss / static_cast<double>(epoch_tokens));
  }
  return log;
}

}  // namespace vp
