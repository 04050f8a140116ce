#include "vp/reference_encoder.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vp/error.h"
#include "vp/math_util.h"
#include "vp/random.h"

namespace vp {

EncoderParams EncoderParams::Zeros(const TaskSchema& schema, std::size_t vocab_size,
                                   std::size_t dim, double decay) {
  if (dim == 0) throw Error("encoder dimension must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw Error("decay must lie in (0, 1]");
  EncoderParams p;
  p.vocab_size = vocab_size;
  p.dim = dim;
  p.decay = decay;
  const std::size_t k = schema.num_issues();
  const std::size_t m = schema.num_actions();
  const std::size_t l = schema.cost_levels.size();
  p.embedding.assign(vocab_size * dim, 0.0);
  p.issue_w.assign(k * dim, 0.0);
  p.issue_b.assign(k, 0.0);
  p.action_w.assign(m * dim, 0.0);
  p.action_b.assign(m, 0.0);
  p.norecon_w.assign(dim, 0.0);
  p.norecon_b.assign(1, 0.0);
  p.cost_w.assign(l * dim, 0.0);
  p.cost_b.assign(l, 0.0);
  return p;
}

EncoderParams EncoderParams::Initialize(const TaskSchema& schema, std::size_t vocab_size,
                                        std::size_t dim, double decay,
                                        std::uint64_t seed) {
  EncoderParams p = Zeros(schema, vocab_size, dim, decay);
  Rng rng = MakeRng({seed, 0xe3bedd});
  for (double& w : p.embedding) w = UniformReal(rng, -0.05, 0.05);
  return p;
}

std::vector<std::span<double>> EncoderParams::Arrays() {
  return {embedding, issue_w, issue_b, action_w, action_b,
          norecon_w, norecon_b, cost_w, cost_b};
}

std::vector<std::span<const double>> EncoderParams::Arrays() const {
  return {embedding, issue_w, issue_b, action_w, action_b,
          norecon_w, norecon_b, cost_w, cost_b};
}

void EncoderParams::CheckShape(const TaskSchema& schema) const {
  const std::size_t k = schema.num_issues();
  const std::size_t m = schema.num_actions();
  const std::size_t l = schema.cost_levels.size();
  const bool ok = embedding.size() == vocab_size * dim && issue_w.size() == k * dim &&
                  issue_b.size() == k && action_w.size() == m * dim &&
                  action_b.size() == m && norecon_w.size() == dim &&
                  norecon_b.size() == 1 && cost_w.size() == l * dim &&
                  cost_b.size() == l;
  if (!ok) throw Error("encoder parameters do not match the task schema");
  if (dim == 0 || !(decay > 0.0 && decay <= 1.0)) {
    throw Error("invalid encoder dimension or decay");
  }
  for (std::span<const double> a : Arrays()) {
    for (double v : a) {
      if (!std::isfinite(v)) throw Error("encoder parameters contain non-finite values");
    }
  }
}

namespace {

double Dot(const double* w, std::span<const double> s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * s[i];
  return acc;
}

// Raw head outputs before the link functions.
struct HeadLogits {
  std::vector<double> issue;
  std::vector<double> actions;
  double norecon = 0.0;
  std::vector<double> cost;  // lowest quantile, then increment pre-activations
};

HeadLogits ComputeLogits(const EncoderParams& p, std::span<const double> s) {
  HeadLogits h;
  const std::size_t d = p.dim;
  h.issue.resize(p.issue_b.size());
  for (std::size_t k = 0; k < h.issue.size(); ++k) {
    h.issue[k] = p.issue_b[k] + Dot(&p.issue_w[k * d], s);
  }
  h.actions.resize(p.action_b.size());
  for (std::size_t a = 0; a < h.actions.size(); ++a) {
    h.actions[a] = p.action_b[a] + Dot(&p.action_w[a * d], s);
  }
  h.norecon = p.norecon_b[0] + Dot(p.norecon_w.data(), s);
  h.cost.resize(p.cost_b.size());
  for (std::size_t j = 0; j < h.cost.size(); ++j) {
    h.cost[j] = p.cost_b[j] + Dot(&p.cost_w[j * d], s);
  }
  return h;
}

std::vector<double> Softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - mx);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> CostQuantiles(const std::vector<double>& z) {
  std::vector<double> q(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    q[j] = j == 0 ? z[0] : q[j - 1] + Softplus(z[j]);
  }
  return q;
}

PredictionFrame FrameFromState(const EncoderParams& p, std::span<const double> s) {
  HeadLogits h = ComputeLogits(p, s);
  PredictionFrame f;
  f.issue = Softmax(h.issue);
  f.actions.resize(h.actions.size());
  for (std::size_t a = 0; a < h.actions.size(); ++a) f.actions[a] = Sigmoid(h.actions[a]);
  f.no_recontact = Sigmoid(h.norecon);
  f.cost_quantiles = CostQuantiles(h.cost);
  return f;
}

void Advance(const EncoderParams& p, std::vector<double>& s, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= p.vocab_size) {
    throw Error("token id " + std::to_string(token) + " out of range for vocabulary of " +
                std::to_string(p.vocab_size));
  }
  const double keep = 1.0 - p.decay;
  const double* e = &p.embedding[static_cast<std::size_t>(token) * p.dim];
  for (std::size_t i = 0; i < p.dim; ++i) s[i] = keep * s[i] + p.decay * e[i];
}

class EncoderState : public PredictorState {
 public:
  explicit EncoderState(std::size_t dim) : s(dim, 0.0) {}
  std::vector<double> s;
};

}  // namespace

ReferenceEncoder::ReferenceEncoder(TaskSchema schema, EncoderParams params)
    : schema_(std::move(schema)), params_(std::move(params)) {
  schema_.Validate();
  params_.CheckShape(schema_);
}

std::vector<PredictionFrame> ReferenceEncoder::Forward(std::span<const TokenId> tokens) const {
  std::vector<PredictionFrame> frames;
  frames.reserve(tokens.size());
  EncoderState state(params_.dim);
  for (TokenId t : tokens) frames.push_back(Step(state, t));
  return frames;
}

std::unique_ptr<PredictorState> ReferenceEncoder::NewState() const {
  return std::make_unique<EncoderState>(params_.dim);
}

PredictionFrame ReferenceEncoder::Step(PredictorState& state, TokenId token) const {
  auto& s = dynamic_cast<EncoderState&>(state).s;
  Advance(params_, s, token);
  return FrameFromState(params_, s);
}

double SequenceLossAndGradient(const EncoderParams& p, const TaskSchema& schema,
                               std::span<const TokenId> tokens,
                               const EncodedLabels& labels, EncoderParams* grad) {
  const std::size_t d = p.dim;
  const std::size_t n = tokens.size();
  const std::size_t k_issues = p.issue_b.size();
  const std::size_t m = p.action_b.size();
  const std::size_t l = p.cost_b.size();
  const bool use_cost = labels.cost.has_value() && l > 0;

  std::vector<double> states(n * d);
  std::vector<double> s(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    Advance(p, s, tokens[t]);
    std::copy(s.begin(), s.end(), states.begin() + static_cast<std::ptrdiff_t>(t * d));
  }

  double loss = 0.0;
  // dL/ds_t from the heads at token t
  std::vector<double> head_grad(grad ? n * d : 0, 0.0);
  std::vector<double> dz_issue(k_issues), dz_act(m), dz_cost(l);
  for (std::size_t t = 0; t < n; ++t) {
    std::span<const double> st(&states[t * d], d);
    HeadLogits h = ComputeLogits(p, st);

    const double mx = *std::max_element(h.issue.begin(), h.issue.end());
    double sum = 0.0;
    for (double z : h.issue) sum += std::exp(z - mx);
    const double log_norm = mx + std::log(sum);
    loss += log_norm - h.issue[labels.issue];
    for (std::size_t k = 0; k < k_issues; ++k) {
      dz_issue[k] = std::exp(h.issue[k] - log_norm) - (k == labels.issue ? 1.0 : 0.0);
    }

    for (std::size_t a = 0; a < m; ++a) {
      const double y = labels.actions[a] ? 1.0 : 0.0;
      loss += Softplus(h.actions[a]) - y * h.actions[a];
      dz_act[a] = Sigmoid(h.actions[a]) - y;
    }

    const double yr = labels.no_recontact ? 1.0 : 0.0;
    loss += Softplus(h.norecon) - yr * h.norecon;
    const double dz_norecon = Sigmoid(h.norecon) - yr;

    std::fill(dz_cost.begin(), dz_cost.end(), 0.0);
    if (use_cost) {
      const std::vector<double> q = CostQuantiles(h.cost);
      // dL/dq_j, then pushed back through the cumulative softplus chain
      double tail = 0.0;
      std::vector<double> dq(l);
      for (std::size_t j = 0; j < l; ++j) {
        const double tau = schema.cost_levels[j];
        const double r = *labels.cost - q[j];
        loss += std::max(tau * r, (tau - 1.0) * r);
        dq[j] = r > 0 ? -tau : (r < 0 ? 1.0 - tau : 0.0);
      }
      for (std::size_t j = l; j-- > 0;) {
        tail += dq[j];
        dz_cost[j] = j == 0 ? tail : tail * Sigmoid(h.cost[j]);
      }
    }

    if (!grad) continue;
    double* g = &head_grad[t * d];
    for (std::size_t k = 0; k < k_issues; ++k) {
      grad->issue_b[k] += dz_issue[k];
      for (std::size_t i = 0; i < d; ++i) {
        grad->issue_w[k * d + i] += dz_issue[k] * st[i];
        g[i] += dz_issue[k] * p.issue_w[k * d + i];
      }
    }
    for (std::size_t a = 0; a < m; ++a) {
      grad->action_b[a] += dz_act[a];
      for (std::size_t i = 0; i < d; ++i) {
        grad->action_w[a * d + i] += dz_act[a] * st[i];
        g[i] += dz_act[a] * p.action_w[a * d + i];
      }
    }
    grad->norecon_b[0] += dz_norecon;
    for (std::size_t i = 0; i < d; ++i) {
      grad->norecon_w[i] += dz_norecon * st[i];
      g[i] += dz_norecon * p.norecon_w[i];
    }
    if (use_cost) {
      for (std::size_t j = 0; j < l; ++j) {
        grad->cost_b[j] += dz_cost[j];
        for (std::size_t i = 0; i < d; ++i) {
          grad->cost_w[j * d + i] += dz_cost[j] * st[i];
          g[i] += dz_cost[j] * p.cost_w[j * d + i];
        }
      }
    }
  }

  if (grad) {
    // s_t feeds every later state with weight (1 - decay) per step
    const double keep = 1.0 - p.decay;
    std::vector<double> carry(d, 0.0);
    for (std::size_t t = n; t-- > 0;) {
      double* e = &grad->embedding[static_cast<std::size_t>(tokens[t]) * d];
      for (std::size_t i = 0; i < d; ++i) {
        carry[i] = head_grad[t * d + i] + keep * carry[i];
        e[i] += p.decay * carry[i];
      }
    }
  }
  return loss;
}

}  // namespace vp
