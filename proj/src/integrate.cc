#include "vp/integrate.h"

#include <algorithm>
#include <numeric>

#include "vp/error.h"
#include "vp/trace.h"

namespace vp {

ScoreOrientation ParseScoreOrientation(std::string_view name) {
  if (name == "higher") return ScoreOrientation::kHigherBetter;
  if (name == "lower") return ScoreOrientation::kLowerBetter;
  throw Error("score_orientation must be \"higher\" or \"lower\"");
}

TokenizedDialog TokenizeContext(const Vocab& vocab, std::span<const Utterance> context) {
  TokenizedDialog d;
  for (const Utterance& u : context) AppendTurn(d, u.speaker, u.text, vocab);
  return d;
}

namespace {

double OnlineTotalAtEnd(const ProfilerModel& model, std::span<const TokenId> tokens) {
  if (tokens.size() > model.max_len) tokens = tokens.last(model.max_len);
  const std::vector<PredictionFrame> frames = model.predictor->Forward(tokens);
  // only the last four frames reach the online window
  const std::size_t lo = frames.size() > 4 ? frames.size() - 4 : 0;
  std::vector<double> totals;
  for (std::size_t t = lo; t < frames.size(); ++t) {
    totals.push_back(FrameValue(frames[t], model.prior, model.calibration).total);
  }
  return SmoothOnline(totals, totals.size() - 1);
}

// (x - min) / (max - min); `degenerate` for a constant column.
std::vector<double> MinMax(std::span<const double> xs, double degenerate) {
  std::vector<double> out(xs.size(), degenerate);
  if (xs.empty()) return out;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (!(*lo < *hi)) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - *lo) / (*hi - *lo);
  return out;
}

}  // namespace

double CandidateReward(const ProfilerModel& model, const TokenizedDialog& context,
                       std::string_view text) {
  TokenizedDialog extended = context;
  AppendTurn(extended, Speaker::kAgent, text, model.vocab);
  if (extended.size() == context.size() + 1) {
    throw Error("candidate text has no tokens");
  }
  const double before = context.tokens.empty()
                            ? BaselineValue(model.prior, model.calibration).total
                            : OnlineTotalAtEnd(model, context.tokens);
  return OnlineTotalAtEnd(model, extended.tokens) - before;
}

RankedList RankByEnsemble(std::span<const Candidate> candidates,
                          std::span<const double> rewards, ScoreOrientation orientation) {
  if (candidates.size() != rewards.size()) throw Error("one reward per candidate is required");
  std::vector<double> scores;
  for (const Candidate& c : candidates) {
    scores.push_back(orientation == ScoreOrientation::kLowerBetter ? -c.generator_score
                                                                   : c.generator_score);
  }
  const std::vector<double> ns = MinMax(scores, 0.5);
  const std::vector<double> nr = MinMax(rewards, 0.5);
  RankedList list;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    list.push_back({candidates[i], i, rewards[i], ns[i], nr[i], (ns[i] + nr[i]) / 2.0});
  }
  std::stable_sort(list.begin(), list.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    return a.ensemble > b.ensemble;
  });
  return list;
}

RankedList Rerank(const ProfilerModel& model, const TokenizedDialog& context,
                  std::span<const Candidate> candidates, ScoreOrientation orientation) {
  if (candidates.empty()) throw Error("rerank needs at least one candidate");
  std::vector<double> rewards;
  for (const Candidate& c : candidates) rewards.push_back(CandidateReward(model, context, c.text));
  return RankByEnsemble(candidates, rewards, orientation);
}

std::vector<double> NormalizeWeights(std::span<const double> rewards) {
  return MinMax(rewards, 1.0);
}

std::vector<SampleWeight> TrainingWeights(const ProfilerModel& model,
                                          std::span<const TrainingPair> pairs) {
  if (pairs.empty()) throw Error("no training pairs");
  std::vector<double> rewards;
  for (const TrainingPair& p : pairs) {
    rewards.push_back(CandidateReward(model, TokenizeContext(model.vocab, p.context), p.target));
  }
  const std::vector<double> w = NormalizeWeights(rewards);
  std::vector<SampleWeight> out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out.push_back({rewards[i], w[i]});
  return out;
}

}  // namespace vp
