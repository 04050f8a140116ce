#ifndef VP_INTEGRATE_H_
#define VP_INTEGRATE_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vp/corpus.h"
#include "vp/profiler.h"

namespace vp {

enum class ScoreOrientation { kHigherBetter, kLowerBetter };

ScoreOrientation ParseScoreOrientation(std::string_view name);

struct Candidate {
  std::string text;
  double generator_score = 0.0;
};

struct RankedCandidate {
  Candidate candidate;
  std::size_t original_index = 0;
  double reward = 0.0;
  double normalized_score = 0.0;
  double normalized_reward = 0.0;
  double ensemble = 0.0;
};

// Candidates in final order; ensemble non-increasing.
using RankedList = std::vector<RankedCandidate>;

// Untruncated token stream of a context.
TokenizedDialog TokenizeContext(const Vocab& vocab, std::span<const Utterance> context);

// Online-smoothed total value after the context followed by an agent turn
// saying `text`, minus the same value after the context alone (the prior
// baseline for an empty context). Both sequences keep their last max_len
// tokens. Throws vp::Error if `text` has no tokens.
double CandidateReward(const ProfilerModel& model, const TokenizedDialog& context,
                       std::string_view text);

// Min-max normalizes scores (sign-flipped first when lower is better) and
// rewards within the list, a constant column mapping to 0.5, and sorts by
// their mean; ties keep the generator order.
RankedList RankByEnsemble(std::span<const Candidate> candidates,
                          std::span<const double> rewards, ScoreOrientation orientation);

RankedList Rerank(const ProfilerModel& model, const TokenizedDialog& context,
                  std::span<const Candidate> candidates, ScoreOrientation orientation);

// Min-max normalization over the whole list; all-equal rewards give weight 1.
std::vector<double> NormalizeWeights(std::span<const double> rewards);

struct TrainingPair {
  std::vector<Utterance> context;
  std::string target;
};

struct SampleWeight {
  double reward = 0.0;
  double weight = 1.0;
};

std::vector<SampleWeight> TrainingWeights(const ProfilerModel& model,
                                          std::span<const TrainingPair> pairs);

}  // namespace vp

#endif  // VP_INTEGRATE_H_
