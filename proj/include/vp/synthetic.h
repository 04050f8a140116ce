#ifndef VP_SYNTHETIC_H_
#define VP_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vp/corpus.h"

namespace vp {

// Generator of dialogs with a planted signal. Each dialog has exactly one
// customer turn carrying the cue word of its issue; the issue determines the
// action set and the recontact outcome.
struct SyntheticConfig {
  std::size_t n_dialogs = 1000;
  int num_issues = 8;
  int num_actions = 4;
  int min_turns = 4;
  int max_turns = 8;
  int min_turn_words = 2;
  int max_turn_words = 6;
  // The cue lands on a customer turn (even index) in
  // [reveal_min_turn, min(reveal_max_turn, turns - 1)]; -1 means no upper cap.
  int reveal_min_turn = 2;
  int reveal_max_turn = -1;
  // Odd turns below this index are spoken by the bot, later ones by an agent.
  int bot_turns = 3;
  // Probability that each stored label field is replaced by a different value.
  double noise = 0.0;
  int filler_vocab = 200;
  bool with_cost = true;
  std::uint64_t seed = 0;

  // Throws vp::Error when the invariants do not hold.
  void Validate() const;
};

struct OracleEntry {
  std::string id;
  int reveal_turn = 0;
  std::string true_issue;
  // Noise-free labels implied by the cue.
  LabelSet true_labels;
};

struct SyntheticCorpus {
  Corpus corpus;
  std::vector<OracleEntry> oracle;
};

SyntheticCorpus GenerateSynthetic(const SyntheticConfig& config);

std::string IssueName(int issue);
std::string ActionName(int action);
// Word that identifies `issue` when it appears in a customer turn.
std::string CueWord(int issue);
std::string FillerWord(int index);

// Oracle table, one `{"id", "reveal_turn", "true_issue"}` object per line.
void WriteOracle(std::ostream& out, const std::vector<OracleEntry>& oracle);

}  // namespace vp

#endif  // VP_SYNTHETIC_H_
