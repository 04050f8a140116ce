#include "vp/synthetic.h"

#include <cmath>
#include <ostream>

#include "json.hpp"
#include "vp/error.h"
#include "vp/random.h"

namespace vp {

namespace {

std::string Letters(int index) {
  // bijective base-26: 0 -> "a", 25 -> "z", 26 -> "aa"
  std::string s;
  int n = index + 1;
  while (n > 0) {
    --n;
    s.insert(s.begin(), static_cast<char>('a' + n % 26));
    n /= 26;
  }
  return s;
}

std::string Padded(int value, int width) {
  std::string s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, width - s.size(), '0');
  return s;
}

struct IssueProfile {
  std::vector<bool> actions;
  bool recontact = false;
  double base_cost = 0.0;
};

std::vector<IssueProfile> MakeProfiles(const SyntheticConfig& c) {
  Rng rng = MakeRng({c.seed, 0x9f0f11e5});
  std::vector<IssueProfile> profiles(static_cast<std::size_t>(c.num_issues));
  for (int k = 0; k < c.num_issues; ++k) {
    IssueProfile& p = profiles[static_cast<std::size_t>(k)];
    for (int a = 0; a < c.num_actions; ++a) p.actions.push_back(Bernoulli(rng, 0.4));
    p.recontact = (k % 2) == 1;
    p.base_cost = 5.0 * (1 + k % 4);
  }
  return profiles;
}

LabelSet LabelsFor(const IssueProfile& p, int issue, Rng& rng, bool with_cost) {
  LabelSet labels;
  labels.issue = IssueName(issue);
  for (std::size_t a = 0; a < p.actions.size(); ++a) {
    if (p.actions[a]) labels.actions.push_back(ActionName(static_cast<int>(a)));
  }
  labels.recontact = p.recontact;
  if (with_cost) {
    labels.cost = std::round(p.base_cost * (0.5 + Uniform01(rng)) * 100.0) / 100.0;
  }
  return labels;
}

}  // namespace

void SyntheticConfig::Validate() const {
  if (num_issues < 2) throw Error("synthetic corpus needs at least 2 issues");
  if (num_actions < 0) throw Error("number of actions must be non-negative");
  if (!(noise >= 0.0 && noise < 0.5)) throw Error("noise must lie in [0, 0.5)");
  if (filler_vocab < 1) throw Error("filler vocabulary must be non-empty");
  if (min_turn_words < 1 || max_turn_words < min_turn_words) {
    throw Error("invalid words-per-turn range");
  }
  if (min_turns < 1 || max_turns < min_turns) throw Error("invalid turn range");
  if (reveal_min_turn < 0) throw Error("reveal_min_turn must be non-negative");
  // the shortest dialog must still have an eligible customer turn
  const int first_customer = reveal_min_turn + (reveal_min_turn % 2);
  const int cap = reveal_max_turn < 0 ? min_turns - 1
                                      : std::min(reveal_max_turn, min_turns - 1);
  if (first_customer > cap) {
    throw Error("no customer turn can carry the cue in the shortest dialog");
  }
}

std::string IssueName(int issue) { return "issue_" + Padded(issue, 2); }
std::string ActionName(int action) { return "action_" + Padded(action, 2); }
std::string CueWord(int issue) { return "q" + Letters(issue); }
std::string FillerWord(int index) { return "w" + Letters(index); }

SyntheticCorpus GenerateSynthetic(const SyntheticConfig& config) {
  config.Validate();
  const std::vector<IssueProfile> profiles = MakeProfiles(config);
  const int width = static_cast<int>(std::to_string(config.n_dialogs).size());

  SyntheticCorpus out;
  out.corpus.reserve(config.n_dialogs);
  out.oracle.reserve(config.n_dialogs);
  for (std::size_t i = 0; i < config.n_dialogs; ++i) {
    Rng rng = MakeRng({config.seed, static_cast<std::uint64_t>(i)});
    DialogRecord record;
    record.id = "d" + Padded(static_cast<int>(i), width);

    const int n_turns = static_cast<int>(UniformInt(rng, config.min_turns, config.max_turns));
    const int cap = config.reveal_max_turn < 0
                        ? n_turns - 1
                        : std::min(config.reveal_max_turn, n_turns - 1);
    std::vector<int> eligible;
    for (int t = config.reveal_min_turn; t <= cap; ++t) {
      if (t % 2 == 0) eligible.push_back(t);
    }
    const int reveal = eligible[UniformIndex(rng, eligible.size())];
    const int issue = static_cast<int>(UniformIndex(rng, config.num_issues));

    for (int t = 0; t < n_turns; ++t) {
      Utterance u;
      if (t % 2 == 0) {
        u.speaker = Speaker::kCustomer;
      } else {
        u.speaker = t < config.bot_turns ? Speaker::kBot : Speaker::kAgent;
      }
      const int words =
          static_cast<int>(UniformInt(rng, config.min_turn_words, config.max_turn_words));
      std::vector<std::string> parts;
      for (int w = 0; w < words; ++w) {
        parts.push_back(FillerWord(static_cast<int>(UniformIndex(rng, config.filler_vocab))));
      }
      if (t == reveal) {
        const auto pos = static_cast<std::ptrdiff_t>(UniformIndex(rng, parts.size() + 1));
        parts.insert(parts.begin() + pos, CueWord(issue));
      }
      for (std::size_t w = 0; w < parts.size(); ++w) {
        if (w > 0) u.text += ' ';
        u.text += parts[w];
      }
      record.utterances.push_back(std::move(u));
    }

    const IssueProfile& profile = profiles[static_cast<std::size_t>(issue)];
    LabelSet truth = LabelsFor(profile, issue, rng, config.with_cost);
    LabelSet stored = truth;
    if (Bernoulli(rng, config.noise)) {
      int other = static_cast<int>(UniformIndex(rng, config.num_issues - 1));
      if (other >= issue) ++other;
      stored.issue = IssueName(other);
    }
    if (Bernoulli(rng, config.noise)) stored.recontact = !stored.recontact;
    std::vector<bool> acts = profile.actions;
    bool flipped = false;
    for (std::size_t a = 0; a < acts.size(); ++a) {
      if (Bernoulli(rng, config.noise)) {
        acts[a] = !acts[a];
        flipped = true;
      }
    }
    if (flipped) {
      stored.actions.clear();
      for (std::size_t a = 0; a < acts.size(); ++a) {
        if (acts[a]) stored.actions.push_back(ActionName(static_cast<int>(a)));
      }
    }
    record.labels = stored;

    out.oracle.push_back({record.id, reveal, truth.issue, truth});
    out.corpus.push_back(std::move(record));
  }
  return out;
}

void WriteOracle(std::ostream& out, const std::vector<OracleEntry>& oracle) {
  for (const OracleEntry& e : oracle) {
    nlohmann::json j = {{"id", e.id},
                        {"reveal_turn", e.reveal_turn},
                        {"true_issue", e.true_issue}};
    out << j.dump() << '\n';
  }
}

}  // namespace vp
