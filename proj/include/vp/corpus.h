#ifndef VP_CORPUS_H_
#define VP_CORPUS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vp {

enum class Speaker { kCustomer, kAgent, kBot };

std::string_view SpeakerName(Speaker speaker);
// Throws vp::Error for anything other than "customer", "agent" or "bot".
Speaker ParseSpeaker(std::string_view name);

struct Utterance {
  Speaker speaker = Speaker::kCustomer;
  std::string text;

  bool operator==(const Utterance&) const = default;
};

// Dialog-level weak labels. `recontact` is true when the customer came back,
// so the preferred outcome is `!recontact`.
struct LabelSet {
  std::string issue;
  std::vector<std::string> actions;
  bool recontact = false;
  std::optional<double> cost;

  bool operator==(const LabelSet&) const = default;
};

struct DialogRecord {
  std::string id;
  std::vector<Utterance> utterances;
  LabelSet labels;

  bool operator==(const DialogRecord&) const = default;
};

using Corpus = std::vector<DialogRecord>;

// Reads one dialog per line. Blank lines are skipped. Errors carry the 1-based
// line number: malformed JSON, unknown speaker, empty utterance text, missing
// label fields, negative cost, duplicate ids.
Corpus ParseCorpus(std::istream& in);
Corpus ReadCorpusFile(const std::string& path);

// Single-line JSON encoding of a record, without the trailing newline.
std::string SerializeRecord(const DialogRecord& record);
void WriteCorpus(std::ostream& out, const Corpus& corpus);
void WriteCorpusFile(const std::string& path, const Corpus& corpus);

// Random partition with round(test_fraction * N) test records. Relative order
// of the input is kept inside each half.
std::pair<Corpus, Corpus> Split(const Corpus& corpus, double test_fraction,
                                std::uint64_t seed);

}  // namespace vp

#endif  // VP_CORPUS_H_
