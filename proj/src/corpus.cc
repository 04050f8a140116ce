#include "vp/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "json.hpp"
#include "vp/error.h"
#include "vp/random.h"

namespace vp {

using nlohmann::json;

std::string_view SpeakerName(Speaker speaker) {
  switch (speaker) {
    case Speaker::kCustomer:
      return "customer";
    case Speaker::kAgent:
      return "agent";
    case Speaker::kBot:
      return "bot";
  }
  return "customer";
}

Speaker ParseSpeaker(std::string_view name) {
  if (name == "customer") return Speaker::kCustomer;
  if (name == "agent") return Speaker::kAgent;
  if (name == "bot") return Speaker::kBot;
  throw Error("unknown speaker \"" + std::string(name) + "\"");
}

namespace {

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

const json& Require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(line, std::string("missing field \"") + key + "\"");
  }
  return *it;
}

DialogRecord ParseRecord(const json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  DialogRecord record;

  const json& id = Require(j, "id", line);
  if (!id.is_string()) throw ParseError(line, "\"id\" must be a string");
  record.id = id.get<std::string>();

  const json& turns = Require(j, "turns", line);
  if (!turns.is_array() || turns.empty()) {
    throw ParseError(line, "\"turns\" must be a non-empty array");
  }
  for (const json& turn : turns) {
    if (!turn.is_object()) throw ParseError(line, "turn must be an object");
    const json& speaker = Require(turn, "speaker", line);
    const json& text = Require(turn, "text", line);
    if (!speaker.is_string() || !text.is_string()) {
      throw ParseError(line, "turn speaker and text must be strings");
    }
    Utterance u;
    try {
      u.speaker = ParseSpeaker(speaker.get<std::string>());
    } catch (const Error& e) {
      throw ParseError(line, e.what());
    }
    u.text = text.get<std::string>();
    if (IsBlank(u.text)) throw ParseError(line, "empty utterance text");
    record.utterances.push_back(std::move(u));
  }

  const json& labels = Require(j, "labels", line);
  if (!labels.is_object()) throw ParseError(line, "\"labels\" must be an object");
  const json& issue = Require(labels, "issue", line);
  if (!issue.is_string()) throw ParseError(line, "\"issue\" must be a string");
  record.labels.issue = issue.get<std::string>();
  const json& actions = Require(labels, "actions", line);
  if (!actions.is_array()) throw ParseError(line, "\"actions\" must be an array");
  for (const json& a : actions) {
    if (!a.is_string()) throw ParseError(line, "action must be a string");
    record.labels.actions.push_back(a.get<std::string>());
  }
  const json& recontact = Require(labels, "recontact", line);
  if (!recontact.is_boolean()) {
    throw ParseError(line, "\"recontact\" must be a boolean");
  }
  record.labels.recontact = recontact.get<bool>();
  if (auto it = labels.find("cost"); it != labels.end() && !it->is_null()) {
    if (!it->is_number()) throw ParseError(line, "\"cost\" must be a number");
    const double cost = it->get<double>();
    if (!(cost >= 0.0) || !std::isfinite(cost)) {
      throw ParseError(line, "\"cost\" must be finite and non-negative");
    }
    record.labels.cost = cost;
  }
  return record;
}

}  // namespace

Corpus ParseCorpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    DialogRecord record = ParseRecord(j, line_no);
    if (!ids.insert(record.id).second) {
      throw ParseError(line_no, "duplicate dialog id \"" + record.id + "\"");
    }
    corpus.push_back(std::move(record));
  }
  return corpus;
}

Corpus ReadCorpusFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path);
  return ParseCorpus(in);
}

std::string SerializeRecord(const DialogRecord& record) {
  json turns = json::array();
  for (const Utterance& u : record.utterances) {
    turns.push_back({{"speaker", SpeakerName(u.speaker)}, {"text", u.text}});
  }
  json labels = {{"issue", record.labels.issue},
                 {"actions", record.labels.actions},
                 {"recontact", record.labels.recontact}};
  labels["cost"] = record.labels.cost ? json(*record.labels.cost) : json(nullptr);
  json j = {{"id", record.id}, {"turns", std::move(turns)},
            {"labels", std::move(labels)}};
  return j.dump();
}

void WriteCorpus(std::ostream& out, const Corpus& corpus) {
  for (const DialogRecord& r : corpus) out << SerializeRecord(r) << '\n';
}

void WriteCorpusFile(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  WriteCorpus(out, corpus);
}

std::pair<Corpus, Corpus> Split(const Corpus& corpus, double test_fraction,
                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test fraction must lie strictly between 0 and 1");
  }
  if (corpus.size() < 2) throw Error("cannot split a corpus of fewer than 2 dialogs");
  const std::size_t n = corpus.size();
  std::size_t n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng({seed, 0x5b17});
  Shuffle(order.begin(), order.end(), rng);
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

  Corpus train, test;
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? test : train).push_back(corpus[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace vp
