#include "vp/tokenizer.h"

#include <algorithm>
#include <cctype>
#include <map>

#include "vp/error.h"

namespace vp {

std::vector<std::string> TokenizeText(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

namespace {

const std::vector<std::string>& ReservedTokens() {
  static const std::vector<std::string> kReserved = {
      "<unk>", "<pad>", "<customer>", "<agent>", "<bot>"};
  return kReserved;
}

}  // namespace

Vocab::Vocab() : Vocab(ReservedTokens()) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& reserved = ReservedTokens();
  if (tokens_.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), tokens_.begin())) {
    throw Error("vocabulary does not start with the reserved tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error("duplicate vocabulary token \"" + tokens_[i] + "\"");
    }
  }
}

TokenId Vocab::Lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

TokenId Vocab::MarkerFor(Speaker speaker) {
  switch (speaker) {
    case Speaker::kCustomer:
      return kCustomerMarker;
    case Speaker::kAgent:
      return kAgentMarker;
    case Speaker::kBot:
      return kBotMarker;
  }
  return kCustomerMarker;
}

std::uint64_t Vocab::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::string& t : tokens_) {
    for (unsigned char c : t) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;  // separator
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocab BuildVocab(const Corpus& corpus, std::size_t min_count) {
  if (min_count < 1) throw Error("min_count must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const DialogRecord& r : corpus) {
    for (const Utterance& u : r.utterances) {
      for (std::string& t : TokenizeText(u.text)) ++counts[std::move(t)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, n] : counts) {
    if (n >= min_count) kept.emplace_back(token, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<std::string> tokens = ReservedTokens();
  for (auto& [token, n] : kept) tokens.push_back(std::move(token));
  return Vocab(std::move(tokens));
}

std::size_t TokenizedDialog::TurnEnd(std::size_t j) const {
  return j + 1 < turn_starts.size() ? turn_starts[j + 1] - 1 : tokens.size() - 1;
}

void AppendTurn(TokenizedDialog& dialog, Speaker speaker, std::string_view text,
                const Vocab& vocab) {
  dialog.turn_starts.push_back(dialog.tokens.size());
  dialog.tokens.push_back(Vocab::MarkerFor(speaker));
  dialog.speakers.push_back(speaker);
  for (const std::string& t : TokenizeText(text)) {
    dialog.tokens.push_back(vocab.Lookup(t));
    dialog.speakers.push_back(speaker);
  }
}

std::size_t TokenCount(const DialogRecord& record) {
  std::size_t n = 0;
  for (const Utterance& u : record.utterances) n += 1 + TokenizeText(u.text).size();
  return n;
}

TokenizedDialog TokenizeDialog(const DialogRecord& record, const Vocab& vocab,
                               std::size_t max_len, std::size_t window_start) {
  if (max_len == 0) throw Error("max_len must be positive");
  TokenizedDialog full;
  for (const Utterance& u : record.utterances) {
    AppendTurn(full, u.speaker, u.text, vocab);
  }
  if (full.size() <= max_len) return full;

  const std::size_t start = std::min(window_start, full.size() - max_len);
  const std::size_t end = start + max_len;
  TokenizedDialog out;
  out.tokens.assign(full.tokens.begin() + start, full.tokens.begin() + end);
  out.speakers.assign(full.speakers.begin() + start, full.speakers.begin() + end);
  for (std::size_t j = 0; j < full.turn_starts.size(); ++j) {
    const std::size_t s = full.turn_starts[j];
    const std::size_t e = full.TurnEnd(j);
    if (e < start || s >= end) continue;
    if (out.turn_starts.empty()) out.first_turn = j;
    out.turn_starts.push_back(s < start ? 0 : s - start);
  }
  return out;
}

}  // namespace vp
