#ifndef VP_TOKENIZER_H_
#define VP_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vp/corpus.h"

namespace vp {

using TokenId = std::int32_t;

// Lowercases and splits on whitespace; every ASCII punctuation character is a
// token of its own. Bytes >= 0x80 are kept inside words.
std::vector<std::string> TokenizeText(std::string_view text);

// Token <-> id map. Ids 0..4 are reserved; corpus tokens follow, ordered by
// frequency (descending) then lexicographically.
class Vocab {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kPad = 1;
  static constexpr TokenId kCustomerMarker = 2;
  static constexpr TokenId kAgentMarker = 3;
  static constexpr TokenId kBotMarker = 4;
  static constexpr std::size_t kNumReserved = 5;

  // Reserved tokens only.
  Vocab();
  // `tokens` must begin with the reserved tokens in id order.
  explicit Vocab(std::vector<std::string> tokens);

  TokenId Lookup(std::string_view token) const;
  const std::string& Token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  static TokenId MarkerFor(Speaker speaker);

  // FNV-1a over the tokens in id order; stored in model files.
  std::uint64_t Hash() const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

Vocab BuildVocab(const Corpus& corpus, std::size_t min_count);

struct TokenizedDialog {
  std::vector<TokenId> tokens;
  // Index of the first token of each turn inside `tokens`. When a window
  // starts mid-turn, the partial turn starts at 0.
  std::vector<std::size_t> turn_starts;
  std::vector<Speaker> speakers;
  // Original utterance index of turn_starts[0].
  std::size_t first_turn = 0;

  std::size_t size() const { return tokens.size(); }
  // Last token index of turn j.
  std::size_t TurnEnd(std::size_t j) const;

  bool operator==(const TokenizedDialog&) const = default;
};

// Every turn is its speaker marker followed by the turn's tokens. Sequences
// longer than `max_len` keep the window starting at `window_start` (clamped so
// the window is full), the first `max_len` tokens by default.
TokenizedDialog TokenizeDialog(const DialogRecord& record, const Vocab& vocab,
                               std::size_t max_len,
                               std::size_t window_start = 0);

// Untruncated token count of a record.
std::size_t TokenCount(const DialogRecord& record);

// Appends a turn to an existing token stream.
void AppendTurn(TokenizedDialog& dialog, Speaker speaker, std::string_view text,
                const Vocab& vocab);

}  // namespace vp

#endif  // VP_TOKENIZER_H_
