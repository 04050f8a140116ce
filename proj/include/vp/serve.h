#ifndef VP_SERVE_H_
#define VP_SERVE_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vp/analytics.h"
#include "vp/profiler.h"

namespace vp {

// Stateful stream processor for newline-delimited JSON events:
//   {"type":"utterance","dialog_id":..,"speaker":..,"text":..}
//   {"type":"end","dialog_id":..}
// Each utterance yields
//   {"dialog_id","turn","values":{"issue","action","norecon","total"},
//    "reward","bot_failure"}
// with online-smoothed values at the turn's last token. Bad input yields
// {"error":..,"dialog_id":..|null}; the session keeps going.
class ServeSession {
 public:
  ServeSession(std::shared_ptr<const ProfilerModel> model,
               std::optional<QuantileBand> band = std::nullopt, std::size_t patience = 3);

  // Output record for one input line; nothing for a successful "end".
  std::optional<std::string> Process(std::string_view line);

  std::size_t active_dialogs() const { return dialogs_.size(); }

 private:
  struct DialogState {
    std::unique_ptr<PredictorState> predictor_state;
    std::vector<TokenId> tokens;  // at most max_len
    std::vector<ValueVector> values;
    std::size_t turns = 0;
    double last_total = 0.0;
    std::size_t below_run = 0;
  };

  std::string HandleUtterance(const std::string& id, Speaker speaker, std::string_view text);

  std::shared_ptr<const ProfilerModel> model_;
  std::optional<QuantileBand> band_;
  std::size_t patience_;
  std::unordered_map<std::string, DialogState> dialogs_;
  std::unordered_set<std::string> ended_;
};

// Reads events from `in` until EOF, writing and flushing one line per output.
void RunServeStream(ServeSession& session, std::istream& in, std::ostream& out);

// Accepts connections on 127.0.0.1:`port`; every connection gets its own
// session over the shared model. Blocks until the listener fails.
void RunServeTcp(std::shared_ptr<const ProfilerModel> model, std::optional<QuantileBand> band,
                 std::size_t patience, std::uint16_t port);

}  // namespace vp

#endif  // VP_SERVE_H_
