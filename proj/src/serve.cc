#include "vp/serve.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "vp/error.h"

namespace vp {

using nlohmann::json;

namespace {

// Messages may quote raw input, which is not guaranteed to be valid UTF-8.
std::string Dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string ErrorRecord(const std::string& message, const json& dialog_id) {
  return Dump(json{{"error", message}, {"dialog_id", dialog_id}});
}

}  // namespace

ServeSession::ServeSession(std::shared_ptr<const ProfilerModel> model,
                           std::optional<QuantileBand> band, std::size_t patience)
    : model_(std::move(model)), band_(std::move(band)), patience_(patience) {
  if (!model_) throw Error("serve needs a model");
  if (patience_ < 1) throw Error("patience must be at least 1");
  if (band_) band_->LevelIndex(0.1);
}

std::optional<std::string> ServeSession::Process(std::string_view line) {
  json event;
  try {
    event = json::parse(line);
  } catch (const json::exception& e) {
    return ErrorRecord(std::string("malformed event: ") + e.what(), nullptr);
  }
  if (!event.is_object()) return ErrorRecord("event must be a JSON object", nullptr);
  json id_field = nullptr;
  if (auto it = event.find("dialog_id"); it != event.end() && it->is_string()) id_field = *it;
  if (id_field.is_null()) return ErrorRecord("event needs a string dialog_id", nullptr);
  const std::string id = id_field.get<std::string>();

  auto type = event.find("type");
  if (type == event.end() || !type->is_string()) {
    return ErrorRecord("event needs a string type", id_field);
  }
  if (*type == "end") {
    dialogs_.erase(id);
    ended_.insert(id);
    return std::nullopt;
  }
  if (*type != "utterance") {
    return ErrorRecord("unknown event type \"" + type->get<std::string>() + "\"", id_field);
  }
  if (ended_.contains(id)) return ErrorRecord("utterance after end of dialog", id_field);
  auto speaker = event.find("speaker");
  auto text = event.find("text");
  if (speaker == event.end() || !speaker->is_string() || text == event.end() ||
      !text->is_string()) {
    return ErrorRecord("utterance needs string speaker and text", id_field);
  }
  try {
    const Speaker who = ParseSpeaker(speaker->get<std::string>());
    const std::string body = text->get<std::string>();
    if (TokenizeText(body).empty()) return ErrorRecord("empty utterance text", id_field);
    return HandleUtterance(id, who, body);
  } catch (const std::exception& e) {
    return ErrorRecord(e.what(), id_field);
  }
}

std::string ServeSession::HandleUtterance(const std::string& id, Speaker speaker,
                                          std::string_view text) {
  const ProfilerModel& model = *model_;
  DialogState& st = dialogs_[id];
  if (st.tokens.size() >= model.max_len) {
    return ErrorRecord("dialog reached max_len tokens; turn ignored", id);
  }
  if (st.tokens.empty() && !st.predictor_state) {
    st.predictor_state = model.predictor->NewState();
  }

  TokenizedDialog turn;
  AppendTurn(turn, speaker, text, model.vocab);
  const std::size_t room = model.max_len - st.tokens.size();
  const std::size_t take = std::min(room, turn.tokens.size());
  if (st.predictor_state) {
    for (std::size_t i = 0; i < take; ++i) {
      const PredictionFrame f = model.predictor->Step(*st.predictor_state, turn.tokens[i]);
      st.tokens.push_back(turn.tokens[i]);
      st.values.push_back(FrameValue(f, model.prior, model.calibration));
    }
  } else {
    st.tokens.insert(st.tokens.end(), turn.tokens.begin(),
                     turn.tokens.begin() + static_cast<std::ptrdiff_t>(take));
    const std::vector<PredictionFrame> frames = model.predictor->Forward(st.tokens);
    for (std::size_t t = st.values.size(); t < frames.size(); ++t) {
      st.values.push_back(FrameValue(frames[t], model.prior, model.calibration));
    }
  }

  const ValueVector v = SmoothAt(st.values, st.values.size() - 1, Smoothing::kOnline);
  const double previous =
      st.turns == 0 ? BaselineValue(model.prior, model.calibration).total : st.last_total;
  const std::size_t turn_index = st.turns++;
  st.last_total = v.total;

  bool failure = false;
  if (band_) {
    st.below_run = BelowP10(*band_, turn_index, v.total) ? st.below_run + 1 : 0;
    failure = st.below_run >= patience_;
  }
  json out = {{"dialog_id", id},
              {"turn", turn_index},
              {"values",
               {{"issue", v.issue}, {"action", v.action}, {"norecon", v.norecon},
                {"total", v.total}}},
              {"reward", v.total - previous},
              {"bot_failure", failure}};
  return Dump(out);
}

void RunServeStream(ServeSession& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (auto record = session.Process(line)) out << *record << '\n' << std::flush;
  }
}

namespace {

void ServeConnection(int fd, std::shared_ptr<const ProfilerModel> model,
                     std::optional<QuantileBand> band, std::size_t patience) {
  ServeSession session(std::move(model), std::move(band), patience);
  std::string pending;
  char buf[4096];
  auto send_all = [fd](const std::string& s) {
    std::size_t sent = 0;
    while (sent < s.size()) {
      const ssize_t n = ::send(fd, s.data() + sent, s.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  };
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
    if (n <= 0) break;
    pending.append(buf, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = pending.find('\n')) != std::string::npos) {
      const std::string line = pending.substr(0, nl);
      pending.erase(0, nl + 1);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (auto record = session.Process(line)) {
        if (!send_all(*record + "\n")) {
          ::close(fd);
          return;
        }
      }
    }
  }
  ::close(fd);
}

}  // namespace

void RunServeTcp(std::shared_ptr<const ProfilerModel> model, std::optional<QuantileBand> band,
                 std::size_t patience, std::uint16_t port) {
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listener, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listener);
    throw Error("cannot listen on port " + std::to_string(port) + ": " + why);
  }
  for (;;) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      const std::string why = std::strerror(errno);
      ::close(listener);
      throw Error("accept failed: " + why);
    }
    std::thread(ServeConnection, fd, model, band, patience).detach();
  }
}

}  // namespace vp
