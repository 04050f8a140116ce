#include "vp/trace.h"

#include <algorithm>
#include <istream>
#include <string>

#include "json.hpp"
#include "vp/error.h"

namespace vp {

using nlohmann::json;

namespace {

double WindowMean(std::span<const double> series, std::size_t lo, std::size_t hi) {
  double sum = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) sum += series[i];
  return sum / static_cast<double>(hi - lo + 1);
}

}  // namespace

double SmoothOffline(std::span<const double> series, std::size_t center) {
  if (center >= series.size()) throw Error("smoothing index out of range");
  const std::size_t lo = center >= 3 ? center - 3 : 0;
  const std::size_t hi = std::min(series.size() - 1, center + 3);
  return WindowMean(series, lo, hi);
}

double SmoothOnline(std::span<const double> series, std::size_t t) {
  if (t >= series.size()) throw Error("smoothing index out of range");
  return WindowMean(series, t >= 3 ? t - 3 : 0, t);
}

std::string_view SmoothingName(Smoothing smoothing) {
  return smoothing == Smoothing::kOnline ? "online" : "offline";
}

Smoothing ParseSmoothing(std::string_view name) {
  if (name == "offline") return Smoothing::kOffline;
  if (name == "online") return Smoothing::kOnline;
  throw Error("unknown smoothing \"" + std::string(name) + "\"");
}

ValueVector SmoothAt(std::span<const ValueVector> values, std::size_t index,
                     Smoothing smoothing) {
  if (index >= values.size()) throw Error("smoothing index out of range");
  // only the window is materialized, so online smoothing cannot see the future
  const std::size_t lo = index >= 3 ? index - 3 : 0;
  const std::size_t hi =
      smoothing == Smoothing::kOnline ? index : std::min(values.size() - 1, index + 3);
  const std::size_t center = index - lo;
  auto smooth = [&](auto get) {
    std::vector<double> w;
    w.reserve(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) w.push_back(get(values[i]));
    return smoothing == Smoothing::kOnline ? SmoothOnline(w, center)
                                           : SmoothOffline(w, center);
  };
  ValueVector out;
  out.issue = smooth([](const ValueVector& v) { return v.issue; });
  out.action = smooth([](const ValueVector& v) { return v.action; });
  out.norecon = smooth([](const ValueVector& v) { return v.norecon; });
  out.total = smooth([](const ValueVector& v) { return v.total; });
  if (values[index].cost) {
    out.cost = smooth([](const ValueVector& v) { return v.cost.value_or(0.0); });
  }
  return out;
}

ValueVector Difference(const ValueVector& a, const ValueVector& b) {
  ValueVector d;
  d.issue = a.issue - b.issue;
  d.action = a.action - b.action;
  d.norecon = a.norecon - b.norecon;
  d.total = a.total - b.total;
  if (a.cost && b.cost) d.cost = *a.cost - *b.cost;
  return d;
}

ValueTrace Trace(std::span<const PredictionFrame> frames,
                 std::span<const std::size_t> turn_starts, const Prior& prior,
                 const ScaleCalibration& calibration, Smoothing smoothing) {
  if (frames.empty()) throw Error("cannot trace an empty frame sequence");
  ValueTrace trace;
  trace.token_values.reserve(frames.size());
  for (const PredictionFrame& f : frames) {
    trace.token_values.push_back(FrameValue(f, prior, calibration));
  }
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    trace.rewards.push_back(Difference(trace.token_values[t + 1], trace.token_values[t]));
  }
  for (std::size_t j = 0; j < turn_starts.size(); ++j) {
    const std::size_t last =
        j + 1 < turn_starts.size() ? turn_starts[j + 1] - 1 : frames.size() - 1;
    trace.turn_values.push_back(SmoothAt(trace.token_values, last, smoothing));
  }
  return trace;
}

namespace {

json ToJson(const ValueVector& v) {
  json j = {{"issue", v.issue}, {"action", v.action}, {"norecon", v.norecon},
            {"total", v.total}};
  if (v.cost) j["cost"] = *v.cost;
  return j;
}

ValueVector FromJson(const json& j) {
  ValueVector v;
  v.issue = j.at("issue").get<double>();
  v.action = j.at("action").get<double>();
  v.norecon = j.at("norecon").get<double>();
  v.total = j.at("total").get<double>();
  if (auto it = j.find("cost"); it != j.end() && !it->is_null()) v.cost = it->get<double>();
  return v;
}

json ToJson(const std::vector<ValueVector>& values) {
  json a = json::array();
  for (const ValueVector& v : values) a.push_back(ToJson(v));
  return a;
}

std::vector<ValueVector> VectorFromJson(const json& a) {
  std::vector<ValueVector> out;
  for (const json& j : a) out.push_back(FromJson(j));
  return out;
}

}  // namespace

std::string SerializeTrace(const TraceRecord& record) {
  json j = {{"id", record.id},
            {"token_values", ToJson(record.trace.token_values)},
            {"rewards", ToJson(record.trace.rewards)},
            {"turn_values", ToJson(record.trace.turn_values)}};
  return j.dump();
}

std::vector<TraceRecord> ParseTraces(std::istream& in) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      TraceRecord r;
      r.id = j.at("id").get<std::string>();
      r.trace.token_values = VectorFromJson(j.at("token_values"));
      r.trace.rewards = VectorFromJson(j.at("rewards"));
      r.trace.turn_values = VectorFromJson(j.at("turn_values"));
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad trace record: ") + e.what());
    }
  }
  return out;
}

}  // namespace vp
