#ifndef VP_TRACE_H_
#define VP_TRACE_H_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vp/schema.h"
#include "vp/value.h"

namespace vp {

// Mean over [center - 3, center + 3], truncated at the sequence ends.
double SmoothOffline(std::span<const double> series, std::size_t center);
// Mean over [max(0, t - 3), t]; never reads past t.
double SmoothOnline(std::span<const double> series, std::size_t t);

enum class Smoothing { kOffline, kOnline };

std::string_view SmoothingName(Smoothing smoothing);
Smoothing ParseSmoothing(std::string_view name);

struct ValueTrace {
  std::vector<ValueVector> token_values;
  // rewards[t] = token_values[t + 1] - token_values[t], per aspect.
  std::vector<ValueVector> rewards;
  // Smoothed values at the last token of each turn.
  std::vector<ValueVector> turn_values;
};

// Every aspect of `values` smoothed at `index`.
ValueVector SmoothAt(std::span<const ValueVector> values, std::size_t index,
                     Smoothing smoothing);

ValueTrace Trace(std::span<const PredictionFrame> frames,
                 std::span<const std::size_t> turn_starts, const Prior& prior,
                 const ScaleCalibration& calibration,
                 Smoothing smoothing = Smoothing::kOffline);

// a - b, aspect-wise. Cost is kept only when both sides have it.
ValueVector Difference(const ValueVector& a, const ValueVector& b);

struct TraceRecord {
  std::string id;
  ValueTrace trace;
};

// One JSON object per dialog:
// {"id", "token_values": [{"issue","action","norecon","total"[,"cost"]}...],
//  "rewards": [...same shape...], "turn_values": [...same shape...]}
std::string SerializeTrace(const TraceRecord& record);
std::vector<TraceRecord> ParseTraces(std::istream& in);

}  // namespace vp

#endif  // VP_TRACE_H_
