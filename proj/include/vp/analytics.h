#ifndef VP_ANALYTICS_H_
#define VP_ANALYTICS_H_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vp/corpus.h"
#include "vp/tokenizer.h"
#include "vp/trace.h"

namespace vp {

// Value vs turn index for one dialog.
struct ProgressCurve {
  std::string id;
  std::vector<double> total;
  std::vector<ValueVector> aspects;
};

ProgressCurve MakeProgressCurve(std::string id, const ValueTrace& trace,
                                const TokenizedDialog& dialog);
// From an exported trace; the turn count is taken from the trace itself.
ProgressCurve MakeProgressCurve(const TraceRecord& record);

struct BandPoint {
  std::size_t support = 0;
  std::vector<double> quantiles;  // one per band level
};

// Point-wise nearest-rank quantiles of a family of curves. Turn indices
// observed in fewer than `min_support` curves are left out.
struct QuantileBand {
  std::vector<double> levels;
  std::size_t min_support = 1;
  std::map<std::size_t, BandPoint> points;

  const BandPoint* At(std::size_t turn) const;
  // Position of `level` in `levels`; throws if absent.
  std::size_t LevelIndex(double level) const;
};

QuantileBand ComputeQuantileBand(std::span<const std::vector<double>> curves,
                                 std::vector<double> levels = {0.1, 0.5, 0.9},
                                 std::size_t min_support = 20);

// CSV: header "turn_index,support,p10,p50,p90" (one column per level).
void WriteBandCsv(std::ostream& out, const QuantileBand& band);
QuantileBand ReadBandCsv(std::istream& in);

enum class CurveClass { kBelowP10, kP10P50, kP50P90, kAboveP90 };

std::string_view CurveClassName(CurveClass c);

// Stripe holding most of the curve's turns, using strictly-above comparisons;
// count ties go to the lower stripe. The band must carry levels 0.1/0.5/0.9.
CurveClass ClassifyCurve(std::span<const double> curve, const QuantileBand& band);

// True when `value` at `turn` lies strictly below the band's P10.
bool BelowP10(const QuantileBand& band, std::size_t turn, double value);

// First turn t at which the curve has been below P10 at every turn of
// [t - patience + 1, t]. Turns missing from the band break a run.
std::optional<std::size_t> DetectBotFailure(std::span<const double> curve,
                                            const QuantileBand& band,
                                            std::size_t patience);

enum class Aspect { kIssue, kAction, kRecontact, kTotal };
enum class RewardMode { kPositive, kNegative, kZero };

Aspect ParseAspect(std::string_view name);
std::string_view AspectName(Aspect aspect);
RewardMode ParseRewardMode(std::string_view name);
double AspectOf(const ValueVector& v, Aspect aspect);

struct TopSentence {
  std::string dialog_id;
  std::size_t turn = 0;
  std::string text;
  double delta = 0.0;
};

struct ProfiledDialog {
  const DialogRecord* record = nullptr;
  const ValueTrace* trace = nullptr;
};

// Turn reward = turn value minus the previous turn's value (the first turn
// minus 0). Positive/negative sort by reward descending/ascending, zero by
// |reward| ascending; ties keep corpus order.
std::vector<TopSentence> TopSentences(std::span<const ProfiledDialog> dialogs, Aspect aspect,
                                      std::size_t k, RewardMode mode);

// TSV with header "rank\tdialog_id\tturn\taspect\tdelta_v\ttext".
void WriteTopSentencesTsv(std::ostream& out, std::span<const TopSentence> rows, Aspect aspect);

}  // namespace vp

#endif  // VP_ANALYTICS_H_
