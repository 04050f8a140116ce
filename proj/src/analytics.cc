#include "vp/analytics.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "vp/error.h"

namespace vp {

ProgressCurve MakeProgressCurve(std::string id, const ValueTrace& trace,
                                const TokenizedDialog& dialog) {
  if (trace.turn_values.size() != dialog.turn_starts.size() ||
      trace.token_values.size() != dialog.size()) {
    throw Error("trace is not aligned with dialog " + id);
  }
  ProgressCurve c;
  c.id = std::move(id);
  c.aspects = trace.turn_values;
  for (const ValueVector& v : trace.turn_values) c.total.push_back(v.total);
  return c;
}

ProgressCurve MakeProgressCurve(const TraceRecord& record) {
  ProgressCurve c;
  c.id = record.id;
  c.aspects = record.trace.turn_values;
  for (const ValueVector& v : c.aspects) c.total.push_back(v.total);
  return c;
}

const BandPoint* QuantileBand::At(std::size_t turn) const {
  auto it = points.find(turn);
  return it == points.end() ? nullptr : &it->second;
}

std::size_t QuantileBand::LevelIndex(double level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (std::abs(levels[i] - level) < 1e-12) return i;
  }
  throw Error("quantile band has no level " + std::to_string(level));
}

QuantileBand ComputeQuantileBand(std::span<const std::vector<double>> curves,
                                 std::vector<double> levels, std::size_t min_support) {
  if (curves.empty()) throw Error("quantile band needs at least one curve");
  if (levels.empty()) throw Error("quantile band needs at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0) || (i > 0 && !(levels[i] > levels[i - 1]))) {
      throw Error("quantile levels must be strictly increasing in (0, 1)");
    }
  }
  QuantileBand band;
  band.levels = std::move(levels);
  band.min_support = std::max<std::size_t>(min_support, 1);

  std::size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.size());
  std::vector<double> column;
  for (std::size_t t = 0; t < longest; ++t) {
    column.clear();
    for (const auto& c : curves) {
      if (t < c.size()) column.push_back(c[t]);
    }
    if (column.size() < band.min_support) continue;
    std::sort(column.begin(), column.end());
    BandPoint point;
    point.support = column.size();
    const double n = static_cast<double>(column.size());
    for (double q : band.levels) {
      auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
      rank = std::clamp<std::size_t>(rank, 1, column.size());
      point.quantiles.push_back(column[rank - 1]);
    }
    band.points.emplace(t, std::move(point));
  }
  return band;
}

namespace {

std::string LevelColumn(double level) {
  std::ostringstream s;
  s << 'p' << level * 100.0;
  return s.str();
}

double ParseLevelColumn(const std::string& name) {
  if (name.size() < 2 || name[0] != 'p') throw Error("bad band column \"" + name + "\"");
  return std::stod(name.substr(1)) / 100.0;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

void WriteBandCsv(std::ostream& out, const QuantileBand& band) {
  out << "turn_index,support";
  for (double q : band.levels) out << ',' << LevelColumn(q);
  out << '\n';
  std::ostringstream row;
  row.precision(17);
  for (const auto& [turn, point] : band.points) {
    row.str("");
    row << turn << ',' << point.support;
    for (double v : point.quantiles) row << ',' << v;
    out << row.str() << '\n';
  }
}

QuantileBand ReadBandCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty band file");
  const auto header = SplitCsv(line);
  if (header.size() < 3 || header[0] != "turn_index" || header[1] != "support") {
    throw Error("band file header must start with turn_index,support");
  }
  QuantileBand band;
  for (std::size_t i = 2; i < header.size(); ++i) band.levels.push_back(ParseLevelColumn(header[i]));
  std::size_t line_no = 1;
  std::size_t min_support = SIZE_MAX;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != header.size()) throw ParseError(line_no, "wrong number of band columns");
    try {
      BandPoint p;
      const std::size_t turn = std::stoul(cells[0]);
      p.support = std::stoul(cells[1]);
      for (std::size_t i = 2; i < cells.size(); ++i) p.quantiles.push_back(std::stod(cells[i]));
      min_support = std::min(min_support, p.support);
      band.points[turn] = std::move(p);
    } catch (const std::logic_error&) {
      throw ParseError(line_no, "bad number in band file");
    }
  }
  band.min_support = band.points.empty() ? 1 : min_support;
  return band;
}

std::string_view CurveClassName(CurveClass c) {
  switch (c) {
    case CurveClass::kBelowP10:
      return "below_P10";
    case CurveClass::kP10P50:
      return "P10_P50";
    case CurveClass::kP50P90:
      return "P50_P90";
    case CurveClass::kAboveP90:
      return "above_P90";
  }
  return "below_P10";
}

CurveClass ClassifyCurve(std::span<const double> curve, const QuantileBand& band) {
  const std::size_t i10 = band.LevelIndex(0.1);
  const std::size_t i50 = band.LevelIndex(0.5);
  const std::size_t i90 = band.LevelIndex(0.9);
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t shared = 0;
  for (std::size_t t = 0; t < curve.size(); ++t) {
    const BandPoint* p = band.At(t);
    if (!p) continue;
    ++shared;
    const double v = curve[t];
    if (v > p->quantiles[i90]) {
      ++counts[3];
    } else if (v > p->quantiles[i50]) {
      ++counts[2];
    } else if (v > p->quantiles[i10]) {
      ++counts[1];
    } else {
      ++counts[0];
    }
  }
  if (shared == 0) throw Error("curve shares no turn index with the band");
  std::size_t best = 0;
  for (std::size_t s = 1; s < 4; ++s) {
    if (counts[s] > counts[best]) best = s;
  }
  return static_cast<CurveClass>(best);
}

bool BelowP10(const QuantileBand& band, std::size_t turn, double value) {
  const BandPoint* p = band.At(turn);
  return p != nullptr && value < p->quantiles[band.LevelIndex(0.1)];
}

std::optional<std::size_t> DetectBotFailure(std::span<const double> curve,
                                            const QuantileBand& band,
                                            std::size_t patience) {
  if (patience < 1) throw Error("patience must be at least 1");
  std::size_t run = 0;
  for (std::size_t t = 0; t < curve.size(); ++t) {
    run = BelowP10(band, t, curve[t]) ? run + 1 : 0;
    if (run >= patience) return t;
  }
  return std::nullopt;
}

Aspect ParseAspect(std::string_view name) {
  if (name == "issue") return Aspect::kIssue;
  if (name == "action") return Aspect::kAction;
  if (name == "recontact" || name == "norecon") return Aspect::kRecontact;
  if (name == "total") return Aspect::kTotal;
  throw Error("unknown aspect \"" + std::string(name) + "\"");
}

std::string_view AspectName(Aspect aspect) {
  switch (aspect) {
    case Aspect::kIssue:
      return "issue";
    case Aspect::kAction:
      return "action";
    case Aspect::kRecontact:
      return "recontact";
    case Aspect::kTotal:
      return "total";
  }
  return "total";
}

RewardMode ParseRewardMode(std::string_view name) {
  if (name == "positive") return RewardMode::kPositive;
  if (name == "negative") return RewardMode::kNegative;
  if (name == "zero") return RewardMode::kZero;
  throw Error("unknown reward mode \"" + std::string(name) + "\"");
}

double AspectOf(const ValueVector& v, Aspect aspect) {
  switch (aspect) {
    case Aspect::kIssue:
      return v.issue;
    case Aspect::kAction:
      return v.action;
    case Aspect::kRecontact:
      return v.norecon;
    case Aspect::kTotal:
      return v.total;
  }
  return v.total;
}

std::vector<TopSentence> TopSentences(std::span<const ProfiledDialog> dialogs, Aspect aspect,
                                      std::size_t k, RewardMode mode) {
  std::vector<TopSentence> rows;
  for (const ProfiledDialog& d : dialogs) {
    const auto& turns = d.trace->turn_values;
    if (turns.size() > d.record->utterances.size()) {
      throw Error("trace of " + d.record->id + " has more turns than the dialog");
    }
    double previous = 0.0;
    for (std::size_t j = 0; j < turns.size(); ++j) {
      const double v = AspectOf(turns[j], aspect);
      rows.push_back({d.record->id, j, d.record->utterances[j].text, v - previous});
      previous = v;
    }
  }
  auto key = [mode](const TopSentence& s) {
    switch (mode) {
      case RewardMode::kPositive:
        return -s.delta;
      case RewardMode::kNegative:
        return s.delta;
      case RewardMode::kZero:
        return std::abs(s.delta);
    }
    return -s.delta;
  };
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const TopSentence& a, const TopSentence& b) { return key(a) < key(b); });
  if (rows.size() > k) rows.resize(k);
  return rows;
}

void WriteTopSentencesTsv(std::ostream& out, std::span<const TopSentence> rows, Aspect aspect) {
  out << "rank\tdialog_id\tturn\taspect\tdelta_v\ttext\n";
  std::ostringstream line;
  line.precision(17);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string text = rows[i].text;
    std::replace_if(text.begin(), text.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    line.str("");
    line << i + 1 << '\t' << rows[i].dialog_id << '\t' << rows[i].turn << '\t'
         << AspectName(aspect) << '\t' << rows[i].delta << '\t' << text;
    out << line.str() << '\n';
  }
}

}  // namespace vp
