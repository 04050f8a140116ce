#include "vp/trace.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gtest/gtest.h"
#include "test_util.h"
#include "vp/error.h"

namespace vp {
namespace {

using testing::RandomParams;
using testing::SmallSchema;

TEST(SmoothOffline, Examples) {
  const std::vector<double> flat(9, 0.7);
  for (std::size_t c = 0; c < flat.size(); ++c) EXPECT_DOUBLE_EQ(SmoothOffline(flat, c), 0.7);
  std::vector<double> impulse(11, 0.0);
  impulse[5] = 1.0;
  EXPECT_NEAR(SmoothOffline(impulse, 5), 1.0 / 7.0, 1e-15);
  const std::vector<double> ramp = {1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_DOUBLE_EQ(SmoothOffline(ramp, 0), 2.5);
  EXPECT_DOUBLE_EQ(SmoothOffline(ramp, 7), 6.5);
  EXPECT_THROW(SmoothOffline(ramp, 8), Error);
}

TEST(SmoothOnline, Examples) {
  const std::vector<double> s = {0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_DOUBLE_EQ(SmoothOnline(s, 0), 0.1);
  EXPECT_NEAR(SmoothOnline(s, 4), 0.35, 1e-15);
  EXPECT_NEAR(SmoothOnline(s, 1), 0.15, 1e-15);
}

TEST(Smoothing, PropertiesOnRandomSeries) {
  Rng rng = MakeRng({12});
  for (int i = 0; i < 500; ++i) {
    std::vector<double> s(1 + UniformIndex(rng, 20));
    for (double& x : s) x = UniformReal(rng, -2, 2);
    const std::size_t t = UniformIndex(rng, s.size());
    const double online = SmoothOnline(s, t);
    const double offline = SmoothOffline(s, t);

    // contraction: inside the window's range
    const auto on_lo = s.begin() + (t >= 3 ? t - 3 : 0);
    EXPECT_GE(online, *std::min_element(on_lo, s.begin() + t + 1) - 1e-15);
    EXPECT_LE(online, *std::max_element(on_lo, s.begin() + t + 1) + 1e-15);
    const auto off_hi = s.begin() + std::min(s.size(), t + 4);
    EXPECT_GE(offline, *std::min_element(on_lo, off_hi) - 1e-15);
    EXPECT_LE(offline, *std::max_element(on_lo, off_hi) + 1e-15);

    // online smoothing never reads past t
    std::vector<double> changed = s;
    for (std::size_t j = t + 1; j < changed.size(); ++j) changed[j] = UniformReal(rng, 5, 9);
    EXPECT_EQ(SmoothOnline(changed, t), online);
  }
}

std::vector<PredictionFrame> RandomFrames(Rng& rng, std::size_t n) {
  const TaskSchema schema = SmallSchema(4, 2, true);
  ReferenceEncoder enc(schema, RandomParams(schema, 30, 6, 0.3, rng, 2.0));
  std::vector<TokenId> tokens(n);
  for (auto& t : tokens) t = static_cast<TokenId>(UniformIndex(rng, 30));
  return enc.Forward(tokens);
}

Prior FlatPrior() {
  Prior p;
  p.issue = {0.1, 0.2, 0.3, 0.4};
  p.actions = {0.3, 0.6};
  p.no_recontact = 0.55;
  return p;
}

TEST(Trace, ConstantFramesGiveZeroRewards) {
  PredictionFrame f;
  f.issue = {0.25, 0.25, 0.25, 0.25};
  f.actions = {0.5, 0.5};
  f.no_recontact = 0.5;
  const std::vector<PredictionFrame> frames(6, f);
  const std::size_t starts[] = {0, 3};
  const ValueTrace t = Trace(frames, starts, FlatPrior(), ScaleCalibration{});
  ASSERT_EQ(t.rewards.size(), 5u);
  for (const ValueVector& r : t.rewards) {
    EXPECT_EQ(r.issue, 0.0);
    EXPECT_EQ(r.action, 0.0);
    EXPECT_EQ(r.norecon, 0.0);
    EXPECT_EQ(r.total, 0.0);
  }
  ASSERT_EQ(t.turn_values.size(), 2u);
  EXPECT_DOUBLE_EQ(t.turn_values[0].issue,
                   ConfidenceValue(f.issue, FlatPrior().issue));
}

TEST(Trace, TurnValuesAreSmoothedAtTurnEnds) {
  Rng rng = MakeRng({8});
  const auto frames = RandomFrames(rng, 12);
  const std::size_t starts[] = {0, 2, 9};
  ScaleCalibration c;
  c.alpha = 0.7;
  const ValueTrace t = Trace(frames, starts, FlatPrior(), c);
  std::vector<double> totals;
  for (const auto& v : t.token_values) totals.push_back(v.total);
  EXPECT_NEAR(t.turn_values[0].total, SmoothOffline(totals, 1), 1e-15);
  EXPECT_NEAR(t.turn_values[1].total, SmoothOffline(totals, 8), 1e-15);
  EXPECT_NEAR(t.turn_values[2].total, SmoothOffline(totals, 11), 1e-15);
  const ValueTrace online = Trace(frames, starts, FlatPrior(), c, Smoothing::kOnline);
  EXPECT_NEAR(online.turn_values[1].total, SmoothOnline(totals, 8), 1e-15);
}

TEST(Trace, RewardsTelescope) {
  Rng rng = MakeRng({9});
  for (int i = 0; i < 100; ++i) {
    const auto frames = RandomFrames(rng, 1 + UniformIndex(rng, 60));
    const std::size_t starts[] = {0};
    const ValueTrace t = Trace(frames, starts, FlatPrior(), ScaleCalibration{});
    double issue = 0, action = 0, norecon = 0, total = 0, cost = 0;
    for (const ValueVector& r : t.rewards) {
      issue += r.issue;
      action += r.action;
      norecon += r.norecon;
      total += r.total;
      cost += *r.cost;
    }
    const ValueVector& first = t.token_values.front();
    const ValueVector& last = t.token_values.back();
    EXPECT_NEAR(issue, last.issue - first.issue, 1e-9);
    EXPECT_NEAR(action, last.action - first.action, 1e-9);
    EXPECT_NEAR(norecon, last.norecon - first.norecon, 1e-9);
    EXPECT_NEAR(total, last.total - first.total, 1e-9);
    EXPECT_NEAR(cost, *last.cost - *first.cost, 1e-9);
  }
}

TEST(Trace, SimpleSeries) {
  // total series [0, 0.2, 0.7] from the no-recontact probability alone
  std::vector<PredictionFrame> frames(3);
  const double p[] = {0.0, 0.2, 0.7};
  for (int i = 0; i < 3; ++i) {
    frames[i].issue = {0.1, 0.2, 0.3, 0.4};
    frames[i].actions = {0.3, 0.6};
    frames[i].no_recontact = p[i];
  }
  const std::size_t starts[] = {0};
  const ValueTrace t = Trace(frames, starts, FlatPrior(), ScaleCalibration{});
  EXPECT_NEAR(t.rewards[0].total, 0.2, 1e-15);
  EXPECT_NEAR(t.rewards[1].total, 0.5, 1e-15);
}

TEST(TraceJson, RoundTripIsExact) {
  Rng rng = MakeRng({10});
  const auto frames = RandomFrames(rng, 9);
  const std::size_t starts[] = {0, 4};
  TraceRecord r{"dlg \"7\"", Trace(frames, starts, FlatPrior(), ScaleCalibration{})};
  std::istringstream in(SerializeTrace(r) + "\n\n" + SerializeTrace(r) + "\n");
  const auto parsed = ParseTraces(in);
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0].id, r.id);
  EXPECT_EQ(parsed[0].trace.token_values, r.trace.token_values);
  EXPECT_EQ(parsed[0].trace.rewards, r.trace.rewards);
  EXPECT_EQ(parsed[1].trace.turn_values, r.trace.turn_values);

  std::istringstream bad("{\"id\": 3}\n");
  EXPECT_THROW(ParseTraces(bad), Error);
}

}  // namespace
}  // namespace vp
