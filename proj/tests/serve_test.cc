#include "vp/serve.h"

#include <sstream>

#include "gtest/gtest.h"
#include "json.hpp"
#include "test_util.h"
#include "vp/synthetic.h"

namespace vp {
namespace {

using nlohmann::json;

// Hides the incremental interface so the session has to re-run Forward.
class ForwardOnly : public Predictor {
 public:
  explicit ForwardOnly(std::shared_ptr<const Predictor> inner) : inner_(std::move(inner)) {}
  const TaskSchema& schema() const override { return inner_->schema(); }
  std::size_t vocab_size() const override { return inner_->vocab_size(); }
  std::vector<PredictionFrame> Forward(std::span<const TokenId> tokens) const override {
    return inner_->Forward(tokens);
  }

 private:
  std::shared_ptr<const Predictor> inner_;
};

Corpus SmallCorpus() {
  SyntheticConfig c;
  c.n_dialogs = 80;
  c.num_issues = 3;
  c.num_actions = 2;
  c.filler_vocab = 30;
  c.seed = 21;
  return GenerateSynthetic(c).corpus;
}

std::shared_ptr<const ProfilerModel> TrainedModel() {
  static const auto model = [] {
    FitOptions o;
    o.dim = 8;
    o.decay = 0.1;
    o.train.epochs = 5;
    o.train.learning_rate = 0.05;
    return std::make_shared<const ProfilerModel>(FitProfiler(SmallCorpus(), o).model);
  }();
  return model;
}

std::string Utterance(const std::string& id, const vp::Utterance& u) {
  return json{{"type", "utterance"}, {"dialog_id", id}, {"speaker", SpeakerName(u.speaker)},
              {"text", u.text}}
      .dump();
}

void ExpectMatchesOffline(const json& out, const ValueVector& expected, double reward) {
  EXPECT_NEAR(out["values"]["issue"].get<double>(), expected.issue, 1e-9);
  EXPECT_NEAR(out["values"]["action"].get<double>(), expected.action, 1e-9);
  EXPECT_NEAR(out["values"]["norecon"].get<double>(), expected.norecon, 1e-9);
  EXPECT_NEAR(out["values"]["total"].get<double>(), expected.total, 1e-9);
  EXPECT_NEAR(out["reward"].get<double>(), reward, 1e-9);
}

TEST(ServeSession, InterleavedDialogsMatchOfflineOnlineValues) {
  const auto model = TrainedModel();
  const Corpus corpus = SmallCorpus();
  ServeSession session(model);
  const DialogRecord& a = corpus[0];
  const DialogRecord& b = corpus[1];
  const auto pa = ProfileDialog(*model, a, Smoothing::kOnline);
  const auto pb = ProfileDialog(*model, b, Smoothing::kOnline);
  const double base = BaselineValue(model->prior, model->calibration).total;
  const std::size_t n = std::max(a.utterances.size(), b.utterances.size());
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto* pair : {&a, &b}) {
      if (j >= pair->utterances.size()) continue;
      const auto& profile = pair == &a ? pa : pb;
      const auto out = session.Process(Utterance(pair->id, pair->utterances[j]));
      ASSERT_TRUE(out.has_value());
      const json record = json::parse(*out);
      EXPECT_EQ(record["dialog_id"], pair->id);
      EXPECT_EQ(record["turn"], j);
      EXPECT_EQ(record["bot_failure"], false);
      const double previous = j == 0 ? base : profile.trace.turn_values[j - 1].total;
      ExpectMatchesOffline(record, profile.trace.turn_values[j],
                           profile.trace.turn_values[j].total - previous);
    }
  }
  EXPECT_EQ(session.active_dialogs(), 2u);
}

TEST(ServeSession, ForwardOnlyPredictorGivesSameOutput) {
  const auto model = TrainedModel();
  auto plain = std::make_shared<ProfilerModel>(*model);
  plain->predictor = std::make_shared<ForwardOnly>(model->predictor);
  ServeSession incremental(model), rerun(plain);
  for (const DialogRecord& r : SmallCorpus()) {
    for (const auto& u : r.utterances) {
      EXPECT_EQ(incremental.Process(Utterance(r.id, u)), rerun.Process(Utterance(r.id, u)));
    }
  }
}

TEST(ServeSession, EndDiscardsStateAndLaterUtterancesError) {
  ServeSession session(TrainedModel());
  const vp::Utterance hi{Speaker::kCustomer, "hello there"};
  ASSERT_TRUE(session.Process(Utterance("x", hi)).has_value());
  EXPECT_EQ(session.Process(R"({"type":"end","dialog_id":"x"})"), std::nullopt);
  EXPECT_EQ(session.active_dialogs(), 0u);
  const json err = json::parse(*session.Process(Utterance("x", hi)));
  EXPECT_TRUE(err.contains("error"));
  EXPECT_EQ(err["dialog_id"], "x");
  // other dialogs are unaffected
  EXPECT_EQ(json::parse(*session.Process(Utterance("y", hi)))["turn"], 0);
}

TEST(ServeSession, BadEventsYieldErrorRecords) {
  ServeSession session(TrainedModel());
  for (const char* line : {"not json", "[1,2]", R"({"type":"utterance"})",
                           R"({"type":"ping","dialog_id":"a"})",
                           R"({"type":"utterance","dialog_id":"a","speaker":"robot","text":"hi"})",
                           R"({"type":"utterance","dialog_id":"a","speaker":"bot","text":"  "})",
                           R"({"type":"utterance","dialog_id":"a","speaker":"bot"})"}) {
    const auto out = session.Process(line);
    ASSERT_TRUE(out.has_value()) << line;
    const json j = json::parse(*out);
    EXPECT_TRUE(j.contains("error")) << line;
    EXPECT_TRUE(j.contains("dialog_id")) << line;
  }
  EXPECT_TRUE(json::parse(*session.Process("{}"))["dialog_id"].is_null());
}

TEST(ServeSession, ArbitraryBytesNeverAbort) {
  ServeSession session(TrainedModel());
  Rng rng = MakeRng({99});
  for (int i = 0; i < 300; ++i) {
    std::string line(UniformIndex(rng, 40), ' ');
    for (char& c : line) c = static_cast<char>(UniformInt(rng, 1, 255));
    if (i % 3 == 0) line = R"({"type":"utterance","dialog_id":"z","speaker":"customer","text":")" + line + "\"}";
    const auto out = session.Process(line);
    ASSERT_TRUE(out.has_value());
    EXPECT_NO_THROW(json::parse(*out));
  }
}

TEST(ServeSession, MemoryCappedAtMaxLen) {
  auto model = std::make_shared<ProfilerModel>(*TrainedModel());
  model->max_len = 10;
  ServeSession session(model);
  const vp::Utterance turn{Speaker::kCustomer, "a b c d"};  // 5 tokens with marker
  EXPECT_EQ(json::parse(*session.Process(Utterance("m", turn)))["turn"], 0);
  EXPECT_EQ(json::parse(*session.Process(Utterance("m", turn)))["turn"], 1);
  const json err = json::parse(*session.Process(Utterance("m", turn)));
  EXPECT_TRUE(err.contains("error"));
}

TEST(ServeSession, BotFailureFlag) {
  const auto model = TrainedModel();
  QuantileBand band;
  band.levels = {0.1, 0.5, 0.9};
  for (std::size_t t = 0; t < 10; ++t) band.points[t] = {50, {100.0, 200.0, 300.0}};
  ServeSession session(model, band, 2);
  const vp::Utterance u{Speaker::kBot, "hello"};
  EXPECT_EQ(json::parse(*session.Process(Utterance("f", u)))["bot_failure"], false);
  EXPECT_EQ(json::parse(*session.Process(Utterance("f", u)))["bot_failure"], true);
}

TEST(RunServeStream, OneLinePerRecord) {
  ServeSession session(TrainedModel());
  std::istringstream in(Utterance("s", {Speaker::kCustomer, "hi"}) + "\n\n" +
                        R"({"type":"end","dialog_id":"s"})" + "\n" + "garbage\n");
  std::ostringstream out;
  RunServeStream(session, in, out);
  std::istringstream lines(out.str());
  std::string line;
  std::vector<json> records;
  while (std::getline(lines, line)) records.push_back(json::parse(line));
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0]["turn"], 0);
  EXPECT_TRUE(records[1].contains("error"));
}

}  // namespace
}  // namespace vp
