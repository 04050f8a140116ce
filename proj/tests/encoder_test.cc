#include <cmath>
#include <fstream>
#include <numeric>

#include "gtest/gtest.h"
#include "test_util.h"
#include "vp/error.h"
#include "vp/loss.h"
#include "vp/model_io.h"
#include "vp/profiler.h"
#include "vp/reference_encoder.h"
#include "vp/synthetic.h"
#include "vp/trainer.h"

namespace vp {
namespace {

using testing::MakeRecord;
using testing::RandomParams;
using testing::SmallSchema;

EncodedLabels RandomLabels(const TaskSchema& schema, Rng& rng) {
  EncodedLabels l;
  l.issue = UniformIndex(rng, schema.num_issues());
  for (std::size_t a = 0; a < schema.num_actions(); ++a) l.actions.push_back(Bernoulli(rng, 0.5));
  l.no_recontact = Bernoulli(rng, 0.5);
  if (schema.has_cost()) l.cost = UniformReal(rng, 0.0, 3.0);
  return l;
}

std::vector<TokenId> RandomTokens(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> t(n);
  for (auto& x : t) x = static_cast<TokenId>(UniformIndex(rng, vocab));
  return t;
}

TEST(Pinball, Formula) {
  EXPECT_DOUBLE_EQ(Pinball(4.0, 4.0, 0.3), 0.0);
  EXPECT_NEAR(Pinball(2.0, 10.0, 0.9), 7.2, 1e-12);
  EXPECT_NEAR(Pinball(10.0, 2.0, 0.1), 7.2, 1e-12);
  EXPECT_THROW(Pinball(0, 0, 1.0), Error);
}

TEST(TokenLoss, OneHotFramesCostNothing) {
  PredictionFrame f;
  f.issue = {0.0, 1.0, 0.0};
  f.actions = {1.0, 0.0};
  f.no_recontact = 1.0;
  EncodedLabels l{1, {true, false}, true, std::nullopt};
  const std::vector<PredictionFrame> frames(4, f);
  const std::unique_ptr<bool[]> m(new bool[4]{false, false, false, false});
  EXPECT_EQ(TokenLoss(frames, l, {}, std::span<const bool>(m.get(), 4)), 0.0);
}

TEST(TokenLoss, UniformBinaryIssueIsLn2) {
  PredictionFrame f;
  f.issue = {0.5, 0.5};
  f.actions = {1.0};
  f.no_recontact = 0.0;
  EncodedLabels l{0, {true}, false, std::nullopt};
  const bool mask[] = {false};
  EXPECT_NEAR(TokenLoss(std::vector<PredictionFrame>{f}, l, {}, mask), std::log(2.0), 1e-12);
}

TEST(TokenLoss, MaskedTokensAndCost) {
  PredictionFrame f;
  f.issue = {0.25, 0.75};
  f.no_recontact = 0.5;
  f.cost_quantiles = {2.0, 10.0};
  EncodedLabels l{1, {}, true, 6.0};
  const double levels[] = {0.1, 0.9};
  const bool all_pad[] = {true, true};
  const std::vector<PredictionFrame> frames(2, f);
  EXPECT_EQ(TokenLoss(frames, l, levels, all_pad), 0.0);
  const bool one[] = {false, true};
  const double expected = -std::log(0.75) - std::log(0.5) + Pinball(2, 6, 0.1) + Pinball(10, 6, 0.9);
  EXPECT_NEAR(TokenLoss(frames, l, levels, one), expected, 1e-12);
}

TEST(ReferenceEncoder, UntrainedIsUniform) {
  const TaskSchema schema = SmallSchema(5, 2, true);
  ReferenceEncoder enc(schema, EncoderParams::Initialize(schema, 20, 8, 0.2, 1));
  Rng rng = MakeRng({3});
  for (const PredictionFrame& f : enc.Forward(RandomTokens(rng, 30, 20))) {
    for (double p : f.issue) EXPECT_DOUBLE_EQ(p, 0.2);
    for (double p : f.actions) EXPECT_DOUBLE_EQ(p, 0.5);
    EXPECT_DOUBLE_EQ(f.no_recontact, 0.5);
  }
}

TEST(ReferenceEncoder, InitializationRange) {
  const TaskSchema schema = SmallSchema(3, 1, false);
  const EncoderParams p = EncoderParams::Initialize(schema, 50, 16, 0.2, 8);
  for (double x : p.embedding) {
    EXPECT_GE(x, -0.05);
    EXPECT_LE(x, 0.05);
  }
  EXPECT_EQ(p.embedding, EncoderParams::Initialize(schema, 50, 16, 0.2, 8).embedding);
  EXPECT_NE(p.embedding, EncoderParams::Initialize(schema, 50, 16, 0.2, 9).embedding);
}

TEST(ReferenceEncoder, RejectsOutOfRangeTokens) {
  const TaskSchema schema = SmallSchema(2, 0, false);
  ReferenceEncoder enc(schema, EncoderParams::Zeros(schema, 10, 4, 0.5));
  const TokenId bad[] = {3, 10};
  EXPECT_THROW(enc.Forward(bad), Error);
  const TokenId negative[] = {-1};
  EXPECT_THROW(enc.Forward(negative), Error);
}

// Random parameters and inputs: simplex, probability ranges, ordered quantiles.
TEST(ReferenceEncoder, OutputInvariants) {
  const TaskSchema schema = SmallSchema(6, 3, true);
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng = MakeRng({17, static_cast<std::uint64_t>(trial)});
    ReferenceEncoder enc(schema, RandomParams(schema, 30, 8, 0.3, rng, 3.0));
    for (const PredictionFrame& f : enc.Forward(RandomTokens(rng, 25, 30))) {
      EXPECT_NEAR(std::accumulate(f.issue.begin(), f.issue.end(), 0.0), 1.0, 1e-6);
      for (double p : f.issue) EXPECT_GE(p, 0.0);
      for (double p : f.actions) EXPECT_TRUE(p >= 0.0 && p <= 1.0);
      EXPECT_TRUE(f.no_recontact >= 0.0 && f.no_recontact <= 1.0);
      for (std::size_t j = 1; j < f.cost_quantiles.size(); ++j) {
        EXPECT_LE(f.cost_quantiles[j - 1], f.cost_quantiles[j]);
      }
    }
  }
}

TEST(ReferenceEncoder, CausalPrefixFramesBitIdentical) {
  const TaskSchema schema = SmallSchema(4, 2, true);
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng = MakeRng({23, static_cast<std::uint64_t>(trial)});
    ReferenceEncoder enc(schema, RandomParams(schema, 40, 8, 0.25, rng));
    std::vector<TokenId> a = RandomTokens(rng, 2 + UniformIndex(rng, 40), 40);
    const std::size_t cut = UniformIndex(rng, a.size());
    std::vector<TokenId> b = a;
    for (std::size_t t = cut + 1; t < b.size(); ++t) b[t] = static_cast<TokenId>(UniformIndex(rng, 40));
    b.push_back(7);
    const auto fa = enc.Forward(a), fb = enc.Forward(b);
    for (std::size_t t = 0; t <= cut; ++t) EXPECT_EQ(fa[t], fb[t]);
  }
}

TEST(ReferenceEncoder, StepMatchesForward) {
  const TaskSchema schema = SmallSchema(3, 1, true);
  Rng rng = MakeRng({2});
  ReferenceEncoder enc(schema, RandomParams(schema, 12, 4, 0.4, rng));
  const auto tokens = RandomTokens(rng, 20, 12);
  const auto frames = enc.Forward(tokens);
  auto state = enc.NewState();
  ASSERT_NE(state, nullptr);
  for (std::size_t t = 0; t < tokens.size(); ++t) EXPECT_EQ(enc.Step(*state, tokens[t]), frames[t]);
}

TEST(SequenceLoss, MatchesTokenLossOfForward) {
  const TaskSchema schema = SmallSchema(4, 3, true);
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng = MakeRng({31, static_cast<std::uint64_t>(trial)});
    const EncoderParams p = RandomParams(schema, 15, 6, 0.3, rng);
    ReferenceEncoder enc(schema, p);
    const auto tokens = RandomTokens(rng, 1 + UniformIndex(rng, 10), 15);
    const EncodedLabels labels = RandomLabels(schema, rng);
    const std::unique_ptr<bool[]> m(new bool[tokens.size()]());
    const double expected = TokenLoss(enc.Forward(tokens), labels, schema.cost_levels,
                                      std::span<const bool>(m.get(), tokens.size()));
    EXPECT_NEAR(SequenceLossAndGradient(p, schema, tokens, labels, nullptr), expected,
                1e-9 * std::max(1.0, expected));
  }
}

TEST(SequenceLoss, GradientMatchesFiniteDifferences) {
  for (bool cost : {false, true}) {
    const TaskSchema schema = SmallSchema(3, 2, cost);
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng = MakeRng({41, static_cast<std::uint64_t>(trial), cost});
      const EncoderParams p = RandomParams(schema, 6, 4, 0.3, rng);
      const auto tokens = RandomTokens(rng, 3, 6);
      EXPECT_LE(testing::MaxGradientError(p, schema, tokens, RandomLabels(schema, rng)), 1e-4);
    }
  }
}

Corpus TinyCorpus() {
  SyntheticConfig c;
  c.n_dialogs = 60;
  c.num_issues = 3;
  c.num_actions = 2;
  c.filler_vocab = 20;
  c.seed = 4;
  return GenerateSynthetic(c).corpus;
}

TEST(Train, LossDecreasesOnOneDialog) {
  const Corpus all = TinyCorpus();
  const Corpus corpus = {all[0]};
  const Vocab vocab = BuildVocab(corpus, 1);
  const TaskSchema schema = TaskSchema::FromCorpus(all);
  ReferenceEncoder enc(schema, EncoderParams::Initialize(schema, vocab.size(), 8, 0.2, 1));
  TrainConfig config;
  config.epochs = 8;
  config.learning_rate = 0.01;
  config.optimizer = Optimizer::kSgd;
  const TrainLog log = Train(enc, corpus, vocab, config);
  ASSERT_EQ(log.epoch_loss.size(), 8u);
  for (int e = 1; e < 5; ++e) EXPECT_LT(log.epoch_loss[e], log.epoch_loss[e - 1]);
}

TEST(Train, DeterministicForSeed) {
  const Corpus corpus = TinyCorpus();
  const Vocab vocab = BuildVocab(corpus, 1);
  const TaskSchema schema = TaskSchema::FromCorpus(corpus);
  TrainConfig config;
  config.epochs = 3;
  config.learning_rate = 0.02;
  config.batch_size = 8;
  config.max_len = 16;  // forces random windows
  config.seed = 5;
  auto run = [&](std::uint64_t seed) {
    config.seed = seed;
    ReferenceEncoder enc(schema, EncoderParams::Initialize(schema, vocab.size(), 8, 0.2, 1));
    Train(enc, corpus, vocab, config);
    return enc.params().embedding;
  };
  EXPECT_EQ(run(5), run(5));
  EXPECT_NE(run(5), run(6));
}

TEST(Train, AnnealHalvesTheSecondOfTwoSteps) {
  const Corpus corpus = TinyCorpus();
  const Vocab vocab = BuildVocab(corpus, 1);
  const TaskSchema schema = TaskSchema::FromCorpus(corpus);
  const EncoderParams init = EncoderParams::Initialize(schema, vocab.size(), 8, 0.2, 1);
  TrainConfig config;
  config.epochs = 2;
  config.batch_size = corpus.size();  // one step per epoch
  config.learning_rate = 0.1;
  config.optimizer = Optimizer::kSgd;
  config.anneal = true;
  ReferenceEncoder annealed(schema, init);
  Train(annealed, corpus, vocab, config);

  config.epochs = 1;
  config.anneal = false;
  ReferenceEncoder manual(schema, init);
  Train(manual, corpus, vocab, config);
  config.learning_rate = 0.05;
  Train(manual, corpus, vocab, config);

  const auto a = annealed.params().Arrays();
  const auto b = manual.params().Arrays();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) EXPECT_NEAR(a[i][j], b[i][j], 1e-12);
  }
}

TEST(Train, NonFiniteLossAborts) {
  const Corpus corpus = TinyCorpus();
  const Vocab vocab = BuildVocab(corpus, 1);
  const TaskSchema schema = TaskSchema::FromCorpus(corpus);
  ReferenceEncoder enc(schema, EncoderParams::Initialize(schema, vocab.size(), 4, 0.2, 1));
  TrainConfig config;
  config.epochs = 50;
  config.learning_rate = 1e300;
  config.optimizer = Optimizer::kSgd;
  EXPECT_THROW(Train(enc, corpus, vocab, config), Error);
}

ProfilerModel SmallModel() {
  FitOptions options;
  options.dim = 8;
  options.train.epochs = 2;
  options.train.learning_rate = 0.02;
  return FitProfiler(TinyCorpus(), options).model;
}

TEST(ModelIo, RoundTripIsBitIdentical) {
  const ProfilerModel model = SmallModel();
  const auto path = testing::TempPath("roundtrip.bin").string();
  SaveModel(model, path);
  const ProfilerModel loaded = LoadModel(path);
  EXPECT_EQ(loaded.vocab, model.vocab);
  EXPECT_EQ(loaded.schema(), model.schema());
  EXPECT_EQ(loaded.prior, model.prior);
  EXPECT_EQ(loaded.calibration, model.calibration);
  EXPECT_EQ(loaded.max_len, model.max_len);
  const Corpus corpus = TinyCorpus();
  for (std::size_t i = 0; i < 10; ++i) {
    const auto tokens = TokenizeDialog(corpus[i], model.vocab, model.max_len).tokens;
    EXPECT_EQ(loaded.predictor->Forward(tokens), model.predictor->Forward(tokens));
  }
  EXPECT_EQ(SerializeModel(loaded), SerializeModel(model));
}

TEST(ModelIo, TruncatedAndCorruptFilesRejected) {
  const std::string bytes = SerializeModel(SmallModel());
  for (std::size_t n : {std::size_t{0}, std::size_t{7}, std::size_t{40}, bytes.size() / 2,
                        bytes.size() - 1}) {
    EXPECT_THROW(DeserializeModel(bytes.substr(0, n)), ModelFormatError) << n;
  }
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(DeserializeModel(flipped), ModelFormatError);
  EXPECT_THROW(DeserializeModel(bytes + "x"), ModelFormatError);
}

TEST(ModelIo, NewerVersionIsExplicit) {
  std::string bytes = SerializeModel(SmallModel());
  bytes[8] = static_cast<char>(kModelFormatVersion + 1);
  try {
    DeserializeModel(bytes);
    FAIL() << "expected a version error";
  } catch (const ModelFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
}

TEST(ModelIo, MissingFile) {
  EXPECT_THROW(LoadModel(testing::TempPath("does_not_exist.bin").string()), Error);
}

}  // namespace
}  // namespace vp
