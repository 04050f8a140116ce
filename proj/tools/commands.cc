#include "commands.h"

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vp/analytics.h"
#include "vp/error.h"
#include "vp/integrate.h"
#include "vp/metrics.h"
#include "vp/model_io.h"
#include "vp/serve.h"

namespace vp::cli {

using nlohmann::json;

namespace {

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

class InputFile {
 public:
  explicit InputFile(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error("cannot open " + path);
    }
  }
  std::istream& get() { return file_.is_open() ? file_ : std::cin; }

 private:
  std::ifstream file_;
};

Corpus ReadCorpus(const std::string& path) {
  InputFile in(path);
  return ParseCorpus(in.get());
}

ProfilerModel ReadModel(const std::string& path, std::optional<std::size_t> max_len) {
  if (path.empty()) throw Error("a model file is required (--model)");
  ProfilerModel model = LoadModel(path);
  if (max_len) model.max_len = *max_len;
  return model;
}

// Fails with a schema-mismatch diagnostic before any work is done.
void CheckCorpusAgainstModel(const Corpus& corpus, const ProfilerModel& model) {
  for (const DialogRecord& r : corpus) {
    try {
      EncodeLabels(r.labels, model.schema());
    } catch (const Error& e) {
      throw Error("schema mismatch between model and corpus (dialog " + r.id + "): " + e.what());
    }
  }
}

std::vector<Utterance> ParseTurns(const json& turns) {
  if (!turns.is_array()) throw Error("\"context\" must be an array of turns");
  std::vector<Utterance> out;
  for (const json& t : turns) {
    out.push_back({ParseSpeaker(t.at("speaker").get<std::string>()),
                   t.at("text").get<std::string>()});
  }
  return out;
}

template <typename T>
std::vector<T> ParseList(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v;
    if (!(is >> v)) throw Error("bad list element \"" + item + "\"");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void GenCorpus(const GenCorpusOptions& options) {
  const SyntheticCorpus generated = GenerateSynthetic(options.config);
  OutputFile out(options.output);
  WriteCorpus(out.get(), generated.corpus);
  if (!options.oracle_output.empty()) {
    OutputFile oracle(options.oracle_output);
    WriteOracle(oracle.get(), generated.oracle);
  }
}

void TrainModel(const TrainOptions& options) {
  Corpus corpus = ReadCorpus(options.input);
  if (options.test_fraction) {
    auto [train, test] = Split(corpus, *options.test_fraction, options.fit.train.seed);
    if (!options.test_output.empty()) WriteCorpusFile(options.test_output, test);
    corpus = std::move(train);
  }
  const FitResult fit = FitProfiler(corpus, options.fit);
  SaveModel(fit.model, options.output);
  if (!options.log_output.empty()) {
    OutputFile log(options.log_output);
    log.get() << "epoch\tmean_token_loss\n";
    std::ostringstream line;
    line.precision(17);
    for (std::size_t e = 0; e < fit.log.epoch_loss.size(); ++e) {
      line.str("");
      line << e + 1 << '\t' << fit.log.epoch_loss[e];
      log.get() << line.str() << '\n';
    }
  }
  std::cerr << "trained on " << corpus.size() << " dialogs, final mean token loss "
            << fit.log.epoch_loss.back() << '\n';
}

void Eval(const EvalOptions& options) {
  const ProfilerModel model = ReadModel(options.model, options.max_len);
  const Corpus corpus = ReadCorpus(options.input);
  CheckCorpusAgainstModel(corpus, model);
  std::vector<std::size_t> positions;
  for (std::size_t p : options.positions) {
    if (p < model.max_len) positions.push_back(p);
  }
  MetricsReport report =
      AccuracyReport(*model.predictor, model.vocab, corpus, positions, model.max_len);
  report.calibration =
      CalibrationReport(*model.predictor, model.vocab, corpus, options.bins, model.max_len);

  json j;
  j["num_dialogs"] = report.num_dialogs;
  for (const PositionAccuracy& p : report.positions) {
    j["issue"]["accuracy"][std::to_string(p.position)] = p.issue_accuracy;
    j["no_recontact"]["accuracy"][std::to_string(p.position)] = p.no_recontact_accuracy;
  }
  j["actions"] = json::object();
  for (const ActionMetrics& a : report.actions) {
    j["actions"][a.name] = {
        {"precision", a.precision ? json(*a.precision) : json(nullptr)},
        {"recall", a.recall ? json(*a.recall) : json(nullptr)},
        {"predicted_positive", a.predicted_positive},
        {"actual_positive", a.actual_positive}};
  }
  for (const TaskCalibration& c : report.calibration) {
    json bins = json::array();
    for (const ReliabilityBin& b : c.bins) {
      bins.push_back({{"lower", b.lower},
                      {"upper", b.upper},
                      {"count", b.count},
                      {"mean_confidence", b.mean_confidence},
                      {"accuracy", b.accuracy}});
    }
    j["calibration"][c.task] = {{"ece", c.ece}, {"bins", bins}};
  }
  OutputFile out(options.output);
  out.get() << j.dump(2) << '\n';
}

void Profile(const ProfileOptions& options) {
  const ProfilerModel model = ReadModel(options.model, options.max_len);
  const Corpus corpus = ReadCorpus(options.input);
  OutputFile out(options.output);
  for (const DialogRecord& r : corpus) {
    const DialogProfile p = ProfileDialog(model, r, options.smoothing);
    out.get() << SerializeTrace({r.id, p.trace}) << '\n';
  }
}

void Curves(const CurvesOptions& options) {
  InputFile in(options.input);
  const std::vector<TraceRecord> traces = ParseTraces(in.get());
  std::vector<ProgressCurve> curves;
  std::vector<std::vector<double>> totals;
  for (const TraceRecord& t : traces) {
    curves.push_back(MakeProgressCurve(t));
    totals.push_back(curves.back().total);
  }
  const QuantileBand band = ComputeQuantileBand(totals, options.levels, options.min_support);
  {
    OutputFile out(options.output);
    WriteBandCsv(out.get(), band);
  }
  if (!options.aspects_output.empty()) {
    OutputFile out(options.aspects_output);
    out.get() << "dialog_id,turn,issue,action,norecon,total\n";
    std::ostringstream row;
    row.precision(17);
    for (const ProgressCurve& c : curves) {
      for (std::size_t j = 0; j < c.aspects.size(); ++j) {
        const ValueVector& v = c.aspects[j];
        row.str("");
        row << c.id << ',' << j << ',' << v.issue << ',' << v.action << ',' << v.norecon << ','
            << v.total;
        out.get() << row.str() << '\n';
      }
    }
  }
  if (!options.classify_output.empty()) {
    OutputFile out(options.classify_output);
    out.get() << "dialog_id\tclass\tbot_failure_turn\n";
    for (const ProgressCurve& c : curves) {
      std::string label = "unranked";
      try {
        label = std::string(CurveClassName(ClassifyCurve(c.total, band)));
      } catch (const Error&) {
        // no turn of this curve has enough support in the band
      }
      const auto alert = DetectBotFailure(c.total, band, options.patience);
      out.get() << c.id << '\t' << label << '\t' << (alert ? std::to_string(*alert) : "")
                << '\n';
    }
  }
}

void Inspect(const InspectOptions& options) {
  InputFile in(options.traces);
  const std::vector<TraceRecord> traces = ParseTraces(in.get());
  const Corpus corpus = ReadCorpus(options.corpus);
  std::unordered_map<std::string, const DialogRecord*> by_id;
  for (const DialogRecord& r : corpus) by_id[r.id] = &r;
  std::vector<ProfiledDialog> dialogs;
  for (const TraceRecord& t : traces) {
    auto it = by_id.find(t.id);
    if (it == by_id.end()) throw Error("trace " + t.id + " has no dialog in the corpus");
    dialogs.push_back({it->second, &t.trace});
  }
  const Aspect aspect = ParseAspect(options.aspect);
  const auto rows = TopSentences(dialogs, aspect, options.k, ParseRewardMode(options.mode));
  OutputFile out(options.output);
  WriteTopSentencesTsv(out.get(), rows, aspect);
}

void RerankRequests(const RerankOptions& options) {
  const ProfilerModel model = ReadModel(options.model, options.max_len);
  InputFile in(options.input);
  OutputFile out(options.output);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in.get(), line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json req = json::parse(line);
      const std::vector<Utterance> context = ParseTurns(req.at("context"));
      const ScoreOrientation orientation =
          ParseScoreOrientation(req.value("score_orientation", std::string("higher")));
      std::vector<Candidate> candidates;
      for (const json& c : req.at("candidates")) {
        candidates.push_back({c.at("text").get<std::string>(), c.at("score").get<double>()});
      }
      const RankedList ranked =
          Rerank(model, TokenizeContext(model.vocab, context), candidates, orientation);
      json resp = {{"candidates", json::array()}};
      for (const RankedCandidate& rc : ranked) {
        resp["candidates"].push_back({{"text", rc.candidate.text},
                                      {"score", rc.candidate.generator_score},
                                      {"original_index", rc.original_index},
                                      {"reward", rc.reward},
                                      {"normalized_score", rc.normalized_score},
                                      {"normalized_reward", rc.normalized_reward},
                                      {"ensemble", rc.ensemble}});
      }
      out.get() << resp.dump() << '\n';
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad rerank request: ") + e.what());
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
}

void Weights(const WeightsOptions& options) {
  const ProfilerModel model = ReadModel(options.model, options.max_len);
  InputFile in(options.input);
  std::vector<TrainingPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in.get(), line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      pairs.push_back({ParseTurns(j.at("context")), j.at("target").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad training pair: ") + e.what());
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  const std::vector<SampleWeight> weights = TrainingWeights(model, pairs);
  OutputFile out(options.output);
  out.get() << "index\treward\tweight\n";
  std::ostringstream row;
  row.precision(17);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    row.str("");
    row << i << '\t' << weights[i].reward << '\t' << weights[i].weight;
    out.get() << row.str() << '\n';
  }
}

void Serve(const ServeOptions& options) {
  auto model = std::make_shared<const ProfilerModel>(ReadModel(options.model, options.max_len));
  std::optional<QuantileBand> band;
  if (!options.band.empty()) {
    InputFile in(options.band);
    band = ReadBandCsv(in.get());
  }
  if (options.port) {
    RunServeTcp(model, std::move(band), options.patience, *options.port);
    return;
  }
  ServeSession session(model, std::move(band), options.patience);
  RunServeStream(session, std::cin, std::cout);
}

int RunCli(int argc, char** argv) {
  CLI::App app{"Dialog value profiler: turn-level values and rewards from dialog-level labels"};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string model_path, band_path;
  std::size_t max_len = 512;
  std::size_t patience = 3;
  app.add_option("--seed", seed, "Seed for every random choice");
  auto* model_opt = app.add_option("--model,-m", model_path, "Model file");
  app.add_option("--band", band_path, "Quantile band CSV");
  auto* max_len_opt = app.add_option("--max-len", max_len, "Token window length")
                          ->check(CLI::PositiveNumber);
  app.add_option("--patience", patience, "Turns below P10 before a bot-failure alert")
      ->check(CLI::PositiveNumber);
  (void)model_opt;

  auto model_max_len = [&]() -> std::optional<std::size_t> {
    if (max_len_opt->count() > 0) return max_len;
    return std::nullopt;
  };

  GenCorpusOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic corpus with a planted cue");
  gen_cmd->add_option("--n", gen.config.n_dialogs, "Number of dialogs");
  gen_cmd->add_option("--k", gen.config.num_issues, "Issue classes");
  gen_cmd->add_option("--m", gen.config.num_actions, "Action labels");
  gen_cmd->add_option("--noise", gen.config.noise, "Label noise probability");
  gen_cmd->add_option("--min-turns", gen.config.min_turns);
  gen_cmd->add_option("--max-turns", gen.config.max_turns);
  gen_cmd->add_option("--reveal-min-turn", gen.config.reveal_min_turn);
  gen_cmd->add_option("--reveal-max-turn", gen.config.reveal_max_turn);
  gen_cmd->add_option("--filler-vocab", gen.config.filler_vocab);
  gen_cmd->add_flag("--no-cost{false}", gen.config.with_cost, "Omit the cost label");
  gen_cmd->add_option("-o,--output", gen.output, "Corpus JSONL");
  gen_cmd->add_option("--oracle", gen.oracle_output, "Oracle table JSONL");

  TrainOptions train;
  std::string optimizer = "adam", collapse = "weighted_average", aggregation = "sum";
  double test_fraction = 0.0;
  auto* train_cmd = app.add_subcommand("train", "Train a profiler model");
  train_cmd->add_option("-i,--input", train.input, "Training corpus JSONL")->required();
  train_cmd->add_option("-o,--output", train.output, "Model file to write")->required();
  train_cmd->add_option("--epochs", train.fit.train.epochs);
  train_cmd->add_option("--lr", train.fit.train.learning_rate);
  train_cmd->add_option("--batch", train.fit.train.batch_size);
  train_cmd->add_option("--optimizer", optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  train_cmd->add_flag("--anneal", train.fit.train.anneal, "Decay the learning rate linearly to 0");
  train_cmd->add_option("--dim", train.fit.dim);
  train_cmd->add_option("--decay", train.fit.decay);
  train_cmd->add_option("--min-count", train.fit.min_count);
  train_cmd->add_option("--collapse", collapse)
      ->check(CLI::IsMember({"weighted_average", "quantile_sum"}));
  train_cmd->add_option("--action-aggregation", aggregation)->check(CLI::IsMember({"sum", "mean"}));
  train_cmd->add_option("--log", train.log_output, "Per-epoch loss TSV");
  auto* fraction_opt =
      train_cmd->add_option("--test-fraction", test_fraction, "Hold out this fraction");
  train_cmd->add_option("--test-out", train.test_output, "Where to write the held-out dialogs");

  EvalOptions eval;
  std::string positions;
  auto* eval_cmd = app.add_subcommand("eval", "Accuracy and calibration report");
  eval_cmd->add_option("-i,--input", eval.input, "Test corpus JSONL")->required();
  eval_cmd->add_option("--positions", positions, "Comma-separated token positions");
  eval_cmd->add_option("--bins", eval.bins)->check(CLI::Range(2, 1000));
  eval_cmd->add_option("-o,--output", eval.output, "Metrics JSON");

  ProfileOptions profile;
  std::string smoothing = "offline";
  auto* profile_cmd = app.add_subcommand("profile", "Export value traces");
  profile_cmd->add_option("-i,--input", profile.input, "Corpus JSONL")->required();
  profile_cmd->add_option("-o,--output", profile.output, "Trace JSONL");
  profile_cmd->add_option("--smoothing", smoothing)->check(CLI::IsMember({"offline", "online"}));

  CurvesOptions curves;
  std::string levels;
  auto* curves_cmd = app.add_subcommand("curves", "Quantile bands of progress curves");
  curves_cmd->add_option("-i,--input", curves.input, "Trace JSONL")->required();
  curves_cmd->add_option("--levels", levels, "Comma-separated quantile levels");
  curves_cmd->add_option("--min-support", curves.min_support);
  curves_cmd->add_option("-o,--output", curves.output, "Band CSV");
  curves_cmd->add_option("--classify", curves.classify_output, "Per-dialog class TSV");
  curves_cmd->add_option("--aspects", curves.aspects_output, "Per-aspect curve CSV");

  InspectOptions inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Turns with the largest/smallest rewards");
  inspect_cmd->add_option("-i,--input", inspect.traces, "Trace JSONL")->required();
  inspect_cmd->add_option("--corpus", inspect.corpus, "Corpus JSONL")->required();
  inspect_cmd->add_option("--aspect", inspect.aspect)
      ->check(CLI::IsMember({"issue", "action", "recontact", "total"}));
  inspect_cmd->add_option("-k", inspect.k);
  inspect_cmd->add_option("--mode", inspect.mode)
      ->check(CLI::IsMember({"positive", "negative", "zero"}));
  inspect_cmd->add_option("-o,--output", inspect.output, "TSV");

  RerankOptions rerank;
  auto* rerank_cmd = app.add_subcommand("rerank", "Re-rank generator candidates");
  rerank_cmd->add_option("-i,--input", rerank.input, "Request JSONL")->required();
  rerank_cmd->add_option("-o,--output", rerank.output, "Response JSONL");

  WeightsOptions weights;
  auto* weights_cmd = app.add_subcommand("weights", "Training-sample weights");
  weights_cmd->add_option("-i,--input", weights.input, "(context, target) JSONL")->required();
  weights_cmd->add_option("-o,--output", weights.output, "Weights TSV");

  ServeOptions serve;
  std::uint16_t port = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Stream values for live dialogs");
  auto* port_opt = serve_cmd->add_option("--listen", port, "Serve over TCP on 127.0.0.1:PORT instead of stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) {
      gen.config.seed = seed;
      GenCorpus(gen);
    } else if (train_cmd->parsed()) {
      train.fit.train.seed = seed;
      train.fit.train.max_len = max_len;
      train.fit.train.optimizer = ParseOptimizer(optimizer);
      train.fit.collapse = ParseCollapseMode(collapse);
      train.fit.action_aggregation =
          aggregation == "mean" ? ActionAggregation::kMean : ActionAggregation::kSum;
      if (fraction_opt->count() > 0) train.test_fraction = test_fraction;
      TrainModel(train);
    } else if (eval_cmd->parsed()) {
      eval.model = model_path;
      eval.max_len = model_max_len();
      if (!positions.empty()) eval.positions = ParseList<std::size_t>(positions);
      Eval(eval);
    } else if (profile_cmd->parsed()) {
      profile.model = model_path;
      profile.max_len = model_max_len();
      profile.smoothing = ParseSmoothing(smoothing);
      Profile(profile);
    } else if (curves_cmd->parsed()) {
      if (!levels.empty()) curves.levels = ParseList<double>(levels);
      curves.patience = patience;
      Curves(curves);
    } else if (inspect_cmd->parsed()) {
      Inspect(inspect);
    } else if (rerank_cmd->parsed()) {
      rerank.model = model_path;
      rerank.max_len = model_max_len();
      RerankRequests(rerank);
    } else if (weights_cmd->parsed()) {
      weights.model = model_path;
      weights.max_len = model_max_len();
      Weights(weights);
    } else if (serve_cmd->parsed()) {
      serve.model = model_path;
      serve.band = band_path;
      serve.patience = patience;
      serve.max_len = model_max_len();
      if (port_opt->count() > 0) serve.port = port;
      Serve(serve);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace vp::cli
