#ifndef VP_TOOLS_COMMANDS_H_
#define VP_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vp/synthetic.h"
#include "vp/profiler.h"

namespace vp::cli {

// "-" stands for stdin/stdout wherever a path is accepted.

struct GenCorpusOptions {
  SyntheticConfig config;
  std::string output = "-";
  std::string oracle_output;
};
void GenCorpus(const GenCorpusOptions& options);

struct TrainOptions {
  std::string input;
  std::string output;
  FitOptions fit;
  std::string log_output;
  // When set, a seeded split holds out this fraction and writes it to test_output.
  std::optional<double> test_fraction;
  std::string test_output;
};
void TrainModel(const TrainOptions& options);

struct EvalOptions {
  std::string model;
  std::string input;
  std::vector<std::size_t> positions = {0, 64, 256, 511};
  std::size_t bins = 10;
  std::string output = "-";
  std::optional<std::size_t> max_len;
};
void Eval(const EvalOptions& options);

struct ProfileOptions {
  std::string model;
  std::string input;
  std::string output = "-";
  Smoothing smoothing = Smoothing::kOffline;
  std::optional<std::size_t> max_len;
};
void Profile(const ProfileOptions& options);

struct CurvesOptions {
  std::string input;
  std::vector<double> levels = {0.1, 0.5, 0.9};
  std::size_t min_support = 20;
  std::string output = "-";
  std::string classify_output;
  std::string aspects_output;
  std::size_t patience = 3;
};
void Curves(const CurvesOptions& options);

struct InspectOptions {
  std::string traces;
  std::string corpus;
  std::string aspect = "total";
  std::size_t k = 10;
  std::string mode = "positive";
  std::string output = "-";
};
void Inspect(const InspectOptions& options);

struct RerankOptions {
  std::string model;
  std::string input;
  std::string output = "-";
  std::optional<std::size_t> max_len;
};
void RerankRequests(const RerankOptions& options);

struct WeightsOptions {
  std::string model;
  std::string input;
  std::string output = "-";
  std::optional<std::size_t> max_len;
};
void Weights(const WeightsOptions& options);

struct ServeOptions {
  std::string model;
  std::string band;
  std::size_t patience = 3;
  std::optional<std::size_t> max_len;
  std::optional<std::uint16_t> port;
};
void Serve(const ServeOptions& options);

// Full command-line entry point; returns the process exit code.
int RunCli(int argc, char** argv);

}  // namespace vp::cli

#endif  // VP_TOOLS_COMMANDS_H_
