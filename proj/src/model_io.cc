#include "vp/model_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vp/error.h"

namespace vp {

namespace {

constexpr char kMagic[8] = {'V', 'P', 'M', 'O', 'D', 'E', 'L', '\0'};

std::uint64_t Fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void U8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) U8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) U8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Str(const std::string& s) {
    U32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void F64Array(std::span<const double> a) {
    U64(a.size());
    for (double v : a) F64(v);
  }
  void Raw(std::string_view s) { out_ += s; }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : in_(bytes) {}

  std::uint8_t U8() {
    Need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t U32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(U8()) << (8 * i);
    return v;
  }
  std::uint64_t U64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(U8()) << (8 * i);
    return v;
  }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Str() {
    const std::uint32_t n = U32();
    Need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> F64Array() {
    const std::uint64_t n = U64();
    Need(n * 8);
    std::vector<double> a(n);
    for (double& v : a) v = F64();
    return a;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void Need(std::uint64_t n) const {
    if (n > in_.size() - pos_) throw ModelFormatError("model file is truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

std::size_t CheckedSize(std::uint64_t v, std::size_t limit, const char* what) {
  if (v > limit) throw ModelFormatError(std::string("implausible ") + what + " in model file");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string SerializeModel(const ProfilerModel& model) {
  const auto* encoder = dynamic_cast<const ReferenceEncoder*>(model.predictor.get());
  if (!encoder) throw Error("only reference-encoder models can be saved");
  const TaskSchema& schema = encoder->schema();
  const EncoderParams& params = encoder->params();
  const Prior& prior = model.prior;
  const ScaleCalibration& cal = model.calibration;

  Writer w;
  w.Raw(std::string_view(kMagic, sizeof(kMagic)));
  w.U32(kModelFormatVersion);
  w.U64(model.vocab.Hash());

  w.U32(static_cast<std::uint32_t>(schema.issues.size()));
  for (const auto& s : schema.issues) w.Str(s);
  w.U32(static_cast<std::uint32_t>(schema.actions.size()));
  for (const auto& s : schema.actions) w.Str(s);
  w.U32(static_cast<std::uint32_t>(schema.cost_levels.size()));
  for (double q : schema.cost_levels) w.F64(q);

  w.U32(static_cast<std::uint32_t>(params.dim));
  w.F64(params.decay);
  w.U64(model.max_len);

  w.U64(model.vocab.size());
  for (const auto& t : model.vocab.tokens()) w.Str(t);

  for (std::span<const double> a : params.Arrays()) w.F64Array(a);

  w.U64(prior.num_dialogs);
  for (std::size_t c : prior.issue_counts) w.U64(c);
  for (std::size_t c : prior.action_counts) w.U64(c);
  w.U64(prior.no_recontact_count);
  w.F64Array(prior.issue);
  w.F64Array(prior.actions);
  w.F64(prior.no_recontact);

  w.U8(static_cast<std::uint8_t>(cal.mode));
  w.U8(static_cast<std::uint8_t>(cal.action_aggregation));
  w.U8(static_cast<std::uint8_t>(cal.cost_mode));
  w.F64(cal.alpha);
  w.F64(cal.beta);
  w.U8(cal.range ? 1 : 0);
  w.F64(cal.range ? cal.range->first : 0.0);
  w.F64(cal.range ? cal.range->second : 0.0);
  w.F64Array(cal.issue_samples);
  w.F64Array(cal.action_samples);
  w.F64Array(cal.norecon_samples);

  w.U64(Fnv1a(w.bytes()));
  return std::move(w.bytes());
}

ProfilerModel DeserializeModel(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw ModelFormatError("not a value-profiler model file");
  }
  Reader header(std::string_view(bytes).substr(sizeof(kMagic)));
  const std::uint32_t version = header.U32();
  if (version != kModelFormatVersion) {
    throw ModelFormatError("unsupported model format version " + std::to_string(version) +
                           " (this build reads version " +
                           std::to_string(kModelFormatVersion) + ")");
  }
  if (bytes.size() < sizeof(kMagic) + 4 + 8 + 8) throw ModelFormatError("model file is truncated");
  const std::string_view body(bytes.data(), bytes.size() - 8);
  Reader trailer(std::string_view(bytes).substr(bytes.size() - 8));
  if (trailer.U64() != Fnv1a(body)) {
    throw ModelFormatError("model file checksum mismatch (truncated or corrupt)");
  }

  Reader r(body.substr(sizeof(kMagic) + 4));
  const std::uint64_t tokenizer_hash = r.U64();
  constexpr std::size_t kMax = std::size_t{1} << 32;

  TaskSchema schema;
  schema.issues.resize(CheckedSize(r.U32(), kMax, "issue count"));
  for (auto& s : schema.issues) s = r.Str();
  schema.actions.resize(CheckedSize(r.U32(), kMax, "action count"));
  for (auto& s : schema.actions) s = r.Str();
  schema.cost_levels.resize(CheckedSize(r.U32(), r.remaining() / 8, "level count"));
  for (double& q : schema.cost_levels) q = r.F64();

  EncoderParams params;
  params.dim = r.U32();
  params.decay = r.F64();
  ProfilerModel model;
  model.max_len = CheckedSize(r.U64(), kMax, "max_len");

  std::vector<std::string> tokens(CheckedSize(r.U64(), r.remaining() / 4, "vocabulary size"));
  for (auto& t : tokens) t = r.Str();
  try {
    model.vocab = Vocab(std::move(tokens));
  } catch (const Error& e) {
    throw ModelFormatError(std::string("bad vocabulary: ") + e.what());
  }
  if (model.vocab.Hash() != tokenizer_hash) {
    throw ModelFormatError("tokenizer hash does not match the stored vocabulary");
  }
  params.vocab_size = model.vocab.size();

  params.embedding = r.F64Array();
  params.issue_w = r.F64Array();
  params.issue_b = r.F64Array();
  params.action_w = r.F64Array();
  params.action_b = r.F64Array();
  params.norecon_w = r.F64Array();
  params.norecon_b = r.F64Array();
  params.cost_w = r.F64Array();
  params.cost_b = r.F64Array();

  Prior& prior = model.prior;
  prior.num_dialogs = r.U64();
  prior.issue_counts.resize(schema.issues.size());
  for (auto& c : prior.issue_counts) c = r.U64();
  prior.action_counts.resize(schema.actions.size());
  for (auto& c : prior.action_counts) c = r.U64();
  prior.no_recontact_count = r.U64();
  prior.issue = r.F64Array();
  prior.actions = r.F64Array();
  prior.no_recontact = r.F64();

  ScaleCalibration& cal = model.calibration;
  const std::uint8_t mode = r.U8();
  const std::uint8_t aggregation = r.U8();
  const std::uint8_t cost_mode = r.U8();
  if (mode > 1 || aggregation > 1 || cost_mode > 1) {
    throw ModelFormatError("bad calibration enum in model file");
  }
  cal.mode = static_cast<CollapseMode>(mode);
  cal.action_aggregation = static_cast<ActionAggregation>(aggregation);
  cal.cost_mode = static_cast<RegressionMode>(cost_mode);
  cal.alpha = r.F64();
  cal.beta = r.F64();
  const bool has_range = r.U8() != 0;
  const double lo = r.F64();
  const double hi = r.F64();
  if (has_range) cal.range = {lo, hi};
  cal.issue_samples = r.F64Array();
  cal.action_samples = r.F64Array();
  cal.norecon_samples = r.F64Array();
  if (r.remaining() != 0) throw ModelFormatError("trailing bytes in model file");

  if (prior.issue.size() != schema.issues.size() ||
      prior.actions.size() != schema.actions.size()) {
    throw ModelFormatError("prior does not match the task schema");
  }
  try {
    cal.Validate();
    model.predictor = std::make_shared<ReferenceEncoder>(std::move(schema), std::move(params));
  } catch (const ModelFormatError&) {
    throw;
  } catch (const Error& e) {
    throw ModelFormatError(std::string("invalid model: ") + e.what());
  }
  return model;
}

void SaveModel(const ProfilerModel& model, const std::string& path) {
  const std::string bytes = SerializeModel(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path);
}

ProfilerModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DeserializeModel(bytes);
}

}  // namespace vp
