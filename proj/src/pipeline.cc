// Copyright 2026 The cpstop Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpstop/pipeline.h"

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "cpstop/conformal.h"
#include "cpstop/error.h"
#include "cpstop/evaluation.h"
#include "cpstop/trace_math.h"
#include "cpstop/util.h"

namespace cpstop {
namespace fs = std::filesystem;

namespace {

constexpr int kFormatVersion = 1;

void InvalidConfig(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

void CheckKeys(const Json& json, std::initializer_list<const char*> allowed,
               const char* what) {
  if (!json.is_object()) InvalidConfig(std::string(what) + " must be an object");
  for (const auto& [key, value] : json.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) InvalidConfig("unknown key '" + key + "' in " + what);
  }
}

template <typename T>
void Read(const Json& json, const char* key, T& out) {
  if (!json.contains(key)) return;
  try {
    out = json.at(key).get<T>();
  } catch (const Json::exception& e) {
    InvalidConfig(std::string("config key '") + key + "': " + e.what());
  }
}

std::string Fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string MeanSd(double mean, double sd, int precision) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", precision, mean, precision, sd);
  return buf;
}

Split SplitOf(DataSet set) {
  switch (set) {
    case DataSet::kTrain:
      return Split::kTrain;
    case DataSet::kCalibration:
      return Split::kCalibration;
    case DataSet::kTest:
    case DataSet::kPool:
      return Split::kTest;
  }
  return Split::kTest;
}

// Seeded synthetic (model, batch) pair for the gradient check.
std::pair<GapPredictorModel, LossBatch> RandomCheckPair(
    const FeatureConfig& features, const std::vector<int>& hidden,
    std::uint64_t seed) {
  const int dim = FeatureDimension(features);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FeatureNorm norm{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
  GapPredictorModel model = InitModel(features, norm, hidden, Mix64(seed));
  LossBatch batch;
  batch.trace_count = 4;
  for (int s = 0; s < 32; ++s) {
    LossSample sample;
    for (int k = 0; k < dim; ++k) sample.features.push_back(normal(rng));
    sample.lower = -100.0 * unit(rng);
    sample.upper = sample.lower + 10.0 * unit(rng);
    sample.target = (sample.upper - sample.lower) * unit(rng);
    sample.weight = 0.25 * unit(rng);
    batch.samples.push_back(std::move(sample));
  }
  return {std::move(model), std::move(batch)};
}

}  // namespace

std::vector<std::string> DefaultThetaKeys(Family family) {
  switch (family) {
    case Family::kKnapsack:
      return {"capacity_ratio", "total_value", "total_weight"};
    case Family::kSetCover:
      return {"mean_cost", "realized_density"};
    case Family::kCflpSmall:
      return {"total_demand", "total_capacity", "mean_fixed_cost"};
  }
  return {};
}

void PipelineConfig::Validate() const {
  if (train_size < 1 || calibration_size < 1 || test_size < 1) {
    InvalidConfig("train, calibration and test sizes must be >= 1");
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) InvalidConfig("epsilon must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) InvalidConfig("alpha must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) InvalidConfig("delta must lie in (0, 1)");
  if (output_dir.empty()) InvalidConfig("output_dir must be nonempty");
  if (workers < 0) InvalidConfig("workers must be >= 0");
  if (coverage.trials < 1 || coverage.c < 1) {
    InvalidConfig("coverage trials and c must be >= 1");
  }
  if (coverage.pool_size < coverage.c + 1) {
    InvalidConfig("coverage pool_size must be at least c + 1");
  }
  solver.Validate();
  training.Validate();
  ResolveParams(family, params);
}

PipelineConfig PipelineConfigFromJson(const Json& json) {
  CheckKeys(json,
            {"family", "params", "sizes", "master_seed", "solver", "training",
             "features", "epsilon", "alpha", "delta", "output_dir", "workers",
             "coverage"},
            "pipeline config");
  PipelineConfig c;
  if (json.contains("family")) {
    c.family = ParseFamily(json.at("family").get<std::string>());
  }
  if (json.contains("params")) {
    const Json& p = json.at("params");
    if (!p.is_object()) InvalidConfig("params must be an object");
    for (const auto& [k, v] : p.items()) {
      if (!v.is_number()) InvalidConfig("param '" + k + "' must be a number");
      c.params[k] = v.get<double>();
    }
  }
  if (json.contains("sizes")) {
    const Json& s = json.at("sizes");
    CheckKeys(s, {"train", "calibration", "test"}, "sizes");
    Read(s, "train", c.train_size);
    Read(s, "calibration", c.calibration_size);
    Read(s, "test", c.test_size);
  }
  Read(json, "master_seed", c.master_seed);
  if (json.contains("solver")) {
    Json solver = json.at("solver");
    if (solver.is_object() && !solver.contains("epsilon")) solver["epsilon"] = 0.0;
    c.solver = BnbConfigFromJson(solver);
  }
  if (json.contains("training")) c.training = TrainingConfigFromJson(json.at("training"));
  c.features.theta_keys = DefaultThetaKeys(c.family);
  if (json.contains("features")) {
    Json features = json.at("features");
    if (features.is_object() && !features.contains("theta_keys")) {
      features["theta_keys"] = c.features.theta_keys;
    }
    c.features = FeatureConfigFromJson(features);
  }
  Read(json, "epsilon", c.epsilon);
  Read(json, "alpha", c.alpha);
  Read(json, "delta", c.delta);
  Read(json, "output_dir", c.output_dir);
  Read(json, "workers", c.workers);
  if (json.contains("coverage")) {
    const Json& v = json.at("coverage");
    CheckKeys(v, {"trials", "c", "pool_size", "seed"}, "coverage");
    Read(v, "trials", c.coverage.trials);
    Read(v, "c", c.coverage.c);
    Read(v, "pool_size", c.coverage.pool_size);
    Read(v, "seed", c.coverage.seed);
  }
  c.Validate();
  return c;
}

Json PipelineConfigToJson(const PipelineConfig& c) {
  Json params = Json::object();
  for (const auto& [k, v] : ResolveParams(c.family, c.params)) params[k] = v;
  return Json{
      {"family", std::string(FamilyName(c.family))},
      {"params", std::move(params)},
      {"sizes",
       {{"train", c.train_size},
        {"calibration", c.calibration_size},
        {"test", c.test_size}}},
      {"master_seed", c.master_seed},
      {"solver", BnbConfigToJson(c.solver)},
      {"training", TrainingConfigToJson(c.training)},
      {"features", FeatureConfigToJson(c.features)},
      {"epsilon", c.epsilon},
      {"alpha", c.alpha},
      {"delta", c.delta},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
      {"coverage",
       {{"trials", c.coverage.trials},
        {"c", c.coverage.c},
        {"pool_size", c.coverage.pool_size},
        {"seed", c.coverage.seed}}},
  };
}

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  Json json;
  try {
    json = ReadJson(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw Error(ErrorCode::kInvalidArgument, e.what());
    throw;
  }
  return PipelineConfigFromJson(json);
}

std::string DataSetName(DataSet set) {
  switch (set) {
    case DataSet::kTrain:
      return "train";
    case DataSet::kCalibration:
      return "calibration";
    case DataSet::kTest:
      return "test";
    case DataSet::kPool:
      return "pool";
  }
  return "?";
}

DataSet ParseDataSet(const std::string& name) {
  if (name == "train") return DataSet::kTrain;
  if (name == "calibration") return DataSet::kCalibration;
  if (name == "test") return DataSet::kTest;
  if (name == "pool") return DataSet::kPool;
  throw Error(ErrorCode::kInvalidArgument, "unknown data set '" + name + "'");
}

Json ChecksResult::ToJson() const {
  return Json{{"lemma_ordering",
               {{"c", 9}, {"n", 5}, {"trials", 100000},
                {"probability", lemma_probability}, {"exact", lemma_exact}}},
              {"gradient_check",
               {{"max_relative_error", gradient.max_relative_error},
                {"checked", gradient.checked},
                {"skipped_at_kink", gradient.skipped_at_kink}}},
              {"expected_bound", {{"args", {0.0, 1.0, 100, 0.05}}, {"value", expected_bound}}},
              {"success_bound", {{"args", {0.05, 100, 0.05}}, {"value", success_bound}}}};
}

struct Pipeline::LoadedSet {
  std::vector<BoundTrace> traces;
  std::vector<ThetaParams> theta;
};

Pipeline::Pipeline(PipelineConfig config, fs::path output_root)
    : config_(std::move(config)), run_dir_(output_root / config_.output_dir) {
  config_.Validate();
  std::error_code ec;
  fs::create_directories(run_dir_, ec);
  if (ec) throw Error(ErrorCode::kIoError, run_dir_.string() + ": " + ec.message());
  auto console = std::make_shared<spdlog::sinks::stderr_color_sink_mt>();
  console->set_pattern("[%l] %v");
  auto file = std::make_shared<spdlog::sinks::basic_file_sink_mt>(
      (run_dir_ / "run.log").string());
  file->set_pattern("%Y-%m-%dT%H:%M:%S.%e %l %v");
  log_ = std::make_shared<spdlog::logger>("cpstop",
                                          spdlog::sinks_init_list{console, file});
  log_->set_level(spdlog::level::info);
  log_->flush_on(spdlog::level::info);
}

Pipeline::~Pipeline() = default;

int Pipeline::SetSize(DataSet set) const {
  switch (set) {
    case DataSet::kTrain:
      return config_.train_size;
    case DataSet::kCalibration:
      return config_.calibration_size;
    case DataSet::kTest:
      return config_.test_size;
    case DataSet::kPool:
      return config_.coverage.pool_size;
  }
  return 0;
}

fs::path Pipeline::InstanceDir(DataSet set) const {
  return run_dir_ / "instances" / DataSetName(set);
}

fs::path Pipeline::TraceDir(DataSet set) const {
  return run_dir_ / "traces" / DataSetName(set);
}

std::string Pipeline::InstancesHash(DataSet set) const {
  Json params = Json::object();
  for (const auto& [k, v] : ResolveParams(config_.family, config_.params)) {
    params[k] = v;
  }
  return HashJson({{"format", kFormatVersion},
                   {"family", std::string(FamilyName(config_.family))},
                   {"params", std::move(params)},
                   {"master_seed", config_.master_seed},
                   {"split", std::string(SplitName(SplitOf(set)))},
                   {"count", SetSize(set)}});
}

std::string Pipeline::TracesHash(DataSet set) const {
  return HashJson({{"instances", InstancesHash(set)},
                   {"solver", BnbConfigToJson(config_.solver)}});
}

std::string Pipeline::ModelHash() const {
  return HashJson({{"traces", TracesHash(DataSet::kTrain)},
                   {"training", TrainingConfigToJson(config_.training)},
                   {"features", FeatureConfigToJson(config_.features)}});
}

std::string Pipeline::CalibrationHash() const {
  return HashJson({{"model", ModelHash()},
                   {"traces", TracesHash(DataSet::kCalibration)},
                   {"epsilon", config_.epsilon},
                   {"alpha", config_.alpha}});
}

std::string Pipeline::ReportHash() const {
  return HashJson({{"calibration", CalibrationHash()},
                   {"traces", TracesHash(DataSet::kTest)},
                   {"delta", config_.delta}});
}

void Pipeline::GenerateSet(DataSet set) {
  const InstanceSet generated =
      GenerateFamily(config_.family, config_.params, config_.master_seed,
                     SetSize(set), SplitOf(set));
  const fs::path dir = InstanceDir(set);
  Json listing = Json::array();
  int written = 0;
  for (const MilpInstance& inst : generated.instances) {
    const fs::path path = dir / (inst.id + ".json");
    const std::string text = InstanceToJson(inst).dump() + "\n";
    std::error_code ec;
    if (!fs::exists(path, ec) || ReadFile(path) != text) {
      WriteFile(path, text);
      ++written;
    }
    listing.push_back({{"id", inst.id}, {"theta_seed", inst.theta_seed}});
  }
  Json params = Json::object();
  for (const auto& [k, v] : generated.params) params[k] = v;
  WriteJson(dir / "manifest.json",
            {{"config_hash", InstancesHash(set)},
             {"set", DataSetName(set)},
             {"split", std::string(SplitName(generated.split))},
             {"family", std::string(FamilyName(generated.family))},
             {"params", std::move(params)},
             {"master_seed", generated.master_seed},
             {"instances", std::move(listing)}});
  log_->info("gen {}: {} instances ({} written)", DataSetName(set),
             generated.instances.size(), written);
}

void Pipeline::Gen() {
  WriteJson(run_dir_ / "config.json", PipelineConfigToJson(config_));
  for (DataSet set : {DataSet::kTrain, DataSet::kCalibration, DataSet::kTest}) {
    GenerateSet(set);
  }
}

std::vector<MilpInstance> Pipeline::LoadInstances(DataSet set) const {
  const fs::path manifest_path = InstanceDir(set) / "manifest.json";
  std::error_code ec;
  if (!fs::exists(manifest_path, ec)) {
    throw Error(ErrorCode::kMissingUpstream,
                "no " + DataSetName(set) + " instances; run gen first");
  }
  const Json manifest = ReadJson(manifest_path);
  if (manifest.value("config_hash", "") != InstancesHash(set)) {
    throw Error(ErrorCode::kStaleArtifact,
                manifest_path.string() + " was generated under another config");
  }
  std::vector<MilpInstance> out;
  for (const Json& entry : manifest.at("instances")) {
    const fs::path path =
        InstanceDir(set) / (entry.at("id").get<std::string>() + ".json");
    if (!fs::exists(path, ec)) {
      throw Error(ErrorCode::kMissingUpstream, path.string() + " is missing");
    }
    out.push_back(InstanceFromJson(ReadJson(path)));
  }
  return out;
}

void Pipeline::Solve(DataSet set) {
  const std::vector<MilpInstance> instances = LoadInstances(set);
  const std::string hash = TracesHash(set);
  const fs::path dir = TraceDir(set);
  std::atomic<int> kept{0}, solved{0}, failed{0};
  ParallelFor(static_cast<std::int64_t>(instances.size()), config_.workers,
              [&](std::int64_t i) {
                const MilpInstance& inst = instances[i];
                const fs::path path = dir / (inst.id + ".jsonl");
                std::error_code ec;
                if (fs::exists(path, ec)) {
                  try {
                    const TraceFile f = TraceFromJsonl(ReadFile(path));
                    if (f.config_hash == hash && f.trace.instance_id == inst.id) {
                      ++kept;
                      return;
                    }
                  } catch (const Error& e) {
                    log_->warn("re-solving {}: {}", inst.id, e.what());
                  }
                }
                try {
                  const SolveResult result = cpstop::Solve(inst, config_.solver);
                  WriteFile(path, TraceToJsonl(result.trace, hash));
                  ++solved;
                } catch (const Error& e) {
                  if (e.code() == ErrorCode::kIoError) throw;
                  log_->warn("skipping {}: solver failure: {}", inst.id, e.what());
                  ++failed;
                }
              });
  log_->info("solve {}: {} solved, {} up to date, {} failed", DataSetName(set),
             solved.load(), kept.load(), failed.load());
}

Pipeline::LoadedSet Pipeline::LoadTraces(DataSet set) const {
  const std::vector<MilpInstance> instances = LoadInstances(set);
  const std::string hash = TracesHash(set);
  LoadedSet loaded;
  int missing = 0;
  for (const MilpInstance& inst : instances) {
    const fs::path path = TraceDir(set) / (inst.id + ".jsonl");
    std::error_code ec;
    if (!fs::exists(path, ec)) {
      ++missing;
      continue;
    }
    TraceFile f = TraceFromJsonl(ReadFile(path));
    if (f.config_hash != hash) {
      throw Error(ErrorCode::kStaleArtifact,
                  path.string() + " was solved under another config");
    }
    loaded.traces.push_back(std::move(f.trace));
    loaded.theta.push_back(inst.theta_params);
  }
  if (loaded.traces.empty()) {
    throw Error(ErrorCode::kMissingUpstream,
                "no " + DataSetName(set) + " traces; run solve first");
  }
  if (missing > 0) {
    log_->warn("{}: {} of {} traces missing", DataSetName(set), missing,
               instances.size());
  }
  return loaded;
}

void Pipeline::Train() {
  const LoadedSet set = LoadTraces(DataSet::kTrain);
  std::vector<TrainingTrace> data;
  for (std::size_t i = 0; i < set.traces.size(); ++i) {
    if (set.traces[i].z_star) {
      data.push_back({set.traces[i], set.theta[i]});
    } else {
      log_->warn("train: {} has no proven optimum, excluded",
                 set.traces[i].instance_id);
    }
  }
  GapPredictorModel model = cpstop::Train(data, config_.training, config_.features);
  model.config_hash = ModelHash();
  WriteJson(ModelPath(), ModelToJson(model));
  std::string curve = "evaluation,train_loss,validation_loss\n";
  for (std::size_t e = 0; e < model.train_loss.size(); ++e) {
    curve += std::to_string(e) + "," + Fmt(model.train_loss[e]) + "," +
             (e < model.validation_loss.size() ? Fmt(model.validation_loss[e]) : "") +
             "\n";
  }
  WriteFile(run_dir_ / "loss_curve.csv", curve);
  log_->info("train: {} traces, loss {} -> {}", data.size(),
             Fmt(model.train_loss.front()), Fmt(model.train_loss.back()));
}

GapPredictorModel Pipeline::LoadModel() const {
  std::error_code ec;
  if (!fs::exists(ModelPath(), ec)) {
    throw Error(ErrorCode::kMissingUpstream, "no model; run train first");
  }
  GapPredictorModel model = ModelFromJson(ReadJson(ModelPath()));
  if (model.config_hash != ModelHash()) {
    throw Error(ErrorCode::kStaleArtifact,
                "model was trained under another feature, training or data config");
  }
  return model;
}

std::vector<GapSeries> Pipeline::PredictAll(const GapPredictorModel& model,
                                            const LoadedSet& set) const {
  std::vector<GapSeries> out(set.traces.size());
  ParallelFor(static_cast<std::int64_t>(out.size()), config_.workers,
              [&](std::int64_t i) {
                out[i] = PredictSeries(model, set.traces[i], set.theta[i]);
              });
  return out;
}

void Pipeline::Calibrate() {
  const GapPredictorModel model = LoadModel();
  const LoadedSet set = LoadTraces(DataSet::kCalibration);
  const std::vector<GapSeries> predictions = PredictAll(model, set);
  std::vector<double> scores;
  std::vector<BoundTrace> solved;
  std::vector<GapSeries> solved_predictions;
  int dropped = 0;
  for (std::size_t i = 0; i < set.traces.size(); ++i) {
    const BoundTrace& trace = set.traces[i];
    if (!trace.z_star) {
      // Without ground truth the trace cannot certify epsilon-optimality;
      // it gets the conservative score.
      scores.push_back(0.0);
      ++dropped;
      continue;
    }
    const ConformalScore s = ComputeConformalScore(
        TrueGap(trace, *trace.z_star), predictions[i], config_.epsilon);
    scores.push_back(s.score);
    if (s.degenerate) ++dropped;
    solved.push_back(trace);
    solved_predictions.push_back(predictions[i]);
  }
  CalibrationResult result = cpstop::Calibrate(
      scores, static_cast<int>(scores.size()), config_.alpha, config_.epsilon);
  result.dropped_count = dropped;
  result.config_hash = CalibrationHash();
  if (!solved.empty()) {
    result.replay = ComputeReplayStats(solved, solved_predictions, result.kappa,
                                       config_.epsilon);
  }
  WriteJson(CalibrationPath(), CalibrationToJson(result));
  log_->info("calibrate: c = {}, n = {}, kappa = {}, degenerate = {}", result.c,
             result.n, Fmt(result.kappa), dropped);
}

CalibrationResult Pipeline::LoadCalibration() const {
  std::error_code ec;
  if (!fs::exists(CalibrationPath(), ec)) {
    throw Error(ErrorCode::kMissingUpstream, "no calibration; run calibrate first");
  }
  CalibrationResult c = CalibrationFromJson(ReadJson(CalibrationPath()));
  if (c.config_hash != CalibrationHash()) {
    throw Error(ErrorCode::kStaleArtifact,
                "calibration was computed under another model or config");
  }
  return c;
}

void Pipeline::Evaluate() {
  const CalibrationResult calibration = LoadCalibration();
  const GapPredictorModel model = LoadModel();
  LoadedSet all = LoadTraces(DataSet::kTest);
  LoadedSet set;
  for (std::size_t i = 0; i < all.traces.size(); ++i) {
    if (all.traces[i].z_star) {
      set.traces.push_back(std::move(all.traces[i]));
      set.theta.push_back(std::move(all.theta[i]));
    } else {
      log_->warn("evaluate: {} has no proven optimum, excluded",
                 all.traces[i].instance_id);
    }
  }
  const std::vector<GapSeries> predictions = PredictAll(model, set);
  EvaluationReport report = cpstop::Evaluate(
      set.traces, predictions, calibration, {config_.epsilon, config_.delta});
  report.config_hash = ReportHash();
  WriteJson(ReportPath(), ReportToJson(report));

  std::string table = "instance_id,deterministic_tick,reached_eps";
  for (StopMethod m : kAllMethods) {
    const std::string name(StopMethodName(m));
    table += "," + name + "_tick," + name + "_nodes," + name + "_suboptimality," +
             name + "_within_eps";
  }
  table += "\n";
  for (const EvaluationItem& item : report.items) {
    table += item.instance_id + "," + std::to_string(item.deterministic_tick) +
             "," + (item.reached_eps ? "1" : "0");
    for (const StopOutcome& o : item.outcomes) {
      table += "," + std::to_string(o.tick) + "," + std::to_string(o.nodes) + "," +
               Fmt(o.suboptimality) + "," + (o.within_eps ? "1" : "0");
    }
    table += "\n";
  }
  WriteFile(run_dir_ / "per_instance.csv", table);

  std::string curve = "budget";
  for (StopMethod m : kAllMethods) curve += "," + std::string(StopMethodName(m));
  curve += "\n";
  for (const SolvedCurveRow& row : SolvedCurve(report)) {
    curve += std::to_string(row.budget);
    for (int s : row.solved) curve += "," + std::to_string(s);
    curve += "\n";
  }
  WriteFile(run_dir_ / "solved_curve.csv", curve);
  log_->info("evaluate: {} instances, coverage {}, mean tick reduction {}",
             report.items.size(), Fmt(report.coverage),
             Fmt(report.mean_tick_reduction));
}

std::string Pipeline::Report() {
  std::error_code ec;
  if (!fs::exists(ReportPath(), ec)) {
    throw Error(ErrorCode::kMissingUpstream, "no report; run evaluate first");
  }
  const Json report = ReadJson(ReportPath());
  if (report.value("config_hash", "") != ReportHash()) {
    throw Error(ErrorCode::kStaleArtifact, "report was produced under another config");
  }
  std::string csv = "method,ticks,suboptimality,nodes,correct,speedup\n";
  std::ostringstream text;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %-26s %-24s %-26s %-8s %s\n", "method",
                "ticks", "suboptimality", "nodes", "correct", "speedup");
  text << line;
  for (StopMethod m : kAllMethods) {
    const std::string name(StopMethodName(m));
    const Json& s = report.at("methods").at(name);
    const std::string ticks =
        MeanSd(s.at("mean_ticks").get<double>(), s.at("sd_ticks").get<double>(), 1);
    std::string sub = MeanSd(s.at("mean_suboptimality").get<double>(),
                             s.at("sd_suboptimality").get<double>(), 5);
    const int inf = s.at("infinite_count").get<int>();
    if (inf > 0) sub += " (+" + std::to_string(inf) + " inf)";
    const std::string nodes =
        MeanSd(s.at("mean_nodes").get<double>(), s.at("sd_nodes").get<double>(), 1);
    char correct[32];
    std::snprintf(correct, sizeof(correct), "%.1f%%",
                  100.0 * s.at("correct").get<double>());
    const std::string speedup = MeanSd(s.at("mean_speedup").get<double>(),
                                       s.at("sd_speedup").get<double>(), 3);
    csv += name + "," + ticks + "," + sub + "," + nodes + "," + correct + "," +
           speedup + "\n";
    std::snprintf(line, sizeof(line), "%-18s %-26s %-24s %-26s %-8s %s\n",
                  name.c_str(), ticks.c_str(), sub.c_str(), nodes.c_str(), correct,
                  speedup.c_str());
    text << line;
  }
  const Json& a = report.at("aggregates");
  text << "kappa " << report.at("kappa").dump() << ", coverage "
       << a.at("coverage").dump() << ", expected suboptimality bound "
       << a.at("expected_suboptimality_bound").dump() << ", success bound "
       << a.at("success_bound").dump() << "\n";
  WriteFile(run_dir_ / "report_table.csv", csv);
  return text.str();
}

CoverageResult Pipeline::Coverage() {
  const GapPredictorModel model = LoadModel();
  const fs::path manifest = InstanceDir(DataSet::kPool) / "manifest.json";
  std::error_code ec;
  bool fresh = false;
  if (fs::exists(manifest, ec)) {
    fresh = ReadJson(manifest).value("config_hash", "") == InstancesHash(DataSet::kPool);
  }
  if (!fresh) GenerateSet(DataSet::kPool);
  Solve(DataSet::kPool);
  const LoadedSet set = LoadTraces(DataSet::kPool);
  LoadedSet solved;
  for (std::size_t i = 0; i < set.traces.size(); ++i) {
    if (set.traces[i].z_star) {
      solved.traces.push_back(set.traces[i]);
      solved.theta.push_back(set.theta[i]);
    }
  }
  const std::vector<GapSeries> predictions = PredictAll(model, solved);
  std::vector<ReplayItem> pool;
  pool.reserve(solved.traces.size());
  for (std::size_t i = 0; i < solved.traces.size(); ++i) {
    pool.emplace_back(solved.traces[i], predictions[i], config_.epsilon);
  }
  CoverageOptions options;
  options.trials = config_.coverage.trials;
  options.c = config_.coverage.c;
  options.alpha = config_.alpha;
  options.delta = config_.delta;
  options.seed = config_.coverage.seed;
  options.workers = config_.workers;
  const CoverageResult result = MonteCarloCoverage(pool, options);
  Json out = CoverageToJson(result);
  out["pool_size"] = pool.size();
  out["alpha"] = config_.alpha;
  out["epsilon"] = config_.epsilon;
  out["target"] = 1.0 - config_.alpha;
  out["config_hash"] =
      HashJson({{"model", ModelHash()},
                {"traces", TracesHash(DataSet::kPool)},
                {"epsilon", config_.epsilon},
                {"alpha", config_.alpha},
                {"trials", options.trials},
                {"c", options.c},
                {"seed", options.seed}});
  WriteJson(run_dir_ / "coverage.json", out);
  log_->info("coverage: {} trials, mean {} ± {} (target {})", options.trials,
             Fmt(result.mean_coverage), Fmt(result.stderr_coverage),
             Fmt(1.0 - config_.alpha));
  return result;
}

ChecksResult Pipeline::Checks() {
  ChecksResult r;
  r.lemma_probability = LemmaOrderingCheck(9, 5, 100000, config_.master_seed);
  r.lemma_exact = 5.0 / 10.0;
  for (int pair = 0; pair < 10; ++pair) {
    const auto [model, batch] = RandomCheckPair(
        config_.features, config_.training.hidden,
        Mix64(config_.master_seed + static_cast<std::uint64_t>(pair)));
    const GradientCheckResult g =
        GradientCheck(model, batch, 64, static_cast<std::uint64_t>(pair));
    r.gradient.max_relative_error =
        std::max(r.gradient.max_relative_error, g.max_relative_error);
    r.gradient.checked += g.checked;
    r.gradient.skipped_at_kink += g.skipped_at_kink;
  }
  r.expected_bound = ExpectedBound(0.0, 1.0, 100, 0.05);
  r.success_bound = SuccessBound(0.05, 100, 0.05);
  WriteJson(run_dir_ / "checks.json", r.ToJson());
  log_->info("checks: ordering {} (exact {}), gradient error {}, bounds {} / {}",
             Fmt(r.lemma_probability), Fmt(r.lemma_exact),
             Fmt(r.gradient.max_relative_error), Fmt(r.expected_bound),
             Fmt(r.success_bound));
  return r;
}

void Pipeline::RunAll() {
  Gen();
  for (DataSet set : {DataSet::kTrain, DataSet::kCalibration, DataSet::kTest}) {
    Solve(set);
  }
  Train();
  Calibrate();
  Evaluate();
  std::fputs(Report().c_str(), stdout);
}

}  // namespace cpstop
