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

#include "cpstop/io.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cpstop/error.h"

namespace cpstop {
namespace {

[[noreturn]] void ParseFail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

void RequireObject(const Json& json, const char* what) {
  if (!json.is_object()) ParseFail(std::string(what) + " must be an object");
}

// Rejects keys outside `allowed`, so typos in config files fail loudly.
void CheckKeys(const Json& json, const std::set<std::string>& allowed,
               const char* what) {
  RequireObject(json, what);
  for (const auto& [key, value] : json.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string("unknown key '") + key + "' in " + what);
    }
  }
}

template <typename T>
T Get(const Json& json, const char* key) {
  if (!json.contains(key)) ParseFail(std::string("missing field '") + key + "'");
  try {
    return json.at(key).get<T>();
  } catch (const Json::exception& e) {
    ParseFail(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
void GetIfPresent(const Json& json, const char* key, T& out) {
  if (json.contains(key)) out = Get<T>(json, key);
}

double GetNumber(const Json& json, const char* key) {
  if (!json.contains(key)) ParseFail(std::string("missing field '") + key + "'");
  return NumberFromJson(json.at(key));
}

void GetNumberIfPresent(const Json& json, const char* key, double& out) {
  if (json.contains(key)) out = NumberFromJson(json.at(key));
}

Json NumbersToJson(std::span<const double> values) {
  Json out = Json::array();
  for (double v : values) out.push_back(NumberToJson(v));
  return out;
}

std::vector<double> NumbersFromJson(const Json& json) {
  if (!json.is_array()) ParseFail("expected an array of numbers");
  std::vector<double> out;
  out.reserve(json.size());
  for (const Json& v : json) out.push_back(NumberFromJson(v));
  return out;
}

const char* SenseName(Sense sense) {
  switch (sense) {
    case Sense::kLe:
      return "le";
    case Sense::kGe:
      return "ge";
    case Sense::kEq:
      return "eq";
  }
  return "?";
}

Sense ParseSense(const std::string& name) {
  if (name == "le") return Sense::kLe;
  if (name == "ge") return Sense::kGe;
  if (name == "eq") return Sense::kEq;
  ParseFail("unknown constraint sense '" + name + "'");
}

Json ParamsToJson(const std::map<std::string, double>& params) {
  Json out = Json::object();
  for (const auto& [k, v] : params) out[k] = NumberToJson(v);
  return out;
}

std::map<std::string, double> ParamsFromJson(const Json& json) {
  RequireObject(json, "parameter map");
  std::map<std::string, double> out;
  for (const auto& [k, v] : json.items()) out[k] = NumberFromJson(v);
  return out;
}

}  // namespace

Json NumberToJson(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

double NumberFromJson(const Json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string& s = value.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
  }
  ParseFail("expected a number, got " + value.dump());
}

Json InstanceToJson(const MilpInstance& instance) {
  Json matrix = Json::array();
  for (int r = 0; r < instance.num_cons; ++r) {
    matrix.push_back(NumbersToJson(instance.Row(r)));
  }
  Json senses = Json::array();
  for (Sense s : instance.con_sense) senses.push_back(SenseName(s));
  Json integer = Json::array();
  for (bool b : instance.is_integer) integer.push_back(b);
  return Json{
      {"id", instance.id},
      {"family", std::string(FamilyName(instance.family))},
      {"num_vars", instance.num_vars},
      {"num_cons", instance.num_cons},
      {"objective", NumbersToJson(instance.objective)},
      {"con_matrix", std::move(matrix)},
      {"con_rhs", NumbersToJson(instance.con_rhs)},
      {"con_sense", std::move(senses)},
      {"var_lower", NumbersToJson(instance.var_lower)},
      {"var_upper", NumbersToJson(instance.var_upper)},
      {"is_integer", std::move(integer)},
      {"theta_seed", instance.theta_seed},
      {"theta_params", ParamsToJson(instance.theta_params)},
  };
}

MilpInstance InstanceFromJson(const Json& json) {
  RequireObject(json, "instance");
  MilpInstance inst;
  inst.id = Get<std::string>(json, "id");
  inst.family = ParseFamily(Get<std::string>(json, "family"));
  inst.num_vars = Get<int>(json, "num_vars");
  inst.num_cons = Get<int>(json, "num_cons");
  inst.objective = NumbersFromJson(json.at("objective"));
  const Json& matrix = json.at("con_matrix");
  if (!matrix.is_array()) ParseFail("con_matrix must be an array of rows");
  for (const Json& row : matrix) {
    const std::vector<double> values = NumbersFromJson(row);
    inst.con_matrix.insert(inst.con_matrix.end(), values.begin(), values.end());
  }
  inst.con_rhs = NumbersFromJson(json.at("con_rhs"));
  for (const Json& s : json.at("con_sense")) {
    inst.con_sense.push_back(ParseSense(s.get<std::string>()));
  }
  inst.var_lower = NumbersFromJson(json.at("var_lower"));
  inst.var_upper = NumbersFromJson(json.at("var_upper"));
  for (const Json& b : json.at("is_integer")) inst.is_integer.push_back(b.get<bool>());
  inst.theta_seed = Get<std::uint64_t>(json, "theta_seed");
  inst.theta_params = ParamsFromJson(json.at("theta_params"));
  ValidateInstance(inst);
  return inst;
}

std::string TraceToJsonl(const BoundTrace& trace, const std::string& config_hash) {
  Json incumbents = Json::array();
  for (const Incumbent& inc : trace.incumbents) {
    incumbents.push_back({{"tick", inc.tick},
                          {"objective", NumberToJson(inc.objective)},
                          {"solution", NumbersToJson(inc.solution)}});
  }
  Json header{
      {"instance_id", trace.instance_id},
      {"config_hash", config_hash},
      {"status", SolveStatusName(trace.status)},
      {"z_star", trace.z_star ? NumberToJson(*trace.z_star) : Json(nullptr)},
      {"lp_failures", trace.lp_failures},
      {"num_samples", trace.samples.size()},
      {"incumbents", std::move(incumbents)},
  };
  std::string out = header.dump();
  out += '\n';
  for (const TraceSample& s : trace.samples) {
    Json line{{"tick", s.tick},
              {"upper", NumberToJson(s.upper)},
              {"lower", NumberToJson(s.lower)},
              {"nodes_explored", s.nodes_explored}};
    if (s.incumbent_id) line["incumbent_id"] = *s.incumbent_id;
    out += line.dump();
    out += '\n';
  }
  return out;
}

TraceFile TraceFromJsonl(std::string_view text) {
  TraceFile file;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) ParseFail("trace line without newline");
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    Json json;
    try {
      json = Json::parse(line);
    } catch (const Json::exception& e) {
      ParseFail("trace line " + std::to_string(line_no + 1) + ": " + e.what());
    }
    if (line_no == 0) {
      RequireObject(json, "trace header");
      file.trace.instance_id = Get<std::string>(json, "instance_id");
      file.config_hash = Get<std::string>(json, "config_hash");
      try {
        file.trace.status = ParseSolveStatus(Get<std::string>(json, "status"));
      } catch (const Error& e) {
        ParseFail(e.what());
      }
      if (!json.contains("z_star")) ParseFail("missing field 'z_star'");
      if (!json.at("z_star").is_null()) {
        file.trace.z_star = NumberFromJson(json.at("z_star"));
      }
      file.trace.lp_failures = Get<std::int64_t>(json, "lp_failures");
      expected = Get<std::size_t>(json, "num_samples");
      for (const Json& inc : json.at("incumbents")) {
        file.trace.incumbents.push_back({Get<std::int64_t>(inc, "tick"),
                                         GetNumber(inc, "objective"),
                                         NumbersFromJson(inc.at("solution"))});
      }
    } else {
      RequireObject(json, "trace sample");
      TraceSample s;
      s.tick = Get<std::int64_t>(json, "tick");
      s.upper = GetNumber(json, "upper");
      s.lower = GetNumber(json, "lower");
      s.nodes_explored = Get<std::int64_t>(json, "nodes_explored");
      if (json.contains("incumbent_id")) s.incumbent_id = Get<int>(json, "incumbent_id");
      if (!file.trace.samples.empty() && s.tick <= file.trace.samples.back().tick) {
        ParseFail("trace ticks must increase");
      }
      file.trace.samples.push_back(s);
    }
    ++line_no;
  }
  if (line_no == 0) ParseFail("empty trace file");
  if (file.trace.samples.size() != expected) {
    ParseFail("trace has " + std::to_string(file.trace.samples.size()) +
              " samples, header promises " + std::to_string(expected));
  }
  return file;
}

Json BnbConfigToJson(const BnbConfig& c) {
  return Json{
      {"epsilon", c.epsilon},
      {"tick_limit", c.tick_limit},
      {"node_selection",
       c.node_selection == NodeSelection::kBestBound ? "best_bound" : "depth_first"},
      {"branching", "most_fractional"},
      {"integrality_tol", c.integrality_tol},
      {"lp_pivot_rule", "bland"},
      {"rounding_heuristic_enabled", c.rounding_heuristic_enabled},
  };
}

BnbConfig BnbConfigFromJson(const Json& json) {
  CheckKeys(json,
            {"epsilon", "tick_limit", "node_selection", "branching",
             "integrality_tol", "lp_pivot_rule", "rounding_heuristic_enabled"},
            "solver config");
  BnbConfig c;
  GetNumberIfPresent(json, "epsilon", c.epsilon);
  GetIfPresent(json, "tick_limit", c.tick_limit);
  if (json.contains("node_selection")) {
    const std::string s = Get<std::string>(json, "node_selection");
    if (s == "best_bound") {
      c.node_selection = NodeSelection::kBestBound;
    } else if (s == "depth_first") {
      c.node_selection = NodeSelection::kDepthFirst;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown node_selection " + s);
    }
  }
  if (json.contains("branching") &&
      Get<std::string>(json, "branching") != "most_fractional") {
    throw Error(ErrorCode::kInvalidArgument, "only most_fractional branching");
  }
  if (json.contains("lp_pivot_rule") &&
      Get<std::string>(json, "lp_pivot_rule") != "bland") {
    throw Error(ErrorCode::kInvalidArgument, "only the bland pivot rule");
  }
  GetNumberIfPresent(json, "integrality_tol", c.integrality_tol);
  GetIfPresent(json, "rounding_heuristic_enabled", c.rounding_heuristic_enabled);
  c.Validate();
  return c;
}

Json TrainingConfigToJson(const TrainingConfig& c) {
  return Json{
      {"step_size", c.step_size},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"adam_eps", c.adam_eps},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"weight_floor", c.weight_floor},
      {"stride", c.stride},
      {"max_samples_per_trace", c.max_samples_per_trace},
      {"seed", c.seed},
      {"hidden", c.hidden},
      {"validation_fraction", c.validation_fraction},
  };
}

TrainingConfig TrainingConfigFromJson(const Json& json) {
  CheckKeys(json,
            {"step_size", "beta1", "beta2", "adam_eps", "batch_size", "epochs",
             "weight_floor", "stride", "max_samples_per_trace", "seed", "hidden",
             "validation_fraction"},
            "training config");
  TrainingConfig c;
  GetNumberIfPresent(json, "step_size", c.step_size);
  GetNumberIfPresent(json, "beta1", c.beta1);
  GetNumberIfPresent(json, "beta2", c.beta2);
  GetNumberIfPresent(json, "adam_eps", c.adam_eps);
  GetIfPresent(json, "batch_size", c.batch_size);
  GetIfPresent(json, "epochs", c.epochs);
  GetNumberIfPresent(json, "weight_floor", c.weight_floor);
  GetIfPresent(json, "stride", c.stride);
  GetIfPresent(json, "max_samples_per_trace", c.max_samples_per_trace);
  GetIfPresent(json, "seed", c.seed);
  GetIfPresent(json, "hidden", c.hidden);
  GetNumberIfPresent(json, "validation_fraction", c.validation_fraction);
  c.Validate();
  return c;
}

Json FeatureConfigToJson(const FeatureConfig& c) {
  return Json{{"windows", c.windows},
              {"upper_cap_span", c.upper_cap_span},
              {"theta_keys", c.theta_keys}};
}

FeatureConfig FeatureConfigFromJson(const Json& json) {
  CheckKeys(json, {"windows", "upper_cap_span", "theta_keys"}, "feature config");
  FeatureConfig c;
  GetIfPresent(json, "windows", c.windows);
  GetNumberIfPresent(json, "upper_cap_span", c.upper_cap_span);
  GetIfPresent(json, "theta_keys", c.theta_keys);
  for (int w : c.windows) {
    if (w < 1) throw Error(ErrorCode::kInvalidArgument, "windows must be >= 1");
  }
  if (!(c.upper_cap_span > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "upper_cap_span must be > 0");
  }
  return c;
}

Json ModelToJson(const GapPredictorModel& model) {
  const Mlp& net = model.net;
  Json layers = Json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in = net.layer_sizes()[l];
    const int out = net.layer_sizes()[l + 1];
    Json weights = Json::array();
    for (int r = 0; r < out; ++r) {
      weights.push_back(NumbersToJson(
          net.params().subspan(net.WeightOffset(l) + static_cast<std::size_t>(r) * in, in)));
    }
    layers.push_back(
        {{"weights", std::move(weights)},
         {"biases", NumbersToJson(net.params().subspan(net.BiasOffset(l), out))}});
  }
  return Json{
      {"layer_sizes", net.layer_sizes()},
      {"activation", "relu"},
      {"layers", std::move(layers)},
      {"features", FeatureConfigToJson(model.features)},
      {"feature_names", FeatureNames(model.features)},
      {"norm", {{"mean", NumbersToJson(model.norm.mean)},
                {"std", NumbersToJson(model.norm.stddev)}}},
      {"rng_seed", model.rng_seed},
      {"config_hash", model.config_hash},
      {"train_loss", NumbersToJson(model.train_loss)},
      {"validation_loss", NumbersToJson(model.validation_loss)},
  };
}

GapPredictorModel ModelFromJson(const Json& json) {
  RequireObject(json, "model");
  GapPredictorModel model;
  const auto sizes = Get<std::vector<int>>(json, "layer_sizes");
  if (sizes.size() < 2 || sizes.back() != 1) ParseFail("bad layer_sizes");
  model.net = Mlp(sizes);
  const Json& layers = json.at("layers");
  if (!layers.is_array() || layers.size() != sizes.size() - 1) {
    ParseFail("layer count does not match layer_sizes");
  }
  auto params = model.net.params();
  for (int l = 0; l + 1 < static_cast<int>(sizes.size()); ++l) {
    const Json& weights = layers[l].at("weights");
    if (!weights.is_array() || static_cast<int>(weights.size()) != sizes[l + 1]) {
      ParseFail("weight rows do not match layer size");
    }
    for (int r = 0; r < sizes[l + 1]; ++r) {
      const std::vector<double> row = NumbersFromJson(weights[r]);
      if (static_cast<int>(row.size()) != sizes[l]) ParseFail("weight row length");
      std::copy(row.begin(), row.end(),
                params.begin() + model.net.WeightOffset(l) +
                    static_cast<std::size_t>(r) * sizes[l]);
    }
    const std::vector<double> biases = NumbersFromJson(layers[l].at("biases"));
    if (static_cast<int>(biases.size()) != sizes[l + 1]) ParseFail("bias length");
    std::copy(biases.begin(), biases.end(), params.begin() + model.net.BiasOffset(l));
  }
  model.features = FeatureConfigFromJson(json.at("features"));
  model.norm.mean = NumbersFromJson(json.at("norm").at("mean"));
  model.norm.stddev = NumbersFromJson(json.at("norm").at("std"));
  const std::size_t dim = FeatureDimension(model.features);
  if (static_cast<int>(dim) != sizes.front() || model.norm.mean.size() != dim ||
      model.norm.stddev.size() != dim) {
    ParseFail("feature dimension does not match the network input");
  }
  model.rng_seed = Get<std::uint64_t>(json, "rng_seed");
  model.config_hash = Get<std::string>(json, "config_hash");
  model.train_loss = NumbersFromJson(json.at("train_loss"));
  model.validation_loss = NumbersFromJson(json.at("validation_loss"));
  return model;
}

Json CalibrationToJson(const CalibrationResult& c) {
  Json out{
      {"kappa", NumberToJson(c.kappa)},
      {"epsilon", c.epsilon},
      {"alpha", c.alpha},
      {"c", c.c},
      {"n", c.n},
      {"scores", NumbersToJson(c.scores)},
      {"dropped_count", c.dropped_count},
      {"config_hash", c.config_hash},
  };
  if (c.replay) {
    out["replay"] = {
        {"mean_suboptimality", NumberToJson(c.replay->mean_suboptimality)},
        {"infinite_count", c.replay->infinite_count},
        {"mean_stop_tick", c.replay->mean_stop_tick},
        {"max_suboptimality", NumberToJson(c.replay->max_suboptimality)},
        {"max_stop_tick", c.replay->max_stop_tick},
    };
  }
  return out;
}

CalibrationResult CalibrationFromJson(const Json& json) {
  RequireObject(json, "calibration");
  CalibrationResult c;
  c.kappa = GetNumber(json, "kappa");
  c.epsilon = GetNumber(json, "epsilon");
  c.alpha = GetNumber(json, "alpha");
  c.c = Get<int>(json, "c");
  c.n = Get<int>(json, "n");
  c.scores = NumbersFromJson(json.at("scores"));
  c.dropped_count = Get<int>(json, "dropped_count");
  c.config_hash = Get<std::string>(json, "config_hash");
  if (json.contains("replay")) {
    const Json& r = json.at("replay");
    ReplayStats stats;
    stats.mean_suboptimality = GetNumber(r, "mean_suboptimality");
    stats.infinite_count = Get<int>(r, "infinite_count");
    stats.mean_stop_tick = GetNumber(r, "mean_stop_tick");
    stats.max_suboptimality = GetNumber(r, "max_suboptimality");
    stats.max_stop_tick = GetNumber(r, "max_stop_tick");
    c.replay = stats;
  }
  if (c.n < 1 || c.n > c.c || static_cast<int>(c.scores.size()) != c.c) {
    ParseFail("calibration violates 1 <= n <= c = |scores|");
  }
  return c;
}

namespace {

Json OutcomeToJson(const StopOutcome& o) {
  return Json{{"tick", o.tick},
              {"nodes", o.nodes},
              {"suboptimality", NumberToJson(o.suboptimality)},
              {"within_eps", o.within_eps},
              {"speedup", o.speedup}};
}

Json SummaryToJson(const MethodSummary& s) {
  return Json{{"mean_ticks", s.mean_ticks},
              {"sd_ticks", s.sd_ticks},
              {"mean_suboptimality", s.mean_suboptimality},
              {"sd_suboptimality", s.sd_suboptimality},
              {"infinite_count", s.infinite_count},
              {"mean_nodes", s.mean_nodes},
              {"sd_nodes", s.sd_nodes},
              {"correct", s.correct},
              {"mean_speedup", s.mean_speedup},
              {"sd_speedup", s.sd_speedup},
              {"mean_tick_reduction", s.mean_tick_reduction}};
}

}  // namespace

Json ReportToJson(const EvaluationReport& r) {
  Json items = Json::array();
  for (const EvaluationItem& item : r.items) {
    Json methods = Json::object();
    for (StopMethod m : kAllMethods) {
      methods[std::string(StopMethodName(m))] = OutcomeToJson(item.at(m));
    }
    const StopOutcome& cp = item.at(StopMethod::kConformal);
    items.push_back({{"instance_id", item.instance_id},
                     {"stop_tick", cp.tick},
                     {"deterministic_tick", item.deterministic_tick},
                     {"reached_eps", item.reached_eps},
                     {"suboptimality", NumberToJson(cp.suboptimality)},
                     {"within_eps", cp.within_eps},
                     {"methods", std::move(methods)}});
  }
  Json methods = Json::object();
  for (StopMethod m : kAllMethods) {
    methods[std::string(StopMethodName(m))] = SummaryToJson(r.at(m));
  }
  auto optional_number = [](const std::optional<double>& v) {
    return v ? NumberToJson(*v) : Json(nullptr);
  };
  return Json{
      {"per_instance", std::move(items)},
      {"methods", std::move(methods)},
      {"aggregates",
       {{"mean_suboptimality", r.mean_suboptimality},
        {"infinite_count", r.infinite_count},
        {"mean_stop_tick", r.mean_stop_tick},
        {"coverage", r.coverage},
        {"mean_tick_reduction", r.mean_tick_reduction},
        {"mean_speedup", r.at(StopMethod::kConformal).mean_speedup},
        {"expected_suboptimality_bound", optional_number(r.bound_suboptimality)},
        {"expected_stop_tick_bound", optional_number(r.bound_stop_tick)},
        {"success_bound", r.bound_success}}},
      {"kappa", NumberToJson(r.kappa)},
      {"epsilon", r.epsilon},
      {"alpha", r.alpha},
      {"delta", r.delta},
      {"c", r.c},
      {"n", r.n},
      {"calibration_hash", r.calibration_hash},
      {"config_hash", r.config_hash},
  };
}

Json CoverageToJson(const CoverageResult& c) {
  return Json{{"mean_coverage", c.mean_coverage},
              {"stderr", c.stderr_coverage},
              {"mean_kappa", NumberToJson(c.mean_kappa)},
              {"n", c.n},
              {"bound_holds_fraction", c.bound_holds_fraction},
              {"trials", c.covered.size()}};
}

std::string Sha256Hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string HashJson(const Json& json) { return Sha256Hex(json.dump()); }

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  return buffer.str();
}

void WriteFile(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::kIoError, path.parent_path().string() + ": " + ec.message());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIoError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, path.string() + ": " + ec.message());
}

Json ReadJson(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

void WriteJson(const std::filesystem::path& path, const Json& json) {
  WriteFile(path, json.dump(2) + "\n");
}

}  // namespace cpstop
