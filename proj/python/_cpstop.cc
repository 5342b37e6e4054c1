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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cpstop/bnb.h"
#include "cpstop/conformal.h"
#include "cpstop/error.h"
#include "cpstop/evaluation.h"
#include "cpstop/gap_predictor.h"
#include "cpstop/instances.h"
#include "cpstop/io.h"
#include "cpstop/pipeline.h"
#include "cpstop/trace_math.h"

namespace py = pybind11;
using namespace cpstop;

namespace {

GapSeries MakeSeries(std::vector<std::int64_t> ticks, std::vector<double> values) {
  GapSeries s;
  s.ticks = std::move(ticks);
  s.values = std::move(values);
  s.terminal_tick = s.ticks.empty() ? 0 : s.ticks.back();
  ValidateSeries(s);
  return s;
}

py::tuple SeriesTuple(const GapSeries& s) { return py::make_tuple(s.ticks, s.values); }

}  // namespace

PYBIND11_MODULE(_cpstop, m) {
  m.doc() = "Branch-and-bound traces and conformal early stopping";

  static py::exception<Error> error(m, "CpstopError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = error;
      PyErr_SetObject(err.ptr(), py::make_tuple(e.what(), ErrorCodeName(e.code())).ptr());
    }
  });

  py::class_<MilpInstance>(m, "MilpInstance")
      .def_readonly("id", &MilpInstance::id)
      .def_readonly("num_vars", &MilpInstance::num_vars)
      .def_readonly("num_cons", &MilpInstance::num_cons)
      .def_readonly("objective", &MilpInstance::objective)
      .def_readonly("theta_seed", &MilpInstance::theta_seed)
      .def_readonly("theta_params", &MilpInstance::theta_params)
      .def_property_readonly("family",
                             [](const MilpInstance& i) { return std::string(FamilyName(i.family)); })
      .def_property_readonly("num_integer_vars", &MilpInstance::NumIntegerVars)
      .def("to_json", [](const MilpInstance& i) { return InstanceToJson(i).dump(); })
      .def_static("from_json", [](const std::string& text) {
        return InstanceFromJson(Json::parse(text));
      });

  py::class_<BoundTrace>(m, "BoundTrace")
      .def_readonly("instance_id", &BoundTrace::instance_id)
      .def_readonly("z_star", &BoundTrace::z_star)
      .def_readonly("lp_failures", &BoundTrace::lp_failures)
      .def_property_readonly("status",
                             [](const BoundTrace& t) { return std::string(SolveStatusName(t.status)); })
      .def_property_readonly("ticks", [](const BoundTrace& t) {
        std::vector<std::int64_t> v;
        for (const auto& s : t.samples) v.push_back(s.tick);
        return v;
      })
      .def_property_readonly("upper", [](const BoundTrace& t) {
        std::vector<double> v;
        for (const auto& s : t.samples) v.push_back(s.upper);
        return v;
      })
      .def_property_readonly("lower", [](const BoundTrace& t) {
        std::vector<double> v;
        for (const auto& s : t.samples) v.push_back(s.lower);
        return v;
      })
      .def_property_readonly("nodes_explored", [](const BoundTrace& t) {
        std::vector<std::int64_t> v;
        for (const auto& s : t.samples) v.push_back(s.nodes_explored);
        return v;
      })
      .def_property_readonly("incumbent_ticks", [](const BoundTrace& t) {
        std::vector<std::int64_t> v;
        for (const auto& inc : t.incumbents) v.push_back(inc.tick);
        return v;
      })
      .def_property_readonly("terminal_tick", &BoundTrace::TerminalTick)
      .def("to_jsonl", [](const BoundTrace& t, const std::string& hash) {
        return TraceToJsonl(t, hash);
      }, py::arg("config_hash") = "")
      .def_static("from_jsonl", [](const std::string& text) {
        return TraceFromJsonl(text).trace;
      });

  m.def("default_params", [](const std::string& family) {
    return DefaultParams(ParseFamily(family));
  });
  m.def("generate_family",
        [](const std::string& family, const FamilyParams& params,
           std::uint64_t master_seed, int count, const std::string& split) {
          return GenerateFamily(ParseFamily(family), params, master_seed, count,
                                ParseSplit(split))
              .instances;
        },
        py::arg("family"), py::arg("params") = FamilyParams{},
        py::arg("master_seed") = 0, py::arg("count") = 1, py::arg("split") = "train");
  m.def("make_knapsack",
        [](const std::vector<double>& values,
           const std::vector<std::vector<double>>& weights,
           const std::vector<double>& capacities, const std::string& id) {
          return MakeKnapsack(id, values, weights, capacities);
        },
        py::arg("values"), py::arg("weights"), py::arg("capacities"),
        py::arg("id") = "knapsack");
  m.def("brute_force_solve", [](const MilpInstance& instance) {
    const BruteForceResult r = BruteForceSolve(instance);
    return py::make_tuple(r.z_star, r.x_star);
  });

  m.def("solve",
        [](const MilpInstance& instance, double epsilon, std::int64_t tick_limit,
           const std::string& node_selection) {
          BnbConfig config;
          config.epsilon = epsilon;
          config.tick_limit = tick_limit;
          if (node_selection == "depth_first") {
            config.node_selection = NodeSelection::kDepthFirst;
          } else if (node_selection != "best_bound") {
            throw Error(ErrorCode::kInvalidArgument, "unknown node_selection");
          }
          py::gil_scoped_release release;
          return Solve(instance, config).trace;
        },
        py::arg("instance"), py::arg("epsilon") = 1e-3,
        py::arg("tick_limit") = 2'000'000, py::arg("node_selection") = "best_bound");
  m.def("algorithmic_gap", &AlgorithmicGap);

  m.def("true_gap", [](const BoundTrace& t, double z) { return SeriesTuple(TrueGap(t, z)); });
  m.def("rolling_min", [](const std::vector<double>& values) {
    std::vector<std::int64_t> ticks(values.size());
    for (std::size_t i = 0; i < ticks.size(); ++i) ticks[i] = static_cast<std::int64_t>(i);
    return RollingMin(MakeSeries(ticks, values)).values;
  });
  m.def("left_inverse",
        [](std::vector<std::int64_t> ticks, std::vector<double> values, double x) {
          return LeftInverse(MakeSeries(std::move(ticks), std::move(values)), x);
        });
  m.def("deterministic_stop_time", &DeterministicStopTime);
  m.def("learned_stop_time",
        [](std::vector<std::int64_t> ticks, std::vector<double> values, double kappa,
           std::int64_t fallback) {
          return LearnedStopTime(MakeSeries(std::move(ticks), std::move(values)),
                                 kappa, fallback);
        });
  m.def("fallback_tick", &FallbackTick);

  m.def("squash", &Squash, py::arg("x"), py::arg("lower"), py::arg("upper"));
  m.def("sample_weight", &SampleWeight);
  m.def("normalized_weights",
        [](const std::vector<double>& y, double y_min) { return NormalizedWeights(y, y_min); });

  m.def("quantile_index", &QuantileIndex, py::arg("c"), py::arg("alpha"));
  m.def("conformal_score",
        [](std::vector<std::int64_t> ticks, std::vector<double> true_gap,
           std::vector<double> predictions, double epsilon) {
          const ConformalScore s = ComputeConformalScore(
              MakeSeries(ticks, std::move(true_gap)),
              MakeSeries(ticks, std::move(predictions)), epsilon);
          return py::make_tuple(s.score, s.degenerate);
        });
  m.def("calibrate",
        [](const std::vector<double>& scores, double alpha, double epsilon) {
          const CalibrationResult r =
              Calibrate(scores, static_cast<int>(scores.size()), alpha, epsilon);
          py::dict d;
          d["kappa"] = r.kappa;
          d["n"] = r.n;
          d["c"] = r.c;
          d["alpha"] = r.alpha;
          d["epsilon"] = r.epsilon;
          return d;
        },
        py::arg("scores"), py::arg("alpha"), py::arg("epsilon") = 1e-3);
  m.def("expected_bound", &ExpectedBound, py::arg("empirical_mean"),
        py::arg("max_value"), py::arg("c"), py::arg("delta"));
  m.def("success_bound", &SuccessBound, py::arg("alpha"), py::arg("c"),
        py::arg("delta"));

  m.def("suboptimality", &Suboptimality);
  m.def("baseline_stop", &BaselineStop);
  m.def("lemma_ordering_check", &LemmaOrderingCheck, py::arg("c"), py::arg("n"),
        py::arg("trials"), py::arg("seed") = 0);

  py::class_<Pipeline>(m, "Pipeline")
      .def(py::init([](const std::string& config_json, const std::filesystem::path& root) {
             return std::make_unique<Pipeline>(
                 PipelineConfigFromJson(Json::parse(config_json)), root);
           }),
           py::arg("config_json"), py::arg("output_root"))
      .def_property_readonly("run_dir", &Pipeline::run_dir)
      .def("gen", &Pipeline::Gen, py::call_guard<py::gil_scoped_release>())
      .def("solve", [](Pipeline& p, const std::string& set) {
        const DataSet d = ParseDataSet(set);
        py::gil_scoped_release release;
        p.Solve(d);
      })
      .def("train", &Pipeline::Train, py::call_guard<py::gil_scoped_release>())
      .def("calibrate", &Pipeline::Calibrate, py::call_guard<py::gil_scoped_release>())
      .def("evaluate", &Pipeline::Evaluate, py::call_guard<py::gil_scoped_release>())
      .def("report", &Pipeline::Report, py::call_guard<py::gil_scoped_release>())
      .def("coverage", [](Pipeline& p) {
        CoverageResult r;
        {
          py::gil_scoped_release release;
          r = p.Coverage();
        }
        return py::make_tuple(r.mean_coverage, r.stderr_coverage);
      })
      .def("run_all", &Pipeline::RunAll, py::call_guard<py::gil_scoped_release>());
}
