# Copyright 2026 The cpstop Authors
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Smoke tests for the Python bindings and the command-line exit codes."""

import json
import math
import os
import subprocess

import pytest

import cpstop


def small_config(output_dir="smoke"):
    return {
        "family": "knapsack",
        "params": {"n": 10},
        "sizes": {"train": 6, "calibration": 5, "test": 4},
        "master_seed": 3,
        "training": {"epochs": 2, "hidden": [8], "max_samples_per_trace": 20},
        "features": {"windows": [2, 4]},
        "alpha": 0.2,
        "output_dir": output_dir,
        "workers": 1,
        "coverage": {"trials": 5, "c": 4, "pool_size": 8},
    }


def test_squash_and_quantile():
    assert cpstop.squash(0.0, 0.0, 2.0) == 1.0
    assert cpstop.squash(5.0, 3.0, 3.0) == 0.0
    assert cpstop.quantile_index(100, 0.05) == 95
    assert cpstop.quantile_index(28, 0.05) == 27


def test_knapsack_brute_force_and_solve():
    inst = cpstop.make_knapsack([6, 10, 12], [[1, 2, 3]], [5])
    z_star, x_star = cpstop.brute_force_solve(inst)
    assert z_star == -22
    assert x_star == [0, 1, 1]
    trace = cpstop.solve(inst, epsilon=0.0)
    assert trace.status == "OptimalWithinEps"
    assert trace.z_star == -22
    assert trace.upper[-1] == trace.lower[-1] == -22


def test_instance_round_trip():
    (inst,) = cpstop.generate_family("set_cover", {}, 4, 1, "test")
    again = cpstop.MilpInstance.from_json(inst.to_json())
    assert again.to_json() == inst.to_json()


def test_calibrate_dict():
    r = cpstop.calibrate([0.1, 0.5, 0.2, 0.9], alpha=0.25)
    assert r["n"] == 3
    assert r["kappa"] == 0.2


def test_bounds():
    assert math.isclose(cpstop.expected_bound(0, 1, 100, 0.05), 0.35914, abs_tol=1e-5)
    assert math.isclose(cpstop.success_bound(0.05, 100, 0.05), 0.81419, abs_tol=1e-5)


def test_errors_carry_code():
    with pytest.raises(cpstop.CpstopError) as info:
        cpstop.quantile_index(0, 0.1)
    assert len(info.value.args) == 2
    with pytest.raises(cpstop.CpstopError):
        cpstop.generate_family("no_such_family")


def test_pipeline_end_to_end(tmp_path):
    p = cpstop.Pipeline(json.dumps(small_config()), str(tmp_path))
    p.run_all()
    report = json.loads((tmp_path / "smoke" / "report.json").read_text())
    assert len(report["per_instance"]) == 4
    for item in report["per_instance"]:
        assert item["stop_tick"] <= item["deterministic_tick"]


CLI = os.environ.get("CPSTOP_CLI")
needs_cli = pytest.mark.skipif(not CLI, reason="CPSTOP_CLI not set")


def run_cli(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True)


@needs_cli
def test_cli_missing_upstream_exits_3(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small_config()))
    r = run_cli("evaluate", "--config", str(cfg), "--output-root", str(tmp_path))
    assert r.returncode == 3, r.stderr


@needs_cli
def test_cli_invalid_config_exits_2(tmp_path):
    bad = small_config()
    bad["sizes"]["train"] = 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(bad))
    r = run_cli("gen", "--config", str(cfg), "--output-root", str(tmp_path))
    assert r.returncode == 2, r.stderr


@needs_cli
def test_cli_unknown_subcommand_exits_2():
    assert run_cli("frobnicate").returncode == 2


@needs_cli
def test_cli_run_and_report(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(small_config("cli")))
    r = run_cli("run", "--config", str(cfg), "--output-root", str(tmp_path))
    assert r.returncode == 0, r.stderr
    r = run_cli("report", "--config", str(cfg), "--output-root", str(tmp_path))
    assert r.returncode == 0, r.stderr
    assert "deterministic_eps" in r.stdout
