import csv
import io
import json

import numpy as np
import pytest

from embgeom.cli import main, replay_witness
from embgeom.zoo import make_package


def run(tmp_path, cmd, config=None, *flags):
    args = [cmd]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    out = tmp_path / "out.txt"
    code = main(args + ["--out", str(out), *flags])
    text = out.read_text() if out.exists() else ""
    return code, text


def test_verify_sphere(tmp_path):
    code, text = run(tmp_path, "verify", {"manifold": {"name": "sphere", "n": 3}, "samples": 2})
    assert code == 0
    report = json.loads(text)
    assert report["passed"] and len(report["checks"]) > 10


def test_verify_corrupted_projector(tmp_path):
    cfg = {"manifold": "sphere", "checks": ["idempotency"], "fault": {"corrupt_projector": 1e-3}}
    code, text = run(tmp_path, "verify", cfg)
    assert code == 1
    rec = json.loads(text)["checks"][0]
    assert not rec["passed"] and rec["max_residual"] == pytest.approx(1e-3, rel=0.1)


def test_verify_empty_checks(tmp_path):
    code, text = run(tmp_path, "verify", {"manifold": "sphere", "checks": []})
    assert code == 0
    assert json.loads(text)["checks"] == []


def test_verify_csv(tmp_path):
    code, text = run(tmp_path, "verify", {"manifold": "sphere", "checks": ["idempotency", "rank"]},
                     "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert code == 0
    assert rows[0] == ["name", "passed", "max_residual", "tolerance", "samples", "seed"]
    assert [r[1] for r in rows[1:]] == ["true", "true"]


@pytest.mark.parametrize("config,flags", [
    ({"manifold": "torus"}, []),
    ({"manifold": "sphere", "checks": ["bogus"]}, []),
    ({"manifold": "sphere", "samples": 0}, []),
    ({}, []),
    (None, ["--manifold", "sphere", "--format", "xml"]),
    ({"manifold": "sphere"}, ["--seed", "-1"]),
])
def test_config_errors(tmp_path, config, flags):
    code, _ = run(tmp_path, "verify", config, *flags)
    assert code == 2


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["verify", "--config", str(path)]) == 2
    assert main(["nonsense"]) == 2


def test_flag_overrides_file(tmp_path):
    code, text = run(tmp_path, "verify", {"manifold": "stiefel", "checks": ["idempotency"],
                                          "seed": 4}, "--manifold", "sphere", "--seed", "9")
    report = json.loads(text)
    assert code == 0 and report["manifold"]["name"] == "sphere" and report["seed"] == 9


def test_flow_great_circle(tmp_path):
    cfg = {"manifold": {"name": "sphere", "n": 3},
           "flow": {"t_end": 2 * np.pi, "dt": 1e-2,
                    "initial": {"q": [1, 0, 0], "p": [0, 1, 0]},
                    "limits": {"closure_error": 1e-6}}}
    code, text = run(tmp_path, "flow", cfg)
    assert code == 0
    assert json.loads(text)["diagnostics"]["closure_error"] < 1e-6


def test_flow_zero_hamiltonian_csv(tmp_path):
    cfg = {"manifold": "sphere", "flow": {"hamiltonian": "zero", "t_end": 0.5, "dt": 0.1}}
    code, text = run(tmp_path, "flow", cfg, "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert code == 0
    assert rows[0][:2] == ["t", "q_0"] and rows[0][-2:] == ["H", "constraint"]
    assert len(rows) == 7
    assert all(r[1:7] == rows[1][1:7] for r in rows[1:])


def test_flow_convergence_and_limits(tmp_path):
    cfg = {"manifold": "sphere", "seed": 2,
           "flow": {"hamiltonian": "quadratic", "t_end": 1.0, "dt": 0.1, "convergence": True,
                    "limits": {"energy_drift": 1e-30}}}
    code, text = run(tmp_path, "flow", cfg)
    report = json.loads(text)
    assert code == 1 and report["failed_limits"] == ["energy_drift"]
    orders = report["diagnostics"]["convergence"]["observed_order"]
    assert all(abs(o - 4) < 0.5 for o in orders)


def test_flow_invariant_on_grassmann(tmp_path):
    cfg = {"manifold": {"name": "grassmann", "n": 4, "k": 2},
           "flow": {"hamiltonian": "invariant", "t_end": 0.5, "dt": 0.01}}
    code, text = run(tmp_path, "flow", cfg)
    diag = json.loads(text)["diagnostics"]
    assert code == 0
    assert diag["energy_drift"] < 1e-8
    assert diag["constraint_drift"] < 1e-8 and diag["cotangent_drift"] < 1e-8


def test_flow_bad_initial_state(tmp_path):
    cfg = {"manifold": "sphere", "flow": {"initial": {"q": [1, 0, 0], "p": [1, 0, 0]}}}
    assert run(tmp_path, "flow", cfg)[0] == 2
    cfg = {"manifold": "sphere", "flow": {"initial": {"q": [1, 0]}}}
    assert run(tmp_path, "flow", cfg)[0] == 2


def test_flow_numerical_failure(tmp_path):
    cfg = {"manifold": "sphere", "flow": {"hamiltonian": "kinetic", "t_end": 1e3, "dt": 2.0,
                                          "speed": 5.0}}
    code, text = run(tmp_path, "flow", cfg)
    report = json.loads(text)
    assert code == 3 and not report["passed"] and "StepDiverged" in report["error"]


def test_cross_scan_fixed_rank_deterministic(tmp_path, monkeypatch):
    cfg = {"manifold": {"name": "km_fixed_rank", "n": 5, "k": 2},
           "scan": {"samples": 40, "expect": {"min_at_least": -1e-8}}}
    monkeypatch.setenv("GEO_THREADS", "1")
    code, serial = run(tmp_path, "cross-scan", cfg)
    monkeypatch.setenv("GEO_THREADS", "4")
    code2, parallel = run(tmp_path, "cross-scan", cfg)
    assert code == code2 == 0
    assert serial == parallel
    report = json.loads(serial)
    km = make_package("km_fixed_rank", n=5, k=2).params["km"]
    for w in report["witnesses"].values():
        assert replay_witness(km, w) == w["value"]


def test_cross_scan_d_family_signs(tmp_path):
    cfg = {"manifold": {"name": "km_grassmann", "n": 5, "k": 2},
           "scan": {"samples": 4, "d_family_t": [0.05, 1.0],
                    "expect": {"count_negative_at_least": 1, "count_positive_at_least": 1}}}
    code, text = run(tmp_path, "cross-scan", cfg)
    stats = json.loads(text)["statistics"]
    assert code == 0 and stats["count_negative"] == 2 and stats["count_positive"] == 2


def test_cross_scan_single_row_and_errors(tmp_path, monkeypatch):
    cfg = {"manifold": "km_fixed_rank", "scan": {"samples": 1}}
    code, text = run(tmp_path, "cross-scan", cfg, "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert code == 0 and len(rows) == 2
    assert rows[0] == ["index", "value", "null_residual", "asym_defect"]
    assert run(tmp_path, "cross-scan", {"manifold": "sphere"})[0] == 2
    assert run(tmp_path, "cross-scan", {"manifold": "km_fixed_rank",
                                        "scan": {"d_family_t": [1.0]}})[0] == 2
    monkeypatch.setenv("GEO_THREADS", "many")
    assert run(tmp_path, "cross-scan", cfg)[0] == 2
