"""Command line front end: ``geo verify | flow | cross-scan``.

A run is described by one JSON document; command line flags override its
fields. Reports are deterministic for a given configuration and seed.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a
malformed configuration or usage error, 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .errors import ConfigInvalid, NumericalError, SpecInvalid
from .hamilton import (
    Hamiltonian,
    PhasePoint,
    hamilton_vector_field,
    integrate_flow,
    kinetic_hamiltonian,
    observed_order,
)
from .submersion import HorizontalPhasePoint, horizontal_hamilton_field
from .suites import CHECKS, STRUCTURAL, corrupt_projector, run_suite
from .zoo import make_package
from .zoo.base import random_stiefel
from .zoo.kim_mccann import complement, d_family
from .zoo.stiefel import invariant_hamiltonian

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

TRAJECTORY_HELP = "trajectory CSV columns: t, q_0..q_{d-1}, p_0..p_{d-1}, H, constraint"
SCAN_HELP = "scan CSV columns: index, value, null_residual, asym_defect"
VERIFY_HELP = "verify CSV columns: name, passed, max_residual, tolerance, samples, seed"


# configuration
def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    return cfg


def _merge(args, cfg):
    """Apply command line overrides: flags > file > defaults."""
    cfg = dict(cfg)
    manifold = cfg.get("manifold", {})
    if isinstance(manifold, str):
        manifold = {"name": manifold}
    manifold = dict(manifold)
    if args.manifold:
        manifold["name"] = args.manifold
    if "name" not in manifold:
        raise ConfigInvalid("no manifold given (config field 'manifold' or --manifold)")
    cfg["manifold"] = manifold
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigInvalid("seed must be a nonnegative integer")
    output = dict(cfg.get("output", {}))
    if args.out:
        output["path"] = args.out
    if args.format:
        output["format"] = args.format
    output.setdefault("format", "json")
    if output["format"] not in ("json", "csv"):
        raise ConfigInvalid("output format must be json or csv")
    cfg["output"] = output
    return cfg


def _package(cfg):
    params = {k: v for k, v in cfg["manifold"].items() if k != "name"}
    return make_package(cfg["manifold"]["name"], **params)


def _positive(value, what):
    if not isinstance(value, (int, float)) or not value > 0:
        raise ConfigInvalid(f"{what} must be positive")
    return value


# verify
def cmd_verify(cfg):
    pkg = _package(cfg)
    checks = cfg.get("checks", STRUCTURAL)
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise ConfigInvalid(f"unknown checks {unknown}")
    samples = int(_positive(cfg.get("samples", 3), "samples"))
    fault = cfg.get("fault", {})
    if "corrupt_projector" in fault:
        eps = float(fault["corrupt_projector"])
        pkg = replace(pkg, pi=corrupt_projector(pkg.pi, eps), pi_g=None, splitting=None)
    records = run_suite(pkg, checks, samples, cfg["seed"], tolerances=cfg.get("tolerances"))
    report = {
        "command": "verify",
        "manifold": cfg["manifold"],
        "seed": cfg["seed"],
        "passed": all(r.passed for r in records),
        "checks": [r.to_dict() for r in records],
    }
    rows = [[r.name, r.passed, r.max_residual, r.tolerance, r.samples, r.seed] for r in records]
    header = ["name", "passed", "max_residual", "tolerance", "samples", "seed"]
    return report, (header, rows), EXIT_OK if report["passed"] else EXIT_FAIL


# flow
def _quadratic_hamiltonian(dim, rng):
    a = rng.standard_normal((dim, dim))
    a = a @ a.T / dim
    b = rng.standard_normal((dim, dim))
    b = 0.5 * (b + b.T) / dim
    c = rng.standard_normal((dim, dim)) / dim

    def value(q, p):
        return 0.5 * p @ a @ p + 0.5 * q @ b @ q + p @ c @ q

    def grad(q, p):
        return b @ q + c.T @ p, a @ p + c @ q

    return Hamiltonian(value=value, grad=grad)


def _initial_state(pkg, flow, cot, rng):
    init = flow.get("initial")
    if init is not None:
        try:
            q = np.asarray(init["q"], dtype=float)
            p = np.asarray(init["p"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid("initial state needs numeric 'q' and 'p'") from exc
        if q.shape != (pkg.dim,) or p.shape != (pkg.dim,):
            raise ConfigInvalid(f"initial q and p must have length {pkg.dim}")
        if np.linalg.norm(cot.T(q, p) - p) > 1e-8 * max(1.0, float(np.linalg.norm(p))):
            raise ConfigInvalid("initial p is not in the cotangent fiber at q")
        return PhasePoint(q, p)
    q = pkg.sample_point(rng)
    p = cot.T(q, pkg.space.random(rng))
    speed = float(flow.get("speed", 1.0))
    return PhasePoint(q, speed * p / max(np.linalg.norm(p), 1e-300))


def _flow_system(pkg, flow, rng):
    """Return ``(vector_field, hamiltonian, cotangent projector)``."""
    kind = flow.get("hamiltonian", "kinetic")
    dim = pkg.dim
    if kind == "kinetic":
        ham = kinetic_hamiltonian(pkg.metric)
    elif kind == "zero":
        ham = Hamiltonian(value=lambda q, p: 0.0, grad=lambda q, p: (np.zeros(dim), np.zeros(dim)))
    elif kind == "quadratic":
        ham = _quadratic_hamiltonian(dim, rng)
    elif kind == "invariant":
        if pkg.splitting is None or pkg.name not in ("stiefel", "grassmann"):
            raise ConfigInvalid("the invariant Hamiltonian needs the Grassmann package")
        n, k = pkg.params["n"], pkg.params["k"]
        a = rng.standard_normal((n, n))
        ham = invariant_hamiltonian(n, k, 0.5 * (a + a.T), rng.standard_normal((n, n)))
        split = pkg.splitting

        def field(q, p):
            return horizontal_hamilton_field(split, ham, HorizontalPhasePoint(q, p), check=False,
                                              fiber_tol=None)

        return field, ham, split.horizontal
    else:
        raise ConfigInvalid(f"unknown hamiltonian {kind!r}")
    pi = pkg.pi

    def field(q, p):
        return hamilton_vector_field(pi, ham, PhasePoint(q, p), tol=None)

    return field, ham, pi


def _casimir(pkg, states):
    body = pkg.params.get("body")
    if body is None:
        return None
    vals = []
    for s in states:
        v = pkg.metric.inv(s.q, s.p)
        vals.append(np.linalg.norm(body.I(body.angular_velocity(s.q, v))))
    return float(np.max(np.abs(np.array(vals) - vals[0])))


def cmd_flow(cfg):
    pkg = _package(cfg)
    flow = dict(cfg.get("flow", {}))
    t_end = float(_positive(flow.get("t_end", 1.0), "t_end"))
    dt = float(_positive(flow.get("dt", 1e-2), "dt"))
    rng = np.random.default_rng(cfg["seed"])
    field, ham, cot = _flow_system(pkg, flow, rng)
    state = _initial_state(pkg, flow, cot, rng)
    correction = bool(flow.get("projection_correction", False))
    if correction and pkg.constraint is None:
        raise ConfigInvalid("projection correction needs a constrained manifold")

    def run(step):
        return integrate_flow(field, state, t_end, step, projection_correction=correction,
                              constraint=pkg.constraint, cotangent=cot, hamiltonian=ham)

    report = {"command": "flow", "manifold": cfg["manifold"], "seed": cfg["seed"],
              "t_end": t_end, "dt": dt, "hamiltonian": flow.get("hamiltonian", "kinetic")}
    try:
        result = run(dt)
    except NumericalError as exc:
        report.update(passed=False, error=f"{type(exc).__name__}: {exc}")
        return report, None, EXIT_NUMERICAL
    diag = dict(result.diagnostics)
    diag["closure_error"] = float(max(np.linalg.norm(result.q[-1] - result.q[0]),
                                      np.linalg.norm(result.p[-1] - result.p[0])))
    casimir = _casimir(pkg, result.states)
    if casimir is not None:
        diag["casimir_drift"] = casimir
    if flow.get("convergence"):
        runs = [result] + [run(dt / 2 ** i) for i in (1, 2, 3)]
        drifts = [r.diagnostics.get("energy_drift", 0.0) for r in runs]
        diffs = [float(np.linalg.norm(np.concatenate([a.q[-1] - b.q[-1], a.p[-1] - b.p[-1]])))
                 for a, b in zip(runs, runs[1:])]
        conv = {"dt": [dt / 2 ** i for i in range(4)], "energy_drift": drifts,
                "successive_differences": diffs}
        if all(d > 0 for d in diffs):
            conv["observed_order"] = observed_order(diffs).tolist()
        if all(d > 0 for d in drifts):
            conv["energy_order"] = observed_order(drifts).tolist()
        diag["convergence"] = conv
    report["diagnostics"] = diag
    limits = flow.get("limits", {})
    failures = [k for k, lim in limits.items() if k in diag and not diag[k] <= lim]
    report["passed"] = not failures
    if failures:
        report["failed_limits"] = failures
    d = pkg.dim
    header = (["t"] + [f"q_{i}" for i in range(d)] + [f"p_{i}" for i in range(d)]
              + ["H", "constraint"])
    cons = result.constraint if result.constraint is not None else np.zeros(len(result.times))
    rows = [[t, *q, *p, h, c] for t, q, p, h, c in
            zip(result.times, result.q, result.p, result.energy, cons)]
    return report, (header, rows), EXIT_OK if report["passed"] else EXIT_FAIL


# cross-curvature scan
def _scan_sample(km, kind, seed, index, null_only, family_t):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    if family_t is not None:
        x = random_stiefel(rng, km.n, km.k)
        q = km.join(x, x)
        b, b_bar = d_family(km.n, km.k, family_t[index % len(family_t)])
        xp = complement(x)
        eta, eta_bar = km.from_blocks(q, b, b_bar, xp, xp)
    else:
        q = km.sample_point(rng)
        if null_only:
            eta, eta_bar = km.null_horizontal(q, rng)
        else:
            hor = km.grassmann_horizontal if kind == "km_grassmann" else km.horizontal
            eta, eta_bar = km.split(hor(q, km.space.random(rng)))
    return {"index": index, "q": q, "eta": eta, "eta_bar": eta_bar,
            "value": km.cross_curvature(q, eta, eta_bar),
            "null_residual": float(2 * km.cross_pairing(km.point(q), eta, eta_bar)),
            "asym_defect": km.asym_defect(q, eta, eta_bar)}


def _witness(km, s, seed):
    x, y = km.split(s["q"])
    return {"index": s["index"], "seed": seed, "value": s["value"], "x": x.tolist(),
            "y": y.tolist(), "eta": s["eta"].tolist(), "eta_bar": s["eta_bar"].tolist()}


def replay_witness(km, witness):
    """Re-evaluate the cross-curvature stored in a witness."""
    q = km.join(np.array(witness["x"]), np.array(witness["y"]))
    return km.cross_curvature(q, np.array(witness["eta"]), np.array(witness["eta_bar"]))


def threads():
    env = os.environ.get("GEO_THREADS")
    if env is None:
        return min(8, os.cpu_count() or 1)
    try:
        return max(1, int(env))
    except ValueError as exc:
        raise ConfigInvalid("GEO_THREADS must be an integer") from exc


def cmd_cross_scan(cfg):
    pkg = _package(cfg)
    if pkg.name not in ("km_fixed_rank", "km_grassmann"):
        raise ConfigInvalid("cross-scan needs a Kim-McCann manifold")
    km = pkg.params["km"]
    scan = dict(cfg.get("scan", {}))
    n_samples = int(_positive(scan.get("samples", 100), "samples"))
    null_only = bool(scan.get("null_only", True))
    family_t = scan.get("d_family_t")
    if family_t is not None and pkg.name != "km_grassmann":
        raise ConfigInvalid("the diagonal family is defined on the Grassmann pair")
    seed = cfg["seed"]
    tol = float(scan.get("zero_tol", 1e-8))

    def one(i):
        return _scan_sample(km, pkg.name, seed, i, null_only, family_t)

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        samples = list(pool.map(one, range(n_samples)))
    values = np.array([s["value"] for s in samples])
    lo, hi = samples[int(np.argmin(values))], samples[int(np.argmax(values))]
    stats = {"count": n_samples, "min": float(values.min()), "max": float(values.max()),
             "mean": float(values.mean()), "count_negative": int(np.sum(values < -tol)),
             "count_positive": int(np.sum(values > tol)),
             "count_zero": int(np.sum(np.abs(values) <= tol))}
    report = {"command": "cross-scan", "manifold": cfg["manifold"], "seed": seed,
              "null_only": null_only, "statistics": stats,
              "witnesses": {"min": _witness(km, lo, seed), "max": _witness(km, hi, seed)}}
    expect = scan.get("expect", {})
    failures = []
    if "min_at_least" in expect and not stats["min"] >= expect["min_at_least"]:
        failures.append("min_at_least")
    for key in ("count_negative", "count_positive"):
        if f"{key}_at_least" in expect and not stats[key] >= expect[f"{key}_at_least"]:
            failures.append(f"{key}_at_least")
    report["passed"] = not failures
    if failures:
        report["failed_expectations"] = failures
    header = ["index", "value", "null_residual", "asym_defect"]
    rows = [[s["index"], s["value"], s["null_residual"], s["asym_defect"]] for s in samples]
    return report, (header, rows), EXIT_OK if report["passed"] else EXIT_FAIL


# output
def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {k: _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render(report, table, fmt):
    if fmt == "csv":
        if table is None:
            return ""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table[0])
        writer.writerows([[_fmt(v) for v in row] for row in table[1]])
        return buf.getvalue()
    return json.dumps(_to_jsonable(report), sort_keys=True, indent=2) + "\n"


COMMANDS = {"verify": cmd_verify, "flow": cmd_flow, "cross-scan": cmd_cross_scan}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="geo", description="Verification, flow and cross-curvature runs on embedded manifolds.",
        epilog="; ".join([VERIFY_HELP, TRAJECTORY_HELP, SCAN_HELP]))
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--manifold", help="manifold name, overrides the config")
    parser.add_argument("--seed", type=int, help="random seed, overrides the config")
    parser.add_argument("--out", help="output path (stdout when omitted)")
    parser.add_argument("--format", choices=["json", "csv"], help="report format")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = _merge(args, _load_config(args.config))
        report, table, status = COMMANDS[args.command](cfg)
    except (ConfigInvalid, SpecInvalid) as exc:
        print(f"geo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"geo: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    text = render(report, table, cfg["output"]["format"])
    path = cfg["output"].get("path")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
