"""Config-driven experiment runner.

Usage::

    steadylength verify --config run.json --out results/ [--seed 0] [--workers 1] [--tol 1e-4]

Each run writes ``<experiment>.json`` (full structured report) and
``<experiment>.csv`` (one row per pair or per time step) to ``--out`` and
exits 0 iff every asserted invariant holds.  Invalid configs exit with
status 2 and a ``field: message`` diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .exceptions import SteadyLengthError
from .flows import FLOW_NAMES, FlowSpec, make_flow, sample_pairs
from .lfunc import EndpointPair, distance
from .lgeo import solve_bvp
from .verify import (
    SKIPPABLE,
    GridSpec,
    check_many,
    crosscheck_many,
    monotonicity_scan,
    summarize,
    _reason,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
EXPERIMENTS = ("geodesic", "distance", "verify", "monotonicity", "crosscheck")

CSV_COLUMNS = {
    "geodesic": None,  # depends on dimension, see _geodesic_columns
    "distance": [
        "pair_id", "p_coords", "s", "q_coords", "t", "L", "grad_p", "grad_q",
        "dL_ds", "dL_dt", "multiplicity", "el_residual", "skipped", "reason",
    ],
    "verify": [
        "pair_id", "p_coords", "s", "q_coords", "t", "L", "ineq1", "ineq2",
        "saturation", "skipped", "reason",
    ],
    "monotonicity": ["step", "t", "t_plus_A", "inf_L", "increment", "skipped_points"],
    "crosscheck": [
        "pair_id", "p_coords", "s", "q_coords", "t", "grad_p", "grad_q", "grad_p_norm",
        "grad_q_norm", "dL_ds", "dL_dt", "hessian", "trace_identity", "all_pass", "skipped", "reason",
    ],
}
CROSS_KEYS = ("grad_p", "grad_q", "grad_p_norm", "grad_q_norm", "dL_ds", "dL_dt", "hessian", "trace_identity")


class ConfigError(Exception):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(where, f"expected a finite number, got {value!r}")
    return float(value)


def _coords(value, dim, where):
    if not isinstance(value, list) or len(value) != dim:
        raise ConfigError(where, f"expected a list of {dim} numbers")
    return np.array([_number(v, f"{where}[{i}]") for i, v in enumerate(value)])


def _check_time(m, tau, where):
    if not m.in_time_domain(tau):
        raise ConfigError(where, f"time outside flow domain {list(m.time_domain)}")


def _check_point(m, x, where):
    if m.chart_margin is not None and m.chart_margin(x) < 0:
        raise ConfigError(where, "point outside chart domain")


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}", f"invalid JSON: {exc.msg}")
    if not isinstance(cfg, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    return cfg


def validate_config(cfg: dict, experiment: str) -> dict:
    """Check ``cfg`` and return a normalised copy.

    Raises:
        ConfigError: with the offending field path.
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    declared = cfg.get("experiment", experiment)
    if declared != experiment:
        raise ConfigError("experiment", f"config declares {declared!r} but subcommand is {experiment!r}")

    flow = cfg.get("flow")
    if not isinstance(flow, dict) or "name" not in flow:
        raise ConfigError("flow", "missing flow object with a name")
    if flow["name"] not in FLOW_NAMES:
        raise ConfigError("flow.name", f"unknown flow {flow['name']!r}; expected one of {FLOW_NAMES}")
    params = flow.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("flow.params", "expected an object")
    default_dim = 3 if flow["name"] == "product" else 2
    dim = flow.get("dim", default_dim)
    if isinstance(dim, bool) or not isinstance(dim, int):
        raise ConfigError("flow.dim", "expected an integer")
    spec = FlowSpec(flow["name"], dim, {k: _number(v, f"flow.params.{k}") for k, v in params.items()})
    try:
        m = make_flow(spec)
    except SteadyLengthError as exc:
        raise ConfigError("flow", str(exc))

    out = {"flow": {"name": spec.name, "dim": spec.dim, "params": dict(spec.params)}, "experiment": experiment}
    out["seed"] = int(cfg.get("seed", 0))
    tols = cfg.get("tolerances", {})
    if not isinstance(tols, dict):
        raise ConfigError("tolerances", "expected an object")
    out["tolerances"] = {"verify": _number(tols.get("verify", 1e-4), "tolerances.verify")}

    solver = cfg.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("solver", "expected an object")
    method = solver.get("method", "auto")
    if method not in ("auto", "shooting", "direct"):
        raise ConfigError("solver.method", "expected auto, shooting or direct")
    starts = solver.get("starts", 8)
    if isinstance(starts, bool) or not isinstance(starts, int) or starts < 1:
        raise ConfigError("solver.starts", "expected a positive integer")
    out["solver"] = {"method": method, "starts": starts}

    if experiment == "monotonicity":
        mono = cfg.get("monotonicity")
        if not isinstance(mono, dict):
            raise ConfigError("monotonicity", "missing monotonicity object")
        A = _number(mono.get("A"), "monotonicity.A")
        if A <= 0:
            raise ConfigError("monotonicity.A", "must be positive")
        times = mono.get("times")
        if not isinstance(times, list) or not times:
            raise ConfigError("monotonicity.times", "expected a non-empty list")
        times = [_number(t, f"monotonicity.times[{i}]") for i, t in enumerate(times)]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("monotonicity.times", "must be strictly increasing")
        for i, t in enumerate(times):
            _check_time(m, t, f"monotonicity.times[{i}]")
            _check_time(m, t + A, f"monotonicity.times[{i}] + A")
        grid = mono.get("grid", {})
        try:
            gs = GridSpec(**grid)
        except TypeError as exc:
            raise ConfigError("monotonicity.grid", str(exc))
        out["monotonicity"] = {"A": A, "times": times, "grid": gs.to_dict()}
        return out

    if "pairs" in cfg:
        pairs = cfg["pairs"]
        if not isinstance(pairs, list) or not pairs:
            raise ConfigError("pairs", "expected a non-empty list")
        norm = []
        for i, e in enumerate(pairs):
            where = f"pairs[{i}]"
            if not isinstance(e, dict):
                raise ConfigError(where, "expected an object with p, s, q, t")
            p = _coords(e.get("p"), spec.dim, f"{where}.p")
            q = _coords(e.get("q"), spec.dim, f"{where}.q")
            s = _number(e.get("s"), f"{where}.s")
            t = _number(e.get("t"), f"{where}.t")
            _check_time(m, s, f"{where}.s")
            _check_time(m, t, f"{where}.t")
            if not s < t:
                raise ConfigError(where, "need s < t")
            _check_point(m, p, f"{where}.p")
            _check_point(m, q, f"{where}.q")
            norm.append({"p": p.tolist(), "s": s, "q": q.tolist(), "t": t})
        out["pairs"] = norm
    elif "sample" in cfg:
        sample = cfg["sample"]
        count = sample.get("count") if isinstance(sample, dict) else None
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ConfigError("sample.count", "expected a positive integer")
        out["sample"] = {"count": count}
    else:
        raise ConfigError("pairs", "give either 'pairs' or 'sample'")
    count = len(out["pairs"]) if "pairs" in out else out["sample"]["count"]
    if experiment == "geodesic" and count != 1:
        raise ConfigError("pairs", "geodesic runs take exactly one pair")
    return out


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------


def _pairs(cfg, m):
    if "pairs" in cfg:
        return [EndpointPair(np.array(e["p"]), e["s"], np.array(e["q"]), e["t"]) for e in cfg["pairs"]]
    return sample_pairs(m, cfg["sample"]["count"], seed=cfg["seed"])


def _fmt(x) -> str:
    if isinstance(x, (list, tuple, np.ndarray)):
        return " ".join(_fmt(v) for v in np.ravel(x))
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "" if not math.isfinite(x) else repr(float(x))
    return str(x)


def _pair_cells(i, e):
    return {"pair_id": i, "p_coords": e.p, "s": e.s, "q_coords": e.q, "t": e.t}


def _run_geodesic(cfg, m, spec, workers):
    e = _pairs(cfg, m)[0]
    solver = cfg["solver"]
    try:
        geo = solve_bvp(m, e.p, e.s, e.q, e.t, seed=cfg["seed"], **solver)
    except SKIPPABLE as exc:
        return {"pair": e.to_dict(), "skipped": True, "reason": _reason(exc)}, [], False, None
    c = geo.curve
    n = m.dim
    cols = ["tau"] + [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
    rows = [dict(zip(cols, [tau, *x, *v])) for tau, x, v in zip(c.taus, c.x, c.v)]
    result = {
        "pair": e.to_dict(),
        "L": geo.value,
        "el_residual": geo.el_residual,
        "certified": geo.certified,
        "initial_velocity": geo.initial_velocity.tolist(),
        "multiplicity_flag": geo.multiplicity_flag,
        "method": geo.method,
        "solutions": [{"initial_velocity": v.tolist(), "L": val} for v, val in geo.solutions],
        "samples": {"tau": c.taus.tolist(), "x": c.x.tolist(), "v": c.v.tolist()},
    }
    return result, rows, geo.certified, cols


def _run_distance(cfg, m, spec, workers):
    results, rows = [], []
    for i, e in enumerate(_pairs(cfg, m)):
        cell = _pair_cells(i, e)
        try:
            d = distance(m, e, seed=cfg["seed"], **cfg["solver"])
        except SKIPPABLE as exc:
            results.append({"pair": e.to_dict(), "skipped": True, "reason": _reason(exc)})
            rows.append({**cell, "skipped": True, "reason": _reason(exc)})
            continue
        rec = {
            "pair": e.to_dict(), "L": d.value, "grad_p": d.grad_p.tolist(), "grad_q": d.grad_q.tolist(),
            "dL_ds": d.dL_ds, "dL_dt": d.dL_dt, "multiplicity": d.multiplicity_flag,
            "el_residual": d.geodesic.el_residual, "skipped": False, "reason": "",
        }
        results.append(rec)
        rows.append({**cell, **{k: v for k, v in rec.items() if k != "pair"}})
    ok = all(not r["skipped"] for r in results) and all(
        r["el_residual"] <= 1e-7 or cfg["solver"]["method"] == "direct" for r in results
    )
    return {"pairs": results}, rows, ok, None


def _run_verify(cfg, m, spec, workers):
    pairs = _pairs(cfg, m)
    reps = check_many(spec, pairs, cfg["tolerances"]["verify"], workers, seed=cfg["seed"], **cfg["solver"])
    rows = []
    for i, r in enumerate(reps):
        rows.append({
            **_pair_cells(i, r.pair), "L": r.L, "ineq1": r.ineq1, "ineq2": r.ineq2,
            "saturation": r.saturation, "skipped": r.skipped, "reason": r.reason,
        })
    summary = summarize(reps)
    return {"pairs": [r.to_dict() for r in reps], "summary": summary}, rows, summary["passed"], None


def _run_crosscheck(cfg, m, spec, workers):
    pairs = _pairs(cfg, m)
    out = crosscheck_many(spec, pairs, workers, seed=cfg["seed"], **cfg["solver"])
    rows, records = [], []
    for i, (e, res) in enumerate(zip(pairs, out)):
        cell = _pair_cells(i, e)
        if res.get("skipped"):
            rows.append({**cell, "skipped": True, "reason": res["reason"]})
            records.append({"pair": e.to_dict(), **res})
            continue
        all_pass = all(res[k]["pass"] for k in CROSS_KEYS)
        rows.append({**cell, **{k: res[k]["error"] for k in CROSS_KEYS}, "all_pass": all_pass,
                     "skipped": False, "reason": ""})
        records.append({"pair": e.to_dict(), "checks": res, "all_pass": all_pass, "skipped": False})
    skipped = sum(r["skipped"] for r in records)
    ok = skipped <= 0.25 * len(records) and all(r["all_pass"] for r in records if not r["skipped"])
    return {"pairs": records, "summary": {"pairs": len(records), "skipped": skipped, "passed": ok}}, rows, ok, None


def _run_monotonicity(cfg, m, spec, workers):
    mono = cfg["monotonicity"]
    trace = monotonicity_scan(
        m, mono["A"], mono["times"], GridSpec(**mono["grid"]), seed=cfg["seed"], tol=cfg["tolerances"]["verify"]
    )
    inc = [float("nan")] + trace.increments.tolist()
    rows = [
        {"step": i, "t": t, "t_plus_A": t + trace.A, "inf_L": v, "increment": d, "skipped_points": k}
        for i, (t, v, d, k) in enumerate(zip(trace.times, trace.inf_values, inc, trace.skipped))
    ]
    return trace.to_dict(), rows, trace.non_decreasing, None


RUNNERS = {
    "geodesic": _run_geodesic,
    "distance": _run_distance,
    "verify": _run_verify,
    "monotonicity": _run_monotonicity,
    "crosscheck": _run_crosscheck,
}


def _clean(obj):
    """JSON-safe copy: numpy to python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def run(cfg: dict, experiment: str, out_dir, workers: int = 1) -> int:
    """Run a validated config; write the JSON report and CSV table; return the exit code."""
    spec = FlowSpec(cfg["flow"]["name"], cfg["flow"]["dim"], cfg["flow"]["params"])
    m = make_flow(spec)
    result, rows, ok, cols = RUNNERS[experiment](cfg, m, spec, workers)
    cols = cols or CSV_COLUMNS[experiment]
    report = {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "config": cfg,
        "csv_columns": cols,
        "passed": bool(ok),
        "result": result,
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{experiment}.json", "w", encoding="utf-8") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    with open(out / f"{experiment}.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(row.get(c, "")) for c in cols])
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steadylength", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes for pair-level checks")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tol", type=float, default=None, help="override the verification tolerance")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        raw = load_config(args.config)
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.tol is not None:
            raw.setdefault("tolerances", {})["verify"] = args.tol
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        cfg = validate_config(raw, args.experiment)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    code = run(cfg, args.experiment, args.out, args.workers)
    if code:
        print(f"{args.experiment}: invariants failed, see {Path(args.out) / (args.experiment + '.json')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
