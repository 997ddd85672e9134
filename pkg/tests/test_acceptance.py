"""Acceptance criteria, one test each.

Every test records a ``[PASS]``/``[FAIL]`` line that is echoed in the pytest
terminal summary.  Run directly with ``python tests/test_acceptance.py``.
"""

import json
import sys
import time

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from steadylength import (
    VariationField,
    check_inequalities,
    distance,
    fd_crosscheck,
    lagrangian,
    monotonicity_scan,
    sample_pairs,
    second_variation,
    trace_check,
    verify_flow,
)
from steadylength.cli import run, validate_config
from steadylength.lfunc import first_variation, hessian_gap
from steadylength.verify import GridSpec

from conftest import ACCEPTANCE_LINES, certified_geodesics, solved_pairs

CURVED = ["shrinking_sphere", "cigar"]
ALL = ["euclidean", "shrinking_sphere", "cigar"]


def record(label, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _spline_field(curve, rng, pinned=False, knots=9):
    # knots on segment boundaries keep the field smooth inside every segment
    ks = np.linspace(curve.s, curve.t, knots)
    vals = rng.standard_normal((knots, curve.dim))
    if pinned:
        vals[0] = vals[-1] = 0.0
    sp = CubicSpline(ks, vals)
    taus = curve.taus
    return VariationField(curve, sp(taus), sp(taus, 1), sp(taus, 2))


def _checked_reports(m, tol=1e-4):
    reps = []
    for e, geo, reason in solved_pairs(m):
        if geo is None:
            r = check_inequalities(m, e, tol)  # re-solve to produce the skip reason
        else:
            r = check_inequalities(m, e, tol, geodesic=geo)
        reps.append(r)
    return reps


_REPORTS = {}


def reports(flows, name):
    if name not in _REPORTS:
        _REPORTS[name] = _checked_reports(flows[name])
    return _REPORTS[name]


# ---------------------------------------------------------------------------


def test_c1_flow_certification(flows):
    t0 = time.perf_counter()
    res = {name: verify_flow(flows[name], samples=100, seed=0) for name in ALL}
    elapsed = time.perf_counter() - t0
    ok = max(res.values()) <= 1e-8 and elapsed < 5.0
    detail = ", ".join(f"{k}={v:.1e}" for k, v in res.items())
    assert record("C1 flow certification", ok, f"max residual {detail} (<= 1e-8); {elapsed:.1f} s (< 5 s)")


def test_c2_flat_closed_form(euclid, tmp_path):
    t0 = time.perf_counter()
    pairs = sample_pairs(euclid, 20, seed=0)
    err_L = err_grad = err_time = 0.0
    for e in pairs:
        d = distance(euclid, e)
        dq = e.q - e.p
        dt = e.t - e.s
        L = dq @ dq / dt
        err_L = max(err_L, abs(d.value - L) / L)
        err_grad = max(
            err_grad,
            np.linalg.norm(d.grad_p + 2 * dq / dt) / np.linalg.norm(2 * dq / dt),
            np.linalg.norm(d.grad_q - 2 * dq / dt) / np.linalg.norm(2 * dq / dt),
        )
        err_time = max(err_time, abs(d.dL_ds - L / dt) / (L / dt), abs(d.dL_dt + L / dt) / (L / dt))
    cfg = validate_config(
        {
            "flow": {"name": "euclidean"},
            "solver": {"method": "direct"},
            "pairs": [{"p": e.p.tolist(), "s": e.s, "q": e.q.tolist(), "t": e.t} for e in pairs],
        },
        "distance",
    )
    run(cfg, "distance", tmp_path)
    direct = json.loads((tmp_path / "distance.json").read_text())["result"]["pairs"]
    err_direct = max(
        abs(r["L"] - (e.q - e.p) @ (e.q - e.p) / (e.t - e.s)) / ((e.q - e.p) @ (e.q - e.p) / (e.t - e.s))
        for r, e in zip(direct, pairs)
    )
    elapsed = time.perf_counter() - t0
    ok = err_L <= 1e-8 and err_grad <= 1e-8 and err_time <= 1e-8 and err_direct <= 1e-4 and elapsed < 10.0
    assert record(
        "C2 flat closed form",
        ok,
        f"L rel {err_L:.1e}, gradients {err_grad:.1e}, time derivatives {err_time:.1e} (<= 1e-8); "
        f"direct L rel {err_direct:.1e} (<= 1e-4); {elapsed:.1f} s (< 10 s)",
    )


def test_c3_formula_vs_fd(flows):
    # minimizers are shared with the other criteria through the session cache;
    # when this test runs first the timer includes solving them
    worst, counts = {}, {}
    t0 = time.perf_counter()
    for name in CURVED:
        m = flows[name]
        errs = []
        for e, geo, _ in solved_pairs(m):
            if geo is None or geo.multiplicity_flag or not geo.certified:
                continue
            out = fd_crosscheck(m, e, second_order=False, geodesic=geo)
            errs.append(max(v["error"] for v in out.values()))
            if len(errs) == 20:
                break
        worst[name], counts[name] = max(errs), len(errs)
    elapsed = time.perf_counter() - t0
    ok = all(c == 20 for c in counts.values()) and max(worst.values()) <= 1e-4 and elapsed < 120.0
    detail = ", ".join(f"{k}: {counts[k]} pairs max rel {worst[k]:.1e}" for k in CURVED)
    assert record("C3 formula vs FD", ok, f"{detail} (<= 1e-4); {elapsed:.0f} s (< 120 s)")


def test_c4_second_variation_consistency(flows):
    rng = np.random.default_rng(4)
    qc_err, fv_err, fields = {}, {}, {}
    for name in ALL:
        m = flows[name]
        geos = certified_geodesics(m, 5)
        qc, fv, k = 0.0, 0.0, 0
        for i in range(50):
            _, geo = geos[i % len(geos)]
            b, q = second_variation(m, geo, _spline_field(geo.curve, rng))
            qc = max(qc, abs(b - q))
            fv = max(fv, abs(first_variation(m, geo.curve, _spline_field(geo.curve, rng, pinned=True))))
            k += 1
        qc_err[name], fv_err[name], fields[name] = qc, fv, k
    ok = max(qc_err.values()) <= 1e-6 and max(fv_err.values()) <= 1e-6
    detail = ", ".join(f"{k}: |QC1-QC2| {qc_err[k]:.1e}, first variation {fv_err[k]:.1e}" for k in ALL)
    assert record("C4 second variation", ok, f"50 fields per flow; {detail} (<= 1e-6)")


def test_c4_first_variation_by_fd(flows):
    # independent check of the vanishing first variation: FD in the amplitude
    rng = np.random.default_rng(5)
    h = 1e-5
    worst = 0.0
    for name in ALL:
        m = flows[name]
        for _, geo in certified_geodesics(m, 5):
            c = geo.curve
            W = _spline_field(c, rng, pinned=True)
            worst = max(worst, abs(lagrangian(m, c.perturbed(W, h)) - lagrangian(m, c.perturbed(W, -h))) / (2 * h))
    assert record("C4 first variation (FD, step 1e-5)", worst <= 1e-6, f"max |dL/deps| {worst:.1e} (<= 1e-6)")


def test_c5_trace_identity(flows):
    worst = {}
    for name in ALL:
        m = flows[name]
        geos = certified_geodesics(m, 5)
        assert len(geos) == 5
        worst[name] = max(trace_check(m, geo, count=16)[3] for _, geo in geos)
    ok = max(worst.values()) <= 1e-5
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert record("C5 trace identity", ok, f"16 parameters x 5 geodesics; max error {detail} (<= 1e-5)")


def test_c6_hessian_estimate(flows):
    lows, gaps = {}, {}
    for name in ALL:
        m = flows[name]
        low, gap = np.inf, 0.0
        for _, geo in certified_geodesics(m, 5):
            for v in np.eye(m.dim):
                g = hessian_gap(m, geo, v)
                low = min(low, g["q_transported"] - g["hessian"])
                gap = max(gap, abs(g["q_jacobi"] - g["hessian"]))
        lows[name], gaps[name] = low, gap
    ok = (
        min(lows.values()) >= -1e-6
        and gaps["euclidean"] <= 1e-6
        and max(gaps["shrinking_sphere"], gaps["cigar"]) <= 1e-4
    )
    detail = ", ".join(f"{k}: min Q(V,V)-Hess {lows[k]:.1e}, Jacobi gap {gaps[k]:.1e}" for k in ALL)
    assert record("C6 Hessian estimate", ok, f"{detail} (>= -1e-6; gap <= 1e-6 flat, 1e-4 curved)")


def test_c7a_first_inequality(flows):
    out = {}
    for name in ALL:
        reps = reports(flows, name)
        done = [r for r in reps if not r.skipped]
        out[name] = (len(done), len(reps) - len(done), min(r.ineq1 for r in done))
    ok = all(n >= 15 and v >= -1e-4 for n, _, v in out.values())
    detail = ", ".join(f"{k}: {n} pairs ({s} skipped) min {v:.2e}" for k, (n, s, v) in out.items())
    assert record("C7a ineq1 >= -1e-4", ok, detail)


def test_c7b_second_inequality(flows):
    out = {}
    for name in ALL:
        done = [r for r in reports(flows, name) if not r.skipped]
        bad = sum(r.ineq2 > 1e-4 for r in done)
        out[name] = (len(done), bad, max(r.ineq2 for r in done))
    ok = all(b == 0 for _, b, _ in out.values())
    detail = ", ".join(f"{k}: {b}/{n} violate, max {v:.2e}" for k, (n, b, v) in out.items())
    assert record("C7b ineq2 <= 1e-4", ok, detail)


def test_c7c_flat_saturation(flows):
    done = [r for r in reports(flows, "euclidean") if not r.skipped]
    i1 = max(abs(r.ineq1) for r in done)
    i2 = max(abs(r.ineq2) for r in done)
    sat = max(r.saturation for r in done)
    ok = len(done) == 20 and max(i1, i2, sat) <= 1e-6
    assert record(
        "C7c flat saturation", ok, f"{len(done)} pairs: |ineq1| {i1:.1e}, |ineq2| {i2:.1e}, soliton residual {sat:.1e} (<= 1e-6)"
    )


MONO = {
    "shrinking_sphere": (0.1, np.arange(8) * 0.05),
    "cigar": (0.5, np.arange(8) * 0.25),
    "euclidean": (0.5, np.arange(8) * 0.25),
}


@pytest.mark.parametrize("name", ALL)
def test_c8_monotonicity(flows, name):
    A, times = MONO[name]
    t0 = time.perf_counter()
    tr = monotonicity_scan(flows[name], A, times, GridSpec(), seed=0)
    elapsed = time.perf_counter() - t0
    worst = float(np.min(tr.increments))
    ok = tr.non_decreasing and (name != "euclidean" or tr.spread <= 1e-8)
    extra = f", spread {tr.spread:.1e} (<= 1e-8)" if name == "euclidean" else ""
    assert record(
        f"C8 monotonicity {name}",
        ok,
        f"8 steps, A={A}, min increment {worst:.1e} (>= -1e-4){extra}; {elapsed:.0f} s",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
