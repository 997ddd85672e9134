"""Numerical checks of the differential inequalities, the saturation
condition and the monotonicity of the infimum of ``L``.

Pair-level checks are independent.  The ``*_many`` helpers run them over a
list of pairs, optionally in worker processes, and keep input order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import (
    BVPFailure,
    ConjugatePointError,
    DegenerateMetricError,
    NotComputableError,
    OutOfDomainError,
)
from .flows import FlowSpec, make_flow
from .geom import MetricFamily, eval_geometry
from .lfunc import (
    EndpointPair,
    box_data,
    distance,
    hessian_mm,
    hessian_mm_fd,
    trace_check,
)
from .lgeo import solve_bvp

log = logging.getLogger(__name__)

__all__ = [
    "InequalityReport",
    "check_inequalities",
    "saturation_matrix",
    "saturation_residual",
    "GridSpec",
    "MonotonicityTrace",
    "monotonicity_scan",
    "fd_crosscheck",
    "check_many",
    "crosscheck_many",
    "summarize",
    "SKIP_LIMIT",
]

VERIFY_TOL = 1e-4
SKIP_LIMIT = 0.25  # a run fails when more pairs than this are skipped
GRID_SKIP_LIMIT = 0.10
# integrator tolerances for the value-only re-solves behind finite differences;
# errors of 1e-10 in L stay far below the 1e-4 comparison tolerance
FD_RTOL, FD_ATOL = 1e-10, 1e-12

# errors that turn a pair into a skipped pair instead of aborting the run
SKIPPABLE = (BVPFailure, ConjugatePointError, NotComputableError, OutOfDomainError, DegenerateMetricError)


def _reason(exc) -> str:
    kinds = {
        BVPFailure: "bvp-failure",
        ConjugatePointError: "conjugate",
        NotComputableError: "multiplicity",
        OutOfDomainError: "out-of-domain",
        DegenerateMetricError: "degenerate-metric",
    }
    for cls, name in kinds.items():
        if isinstance(exc, cls):
            return f"{name}: {exc}"
    return f"error: {exc}"


@dataclass
class InequalityReport:
    """Inequality residuals at one pair.

    ``ineq1 = dL/ds + dL/dt - 2 box L`` should be ``>= -tol``;
    ``ineq2 = 2 box L + |grad_p L|^2 - |grad_q L|^2 + R(q) - R(p)`` should be
    ``<= tol``.  ``saturation`` is the operator norm of the soliton residual
    matrix.  Skipped pairs carry a ``reason`` and NaN residuals.
    """

    pair: EndpointPair
    tol: float = VERIFY_TOL
    L: float = float("nan")
    ineq1: float = float("nan")
    ineq2: float = float("nan")
    saturation: float = float("nan")
    box: float = float("nan")
    dL_ds: float = float("nan")
    dL_dt: float = float("nan")
    grad_p_norm2: float = float("nan")
    grad_q_norm2: float = float("nan")
    R_p: float = float("nan")
    R_q: float = float("nan")
    el_residual: float = float("nan")
    skipped: bool = False
    reason: str = ""

    @property
    def ineq1_ok(self) -> bool:
        return self.skipped or self.ineq1 >= -self.tol

    @property
    def ineq2_ok(self) -> bool:
        return self.skipped or self.ineq2 <= self.tol

    @property
    def ok(self) -> bool:
        return self.ineq1_ok and self.ineq2_ok

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "L", "ineq1", "ineq2", "saturation", "box", "dL_ds", "dL_dt",
            "grad_p_norm2", "grad_q_norm2", "R_p", "R_q", "el_residual", "skipped", "reason", "tol",
        )}
        out["pair"] = self.pair.to_dict()
        out["ineq1_ok"] = self.ineq1_ok
        out["ineq2_ok"] = self.ineq2_ok
        return out


def saturation_matrix(m: MetricFamily, geo, frame=None) -> np.ndarray:
    """Soliton residual ``Hess L(e_i + P e_i, e_j + P e_j) + Ric_p(e_i, e_j) - Ric_q(P e_i, P e_j)``.

    Expressed in a ``g_s``-orthonormal frame at ``p``.
    """
    bd = box_data(m, geo, frame)
    return bd.diagonal_hessian + bd.ricci_p - bd.ricci_q


def saturation_residual(m: MetricFamily, e: EndpointPair, geodesic=None, **solver) -> float:
    """Operator norm of :func:`saturation_matrix` (orthonormal frame, so the spectral norm).

    Raises:
        NotComputableError: the minimizer is not unique.
        ConjugatePointError: endpoints conjugate.
    """
    geo = geodesic if geodesic is not None else solve_bvp(m, e.p, e.s, e.q, e.t, **solver)
    return float(np.linalg.norm(saturation_matrix(m, geo), 2))


def check_inequalities(
    m: MetricFamily, e: EndpointPair, tol: float = VERIFY_TOL, geodesic=None, **solver
) -> InequalityReport:
    """Evaluate both inequality residuals and the saturation residual at ``e``.

    Never raises for solver trouble: multiplicity, conjugacy, solver failure
    and domain exits produce a skipped report with the reason.  A previously
    solved ``geodesic`` for ``e`` may be passed to skip the boundary value solve.
    """
    rep = InequalityReport(pair=e, tol=tol)
    try:
        e.validate(m)
        d = distance(m, e, geodesic=geodesic, **solver)
        geo = d.geodesic
        rep.L = d.value
        rep.el_residual = geo.el_residual
        if geo.multiplicity_flag:
            raise NotComputableError("several minimizers tie")
        if not geo.certified:
            raise BVPFailure(f"geodesic residual {geo.el_residual:.2e} above tolerance")
        bd = box_data(m, geo)
    except SKIPPABLE as exc:
        rep.skipped = True
        rep.reason = _reason(exc)
        return rep
    rep.box = bd.box
    rep.dL_ds, rep.dL_dt = d.dL_ds, d.dL_dt
    rep.grad_p_norm2, rep.grad_q_norm2 = d.grad_p_norm2, d.grad_q_norm2
    rep.R_p, rep.R_q = d.R_p, d.R_q
    rep.ineq1 = d.dL_ds + d.dL_dt - 2.0 * bd.box
    rep.ineq2 = 2.0 * bd.box + d.grad_p_norm2 - d.grad_q_norm2 + d.R_q - d.R_p
    rep.saturation = float(np.linalg.norm(bd.diagonal_hessian + bd.ricci_p - bd.ricci_q, 2))
    return rep


# ---------------------------------------------------------------------------
# formula-vs-FD cross-check
# ---------------------------------------------------------------------------


def _rel(a, b, floor=1e-6):
    a, b = np.atleast_1d(a), np.atleast_1d(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))


def fd_crosscheck(
    m: MetricFamily,
    e: EndpointPair,
    h: float = 1e-4,
    tol: float = VERIFY_TOL,
    hessian_tol: float = 1e-3,
    trace_tol: float = 1e-5,
    seed: int = 0,
    second_order: bool = True,
    geodesic=None,
    **solver,
) -> dict:
    """Compare every closed first/second-order formula with finite differences.

    Gradients and time derivatives use 4th-order central differences of
    ``L`` with step ``h`` and warm-started re-solves; the Hessian uses
    :func:`hessian_mm_fd`; the trace identity uses differences along the
    minimizer.  ``second_order=False`` skips the last two.

    Returns:
        mapping name -> {"formula", "fd", "error", "tol", "pass"}; errors are
        relative except for the trace identity (absolute).

    Raises:
        NotComputableError: the minimizer is not unique.
    """
    d = distance(m, e, geodesic=geodesic, **solver)
    geo = d.geodesic
    if geo.multiplicity_flag:
        raise NotComputableError("several minimizers tie")
    v0 = geo.initial_velocity
    n = m.dim

    def L(p=e.p, s=e.s, q=e.q, t=e.t):
        # value only: no EL certificate refinement
        return solve_bvp(
            m, p, s, q, t, starts=1, guess=v0, method="shooting", tol=np.inf, rtol=FD_RTOL, atol=FD_ATOL
        ).value

    def diff(f):
        # 4th-order central difference
        return (8 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12 * h)

    I = np.eye(n)
    dLdp = np.array([diff(lambda u: L(p=e.p + u * I[i])) for i in range(n)])
    dLdq = np.array([diff(lambda u: L(q=e.q + u * I[i])) for i in range(n)])
    dLds = diff(lambda u: L(s=e.s + u))
    dLdt = diff(lambda u: L(t=e.t + u))

    gs = eval_geometry(m, e.p, e.s)
    gt = eval_geometry(m, e.q, e.t)
    cov_p = gs.g @ d.grad_p
    cov_q = gt.g @ d.grad_q
    Ts, Tt = geo.curve.velocity(e.s), geo.curve.velocity(e.t)

    def item(formula, fd, t, err=None):
        err = _rel(formula, fd) if err is None else err
        return {
            "formula": np.asarray(formula, float).tolist(),
            "fd": np.asarray(fd, float).tolist(),
            "error": err,
            "tol": t,
            "pass": bool(err <= t),
        }

    out = {
        "grad_p": item(cov_p, dLdp, tol),
        "grad_q": item(cov_q, dLdq, tol),
        "grad_p_norm": item(4.0 * Ts @ gs.g @ Ts, dLdp @ gs.g_inv @ dLdp, tol),
        "grad_q_norm": item(4.0 * Tt @ gt.g @ Tt, dLdq @ gt.g_inv @ dLdq, tol),
        "dL_ds": item(d.dL_ds, dLds, tol),
        "dL_dt": item(d.dL_dt, dLdt, tol),
    }
    if second_order:
        rng = np.random.default_rng(seed)
        v, w = rng.standard_normal(n), rng.standard_normal(n)
        hess = hessian_mm(m, e, v, w, geodesic=geo)
        hess_fd = hessian_mm_fd(m, e, v, w, geodesic=geo)
        _, _, _, trace_err = trace_check(m, geo)
        out["hessian"] = item(hess, hess_fd, hessian_tol)
        out["trace_identity"] = item(0.0, 0.0, trace_tol, err=trace_err)
    return out


# ---------------------------------------------------------------------------
# monotonicity of the infimum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Seeded endpoint grid for the infimum search.

    ``points`` base points are drawn in the flow's sample box; each is paired
    with itself and with ``offsets`` nearby targets within ``radius``.  The
    ``descend`` best grid pairs are then refined by bounded quasi-Newton
    descent in ``(p, q)`` using the gradient formulas.
    """

    points: int = 6
    offsets: int = 1
    radius: float = 0.5
    descend: int = 2
    starts: int = 2
    max_iter: int = 30

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MonotonicityTrace:
    A: float
    times: list
    inf_values: list
    grid_spec: dict
    argmins: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    tol: float = VERIFY_TOL

    @property
    def increments(self) -> np.ndarray:
        return np.diff(np.asarray(self.inf_values, float))

    @property
    def non_decreasing(self) -> bool:
        return bool(np.all(self.increments >= -self.tol))

    @property
    def spread(self) -> float:
        v = np.asarray(self.inf_values, float)
        return float(v.max() - v.min())

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "times": list(self.times),
            "inf_values": list(self.inf_values),
            "grid_spec": self.grid_spec,
            "argmins": self.argmins,
            "skipped": self.skipped,
            "non_decreasing": self.non_decreasing,
            "tol": self.tol,
        }


def _grid(m: MetricFamily, grid: GridSpec, rng):
    lo, hi = m.sample_box
    pairs = []
    for _ in range(grid.points):
        p = rng.uniform(lo, hi)
        pairs.append((p, p.copy()))
        for _ in range(grid.offsets):
            q = np.clip(p + rng.uniform(-grid.radius, grid.radius, size=m.dim), lo, hi)
            pairs.append((p, q))
    return pairs


def _descend(m, x0, s, t, box, grid: GridSpec, v0):
    n = m.dim
    state = {"v": v0}

    def fun(z):
        p, q = z[:n], z[n:]
        geo = solve_bvp(m, p, s, q, t, starts=1, guess=state["v"], method="shooting", tol=np.inf)
        state["v"] = geo.initial_velocity
        c = geo.curve
        gs = eval_geometry(m, p, s).g
        gt = eval_geometry(m, q, t).g
        grad = np.concatenate([-2.0 * gs @ c.velocity(s), 2.0 * gt @ c.velocity(t)])
        return geo.value, grad

    lo, hi = box
    bounds = list(zip(np.r_[lo, lo], np.r_[hi, hi]))
    best = [fun(x0)[0], x0]

    def tracked(z):
        val, grad = fun(z)
        if val < best[0]:
            best[0], best[1] = val, z.copy()
        return val, grad

    try:
        minimize(tracked, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                 options={"maxiter": grid.max_iter, "ftol": 1e-14, "gtol": 1e-9})
    except SKIPPABLE as exc:
        log.debug("descent stopped early: %s", exc)
    return best[0], best[1]


def monotonicity_scan(
    m: MetricFamily, A: float, times, grid: GridSpec | None = None, seed: int = 0, tol: float = VERIFY_TOL
) -> MonotonicityTrace:
    """Estimate ``inf L((., t_i), (., t_i + A))`` for each ``t_i``.

    The same seeded grid is used at every time.  Grid pairs whose solve
    fails are recorded as skipped; more than 10% skipped at any time raises.

    Raises:
        ValueError: ``A <= 0`` or times outside the flow domain.
        BVPFailure: too many grid points failed.
    """
    grid = grid or GridSpec()
    if not A > 0:
        raise ValueError("A must be positive")
    times = [float(t) for t in times]
    for t in times:
        if not (m.in_time_domain(t) and m.in_time_domain(t + A)):
            raise OutOfDomainError(f"time outside flow domain: [{t}, {t + A}] not in {m.time_domain}")
    rng = np.random.default_rng(seed)
    pairs = _grid(m, grid, rng)
    inf_values, argmins, skipped = [], [], []
    for t in times:
        results, fails = [], 0
        for p, q in pairs:
            try:
                geo = solve_bvp(m, p, t, q, t + A, starts=grid.starts, seed=seed)
                results.append((geo.value, p, q, geo.initial_velocity))
            except SKIPPABLE:
                fails += 1
        skipped.append(fails)
        if fails > GRID_SKIP_LIMIT * len(pairs):
            raise BVPFailure(f"{fails} of {len(pairs)} grid pairs failed at t={t}")
        results.sort(key=lambda r: r[0])
        best_val, best_x = results[0][0], np.concatenate([results[0][1], results[0][2]])
        for val, p, q, v0 in results[: grid.descend]:
            dval, dx = _descend(m, np.concatenate([p, q]), t, t + A, m.sample_box, grid, v0)
            if dval < best_val:
                best_val, best_x = dval, dx
        inf_values.append(float(best_val))
        argmins.append(np.asarray(best_x).tolist())
    return MonotonicityTrace(A, times, inf_values, grid.to_dict(), argmins, skipped, tol)


# ---------------------------------------------------------------------------
# many pairs
# ---------------------------------------------------------------------------


def _check_task(args):
    spec, pair, tol, solver = args
    return check_inequalities(make_flow(spec), pair, tol, **solver)


def _cross_task(args):
    spec, pair, solver = args
    try:
        return fd_crosscheck(make_flow(spec), pair, **solver)
    except SKIPPABLE as exc:
        return {"skipped": True, "reason": _reason(exc)}


def _run(fn, tasks, workers):
    if workers is None or workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))


def check_many(spec: FlowSpec, pairs, tol=VERIFY_TOL, workers: int = 1, **solver) -> list:
    """:func:`check_inequalities` over ``pairs``, results in input order."""
    return _run(_check_task, [(spec, e, tol, solver) for e in pairs], workers)


def crosscheck_many(spec: FlowSpec, pairs, workers: int = 1, **solver) -> list:
    """:func:`fd_crosscheck` over ``pairs``; skipped pairs become ``{"skipped": True, ...}``."""
    return _run(_cross_task, [(spec, e, solver) for e in pairs], workers)


def summarize(reports) -> dict:
    """Pass/fail summary of inequality reports, applying the skip limit."""
    n = len(reports)
    skipped = sum(r.skipped for r in reports)
    done = [r for r in reports if not r.skipped]
    frac = skipped / n if n else 0.0
    return {
        "pairs": n,
        "skipped": skipped,
        "skip_fraction": frac,
        "skip_limit_ok": frac <= SKIP_LIMIT,
        "ineq1_ok": all(r.ineq1_ok for r in done),
        "ineq2_ok": all(r.ineq2_ok for r in done),
        "min_ineq1": min((r.ineq1 for r in done), default=float("nan")),
        "max_ineq2": max((r.ineq2 for r in done), default=float("nan")),
        "max_saturation": max((r.saturation for r in done), default=float("nan")),
        "passed": bool(frac <= SKIP_LIMIT and all(r.ok for r in done)),
    }
