"""The length functional, its geodesics, the transport map and Jacobi fields.

For a curve ``gamma`` on ``[s, t]`` with velocity ``T`` the functional is::

    Lfun(gamma) = int_s^t  R(gamma(tau), tau) + |T|^2_{g(tau)}  dtau

and its critical curves satisfy, in chart components,

    gamma'' = -Gamma(T, T) + 2 Ric^#(T) + 1/2 grad R.

Covariant derivatives along a curve use the connection of ``g(tau)`` at the
current time.  ``D`` below denotes ``DV = V' + Gamma(T, V)``.  The second
covariant derivative appearing in the Jacobi equation is taken with the
connection *frozen* in time, i.e. the explicit ``d Gamma / d tau`` term is
not differentiated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import jax
import jax.numpy as jnp
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize

from .curves import DEFAULT_SEGMENTS, Curve, VariationField
from .exceptions import BVPFailure, ConjugatePointError, DegenerateMetricError, OutOfDomainError
from .geom import MetricFamily, batched

log = logging.getLogger(__name__)

__all__ = [
    "LGeodesic",
    "TransportMap",
    "lagrangian",
    "el_residual",
    "integrate_geodesic",
    "solve_bvp",
    "transport",
    "transported_field",
    "jacobi_solve",
    "jacobi_fundamental",
    "GEODESIC_TOL",
]

GEODESIC_TOL = 1e-7
IVP_RTOL = 1e-12
IVP_ATOL = 1e-14
NEWTON_FTOL = 1e-11
CONJUGATE_RCOND = 1e-9
MAX_SEGMENTS = 256  # finest grid tried when certifying a geodesic


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


def _accel_fn(m):
    curv = m.curvature

    def accel(x, v, tau):
        g_inv = jnp.linalg.inv(m.metric(x, tau))
        G = curv.christoffel(x, tau)
        Ric = curv.ricci(x, tau)
        dR = jax.grad(curv.scalar)(x, tau)
        return -jnp.einsum("kij,i,j->k", G, v, v) + 2.0 * g_inv @ (Ric @ v) + 0.5 * g_inv @ dR

    return accel


def _geodesic_rhs(m):
    n = m.dim
    accel = _accel_fn(m)

    def rhs(tau, y):
        x, v = y[:n], y[n:]
        return jnp.concatenate([v, accel(x, v, tau)])

    return rhs


def _sensitivity_rhs(m):
    n = m.dim
    base = _geodesic_rhs(m)

    def rhs(tau, y):
        b = y[: 2 * n]
        Phi = y[2 * n :].reshape(2 * n, n)
        A = jax.jacfwd(lambda z: base(tau, z))(b)
        return jnp.concatenate([base(tau, b), (A @ Phi).ravel()])

    return rhs


def _transport_rhs(m):
    n = m.dim
    curv = m.curvature

    def rhs(tau, y):
        x, v = y[:n], y[n : 2 * n]
        V = y[2 * n :].reshape(n, -1)
        g_inv = jnp.linalg.inv(m.metric(x, tau))
        G = curv.christoffel(x, tau)
        dV = -jnp.einsum("kij,i,jc->kc", G, v, V) + g_inv @ curv.ricci(x, tau) @ V
        return jnp.concatenate([y[n : 2 * n], _accel_fn(m)(x, v, tau), dV.ravel()])

    return rhs


def _jacobi_rhs(m):
    n = m.dim
    curv = m.curvature
    accel = _accel_fn(m)

    def rhs(tau, y):
        x, v = y[:n], y[n : 2 * n]
        rest = y[2 * n :].reshape(2, n, -1)
        J, Jd = rest[0], rest[1]
        a = accel(x, v, tau)
        g_inv = jnp.linalg.inv(m.metric(x, tau))
        G = curv.christoffel(x, tau)
        dG = curv.christoffel_dx(x, tau)
        Rup = curv.riemann_up(x, tau)
        Ric = curv.ricci(x, tau)
        cov = curv.cov_ricci(x, tau)
        dR = jax.grad(curv.scalar)(x, tau)
        ddR = jax.hessian(curv.scalar)(x, tau)
        hessR = ddR - jnp.einsum("kij,k->ij", G, dR)

        GvJ = jnp.einsum("kij,i,jc->kc", G, v, J)
        DJ = Jd + GvJ
        frozen = (
            -jnp.einsum("lijk,ic,j,k->lc", Rup, J, v, v)
            + 2.0 * g_inv @ jnp.einsum("abl,ac,b->lc", cov, J, v)
            + 2.0 * g_inv @ Ric @ DJ
            + 0.5 * g_inv @ hessR @ J
        )
        corr = (
            jnp.einsum("kijm,m,i,jc->kc", dG, v, v, J)
            + jnp.einsum("kij,i,jc->kc", G, a, J)
            + 2.0 * jnp.einsum("kij,i,jc->kc", G, v, Jd)
            + jnp.einsum("kij,i,jc->kc", G, v, GvJ)
        )
        return jnp.concatenate([v, a, Jd.ravel(), (frozen - corr).ravel()])

    return rhs


def _jit_rhs(builder):
    return lambda m: jax.jit(builder(m))


def _jit_nodes(builder):
    """Vectorised (f, df/dtau) of an ODE right-hand side over sampled states."""

    def make(m):
        rhs = builder(m)

        def both(tau, y):
            f = rhs(tau, y)
            _, fdot = jax.jvp(rhs, (tau, y), (jnp.ones_like(tau), f))
            return f, fdot

        return jax.jit(jax.vmap(both))

    return make


def _density_kernel(m):
    curv = m.curvature

    def density(x, v, tau):
        return curv.scalar(x, tau) + v @ m.metric(x, tau) @ v

    return jax.jit(jax.vmap(density))


def _el_kernel(m):
    accel = _accel_fn(m)

    def defect(x, v, a, tau):
        d = a - accel(x, v, tau)
        return jnp.sqrt(jnp.abs(d @ m.metric(x, tau) @ d))

    return jax.jit(jax.vmap(defect))


def _action_kernel(m):
    curv = m.curvature
    n = m.dim

    def action(inner, p, q, s, t):
        X = jnp.concatenate([p[None], inner.reshape(-1, n), q[None]])
        N = X.shape[0] - 1
        h = (t - s) / N
        mids = 0.5 * (X[1:] + X[:-1])
        tm = s + h * (jnp.arange(N) + 0.5)
        d = (X[1:] - X[:-1]) / h
        R = jax.vmap(curv.scalar)(mids, tm)
        G = jax.vmap(m.metric)(mids, tm)
        return h * jnp.sum(R + jnp.einsum("mi,mij,mj->m", d, G, d))

    return jax.jit(jax.value_and_grad(action))


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _check_interval(m: MetricFamily, s, t):
    if not s < t:
        raise ValueError(f"need s < t, got s={s}, t={t}")
    for tau in (s, t):
        if not m.in_time_domain(tau):
            raise OutOfDomainError(f"time {tau} outside flow domain {m.time_domain}")


def _integrate(m, key, builder, y0, s, t, t_eval, rtol, atol, stepwise=False):
    f = m.jitted(key, _jit_rhs(builder))
    fun = lambda tau, y: np.asarray(f(tau, y))
    if stepwise:
        # restart at every node instead of reading the dense output, which is
        # less accurate than the steps themselves
        Y = [np.asarray(y0, float)]
        for a, b in zip(t_eval[:-1], t_eval[1:]):
            Y.append(_integrate(m, key, builder, Y[-1], a, b, [b], rtol, atol)[-1])
        return np.array(Y)
    events = None
    if m.chart_margin is not None:
        n = m.dim

        def leave(tau, y):
            return m.chart_margin(y[:n])

        leave.terminal = True
        leave.direction = -1
        events = [leave]
    with np.errstate(all="ignore"):
        sol = solve_ivp(
            fun, (s, t), np.asarray(y0, float), method="DOP853",
            t_eval=t_eval, rtol=rtol, atol=atol, events=events,
        )
    if sol.status == 1:
        exit_time = float(sol.t_events[0][0])
        raise OutOfDomainError(f"curve left the chart at tau={exit_time:.6g}", exit_time=exit_time)
    if not sol.success or not np.all(np.isfinite(sol.y)):
        raise OutOfDomainError(f"integration failed: {sol.message}", exit_time=float(sol.t[-1]))
    return sol.y.T


def _node_derivatives(m, key, builder, taus, Y):
    fn = m.jitted(key + "_nodes", _jit_nodes(builder))
    return batched(fn, taus, Y)


def integrate_geodesic(
    m: MetricFamily, p, s, v0, t, segments=DEFAULT_SEGMENTS, rtol=IVP_RTOL, atol=IVP_ATOL, stepwise=False
) -> Curve:
    """Integrate the geodesic initial value problem from ``(p, s)`` with velocity ``v0``.

    Uses an adaptive 8th-order Runge-Kutta method (DOP853) and samples the
    solution at ``segments + 1`` uniform times.

    Raises:
        OutOfDomainError: if the curve leaves the chart; ``exit_time`` is set.
    """
    _check_interval(m, s, t)
    m.check(p, s)
    taus = np.linspace(s, t, segments + 1)
    y0 = np.concatenate([np.asarray(p, float), np.asarray(v0, float)])
    Y = _integrate(m, "geodesic_rhs", _geodesic_rhs, y0, s, t, taus, rtol, atol, stepwise)
    f, _ = _node_derivatives(m, "geodesic_rhs", _geodesic_rhs, taus, Y)
    n = m.dim
    return Curve(s, t, Y[:, :n], Y[:, n:], f[:, n:])


def _shoot(m, p, s, v0, t, q, rtol, atol):
    n = m.dim
    Phi0 = np.vstack([np.zeros((n, n)), np.eye(n)])
    y0 = np.concatenate([p, v0, Phi0.ravel()])
    Y = _integrate(m, "sensitivity_rhs", _sensitivity_rhs, y0, s, t, [t], rtol, atol)[-1]
    F = m.wrap(Y[:n] - q)
    dxdv = Y[2 * n :].reshape(2 * n, n)[:n]
    return F, dxdv


# ---------------------------------------------------------------------------
# functional and residuals
# ---------------------------------------------------------------------------


def _check_curve_domain(m, c: Curve, taus, xs):
    if m.chart_margin is not None:
        for tau, x in zip(taus, xs):
            if m.chart_margin(x) < 0:
                raise OutOfDomainError(f"curve outside chart at tau={tau:.6g}", exit_time=float(tau))
    if not (m.in_time_domain(c.s) and m.in_time_domain(c.t)):
        raise OutOfDomainError(f"curve times [{c.s}, {c.t}] outside flow domain {m.time_domain}")


def lagrangian(m: MetricFamily, c: Curve, order: int = 8) -> float:
    """``int_s^t R + |T|^2 dtau`` by composite Gauss-Legendre quadrature."""
    taus, w = c.quadrature(order)
    xs, vs = c.position(taus), c.velocity(taus)
    _check_curve_domain(m, c, taus, xs)
    dens = batched(m.jitted("density", _density_kernel), xs, vs, taus)
    return float(np.dot(w, dens))


def el_residuals(m: MetricFamily, c: Curve, order: int = 8):
    """Pointwise ``|nabla_T T - 2 Ric(T) - grad R / 2|_g`` at the quadrature abscissae."""
    taus, _ = c.quadrature(order)
    xs = c.position(taus)
    _check_curve_domain(m, c, taus, xs)
    out = batched(m.jitted("el", _el_kernel), xs, c.velocity(taus), c.acceleration(taus), taus)
    return taus, out


def el_residual(m: MetricFamily, c: Curve, order: int = 8) -> float:
    """Max g-norm of the geodesic-equation defect along ``c``."""
    return float(np.max(el_residuals(m, c, order)[1]))


# ---------------------------------------------------------------------------
# boundary value problem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LGeodesic:
    """A certified critical curve between ``(p, s)`` and ``(q, t)``.

    ``solutions`` lists ``(initial_velocity, value)`` for every distinct
    converged start; ``multiplicity_flag`` marks pairs where a second,
    distinct curve ties with the minimum.
    """

    curve: Curve
    el_residual: float
    initial_velocity: np.ndarray
    multiplicity_flag: bool
    value: float
    method: str = "shooting"
    solutions: tuple = ()
    tol: float = GEODESIC_TOL
    rtol: float = IVP_RTOL
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def certified(self) -> bool:
        return self.el_residual <= self.tol

    @property
    def p(self):
        return self.curve.p

    @property
    def q(self):
        return self.curve.q

    @property
    def s(self):
        return self.curve.s

    @property
    def t(self):
        return self.curve.t


def _newton(m, p, s, q, t, v, rtol, atol, max_iter=40):
    """Damped Newton on the shooting residual; returns (v, |F|) or raises."""
    # far from the root a looser integrator is enough to pick the step
    tols = [(max(rtol, 1e-8), max(atol, 1e-10)), (rtol, atol)]
    rt, at = tols.pop(0)
    F, J = _shoot(m, p, s, v, t, q, rt, at)
    nrm = np.linalg.norm(F)
    for _ in range(max_iter):
        if tols and nrm <= 1e-5:
            rt, at = tols.pop(0)
            F, J = _shoot(m, p, s, v, t, q, rt, at)
            nrm = np.linalg.norm(F)
        if nrm <= NEWTON_FTOL and not tols:
            return v, nrm
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        lam = 1.0
        while lam >= 2.0**-12:
            try:
                F2, J2 = _shoot(m, p, s, v + lam * step, t, q, rt, at)
            except OutOfDomainError:
                lam *= 0.5
                continue
            n2 = np.linalg.norm(F2)
            if n2 < nrm:
                v, F, J, nrm = v + lam * step, F2, J2, n2
                break
            lam *= 0.5
        else:
            break
    if tols:
        rt, at = tols.pop(0)
        F, _ = _shoot(m, p, s, v, t, q, rt, at)
        nrm = np.linalg.norm(F)
    if nrm <= 1e2 * NEWTON_FTOL:
        return v, nrm
    raise BVPFailure(f"Newton stalled at |F|={nrm:.3e}")


def _finish(m, p, s, t, v0, segments, tol, rtol, atol, max_segments=MAX_SEGMENTS, first=None):
    """Sample the converged curve, refining until the EL certificate holds."""
    # sampling noise in the node jets is amplified by 1/h^2 in the interpolated
    # acceleration, so tighten the integrator before refining the grid
    curve = first if first is not None else integrate_geodesic(m, p, s, v0, t, segments, rtol, atol)
    if tol == np.inf:
        return curve, float("nan")  # value-only solve, no certificate requested
    res = el_residual(m, curve)
    plan = [(segments, False), (segments, True)]
    k = 2 * segments
    while k <= max_segments:
        plan.append((k, True))
        k *= 2
    for seg, stepwise in plan:
        if res <= tol:
            break
        curve = integrate_geodesic(m, p, s, v0, t, seg, min(rtol, 1e-13), min(atol, 1e-15), stepwise)
        res = el_residual(m, curve)
    return curve, res


def _direct(m, p, s, q, t, segments, x0=None):
    """Minimise the midpoint-rule discretisation of the functional over nodes."""
    n = m.dim
    N = segments
    if x0 is None:
        lam = np.linspace(0.0, 1.0, N + 1)[1:-1, None]
        x0 = p[None] + lam * (q - p)[None]
    fn = m.jitted("action", _action_kernel)
    P, Q = jnp.asarray(p), jnp.asarray(q)

    def fun(z):
        val, grad = fn(jnp.asarray(z), P, Q, float(s), float(t))
        return float(val), np.asarray(grad)

    res = minimize(
        fun, np.asarray(x0, float).ravel(), jac=True, method="L-BFGS-B",
        options={"maxiter": 20000, "maxcor": 30, "ftol": 1e-16, "gtol": 1e-11},
    )
    X = np.vstack([p, res.x.reshape(-1, n), q])
    return Curve(s, t, X), res


def solve_bvp(
    m: MetricFamily,
    p,
    s,
    q,
    t,
    *,
    method: str = "auto",
    starts: int = 8,
    seed: int = 0,
    guess=None,
    segments: int = DEFAULT_SEGMENTS,
    tol: float = GEODESIC_TOL,
    rtol: float = IVP_RTOL,
    atol: float = IVP_ATOL,
) -> LGeodesic:
    """Find the least-action geodesic from ``(p, s)`` to ``(q, t)``.

    ``method="auto"`` shoots from ``starts`` seeded initial velocities (the
    chart straight line plus Gaussian perturbations at three amplitudes) and
    falls back to direct minimisation of the discretised functional, polished
    by shooting, when no start converges.  ``method="shooting"`` disables the
    fallback; ``method="direct"`` returns the unpolished discrete minimiser.
    ``guess`` replaces the straight-line seed.

    Raises:
        BVPFailure: no start converged.
    """
    if method not in ("auto", "shooting", "direct"):
        raise ValueError(f"unknown method {method!r}")
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    _check_interval(m, s, t)
    m.check(p, s)
    m.check(q, t)
    q_img = p + m.wrap(q - p)  # nearest periodic image of q

    if method == "direct":
        curve, res = _direct(m, p, s, q_img, t, segments)
        _check_curve_domain(m, curve, curve.taus, curve.x)
        return LGeodesic(
            curve, el_residual(m, curve), curve.velocity(s), False, lagrangian(m, curve),
            method="direct", tol=tol, rtol=rtol,
        )

    v_line = (q_img - p) / (t - s)
    rng = np.random.default_rng(seed)
    scale = max(np.linalg.norm(v_line), 1.0)
    seeds = [v_line if guess is None else np.asarray(guess, float)]
    amps = (0.2, 0.5, 1.0)
    for k in range(starts - 1):
        seeds.append(seeds[0] + amps[k % 3] * scale * rng.standard_normal(m.dim))

    found, diagnostics = [], []
    for k, v in enumerate(seeds):
        try:
            v_conv, nrm = _newton(m, p, s, q, t, v, rtol, atol)
            if any(np.linalg.norm(v_conv - f[0]) <= 1e-8 * max(1.0, np.linalg.norm(v_conv)) for f in found):
                diagnostics.append({"start": k, "status": "duplicate", "residual": nrm})
                continue
            # rank on the coarse curve; only the winner is refined below
            curve = integrate_geodesic(m, p, s, v_conv, t, segments, rtol, atol)
            found.append((v_conv, curve, None, lagrangian(m, curve)))
            diagnostics.append({"start": k, "status": "converged", "residual": nrm})
        except (BVPFailure, OutOfDomainError, DegenerateMetricError, np.linalg.LinAlgError) as exc:
            diagnostics.append({"start": k, "status": "failed", "error": str(exc)})

    used = "shooting"
    if not found and method == "auto":
        log.info("shooting failed from all %d starts; falling back to direct minimisation", len(seeds))
        try:
            dcurve, _ = _direct(m, p, s, q_img, t, segments)
            v_guess = dcurve.velocity(s)
            v_conv, nrm = _newton(m, p, s, q, t, v_guess, rtol, atol)
            curve = integrate_geodesic(m, p, s, v_conv, t, segments, rtol, atol)
            found.append((v_conv, curve, None, lagrangian(m, curve)))
            diagnostics.append({"start": "direct", "status": "converged", "residual": nrm})
            used = "direct+shooting"
        except (BVPFailure, OutOfDomainError, DegenerateMetricError, np.linalg.LinAlgError) as exc:
            diagnostics.append({"start": "direct", "status": "failed", "error": str(exc)})
    if not found:
        raise BVPFailure(f"no start converged for ({p}, {s}) -> ({q}, {t})", diagnostics)

    found.sort(key=lambda item: item[3])
    distinct = []
    for item in found:
        if all(np.linalg.norm(item[0] - d[0]) > 1e-3 or abs(item[3] - d[3]) > 1e-6 for d in distinct):
            distinct.append(item)
    best = distinct[0]
    tie = 1e-6 * max(1.0, abs(best[3]))
    flag = any(
        abs(d[3] - best[3]) <= tie and np.linalg.norm(d[0] - best[0]) > 1e-3 for d in distinct[1:]
    )
    curve, res = _finish(m, p, s, t, best[0], segments, tol, rtol, atol, first=best[1])
    return LGeodesic(
        curve=curve,
        el_residual=res,
        initial_velocity=best[0],
        multiplicity_flag=bool(flag),
        value=best[3] if curve is best[1] else lagrangian(m, curve),
        method=used,
        solutions=tuple((d[0], d[3]) for d in distinct),
        tol=tol,
        rtol=rtol,
    )


# ---------------------------------------------------------------------------
# transport map and Jacobi fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransportMap:
    """Linear map ``T_pM -> T_qM`` solving ``nabla_T V = Ric(V)^#`` along a geodesic."""

    source: tuple
    target: tuple
    matrix: np.ndarray

    def __call__(self, v):
        return self.matrix @ np.asarray(v, float)

    def isometry_defect(self, m: MetricFamily) -> float:
        """``max |M^T G_t M - G_s|``; zero for an exact transport."""
        Gs = m.metric_matrix(*self.source)
        Gt = m.metric_matrix(*self.target)
        return float(np.max(np.abs(self.matrix.T @ Gt @ self.matrix - Gs)))


def _transport_nodes(m, geo: LGeodesic):
    key = ("transport", geo.curve.segments)
    if key not in geo._cache:
        n = m.dim
        c = geo.curve
        y0 = np.concatenate([c.p, geo.initial_velocity, np.eye(n).ravel()])
        Y = _integrate(m, "transport_rhs", _transport_rhs, y0, c.s, c.t, c.taus, min(geo.rtol, 1e-13), 1e-15, stepwise=True)
        f, fdot = _node_derivatives(m, "transport_rhs", _transport_rhs, c.taus, Y)
        shape = (len(c.taus), n, n)
        geo._cache[key] = (
            Y[:, 2 * n :].reshape(shape),
            f[:, 2 * n :].reshape(shape),
            fdot[:, 2 * n :].reshape(shape),
        )
    return geo._cache[key]


def transport(m: MetricFamily, geo: LGeodesic) -> TransportMap:
    """Solve ``nabla_T V = Ric(V)^#`` for every chart basis vector at ``p``."""
    V, _, _ = _transport_nodes(m, geo)
    return TransportMap((geo.p.copy(), geo.s), (geo.q.copy(), geo.t), V[-1].copy())


def transported_field(m: MetricFamily, geo: LGeodesic, v) -> VariationField:
    """The field with ``V(s) = v`` solving ``nabla_T V = Ric(V)^#`` along ``geo``."""
    V, dV, ddV = _transport_nodes(m, geo)
    v = np.asarray(v, float)
    return VariationField(geo.curve, V @ v, dV @ v, ddV @ v, kind="transported")


@dataclass(frozen=True)
class JacobiFundamental:
    """Node data of the ``2n`` fundamental Jacobi solutions along a geodesic.

    Columns ``0..n-1`` start with ``J(s) = e_k, J'(s) = 0``; columns
    ``n..2n-1`` with ``J(s) = 0, J'(s) = e_k``.
    """

    J: np.ndarray
    Jd: np.ndarray
    Jdd: np.ndarray

    def boundary_coefficients(self, v, w):
        """Coefficients of the Jacobi field with ``J(s) = v``, ``J(t) = w``."""
        n = self.J.shape[1]
        A, B = self.J[-1][:, :n], self.J[-1][:, n:]
        sv = np.linalg.svd(B, compute_uv=False)
        if sv[-1] <= CONJUGATE_RCOND * max(sv[0], 1e-300):
            raise ConjugatePointError(
                f"endpoints are conjugate (singular values of the end map: {sv})"
            )
        c = np.linalg.solve(B, np.asarray(w, float) - A @ np.asarray(v, float))
        return np.concatenate([np.asarray(v, float), c])

    def boundary_map(self):
        """``Z`` with coefficients ``Z @ (v, w)`` for boundary data ``(v, w)``."""
        n = self.J.shape[1]
        cols = [self.boundary_coefficients(*np.split(e, 2)) for e in np.eye(2 * n)]
        return np.stack(cols, axis=1)


def jacobi_fundamental(m: MetricFamily, geo: LGeodesic) -> JacobiFundamental:
    key = ("jacobi", geo.curve.segments)
    if key not in geo._cache:
        n = m.dim
        c = geo.curve
        J0 = np.hstack([np.eye(n), np.zeros((n, n))])
        Jd0 = np.hstack([np.zeros((n, n)), np.eye(n)])
        y0 = np.concatenate([c.p, geo.initial_velocity, J0.ravel(), Jd0.ravel()])
        Y = _integrate(m, "jacobi_rhs", _jacobi_rhs, y0, c.s, c.t, c.taus, min(geo.rtol, 1e-13), 1e-15, stepwise=True)
        f, _ = _node_derivatives(m, "jacobi_rhs", _jacobi_rhs, c.taus, Y)
        rest = Y[:, 2 * n :].reshape(len(c.taus), 2, n, 2 * n)
        frest = f[:, 2 * n :].reshape(len(c.taus), 2, n, 2 * n)
        geo._cache[key] = JacobiFundamental(rest[:, 0], rest[:, 1], frest[:, 1])
    return geo._cache[key]


def jacobi_solve(m: MetricFamily, geo: LGeodesic, v, w) -> VariationField:
    """Jacobi field along ``geo`` with ``J(s) = v`` and ``J(t) = w``.

    Solved by linear shooting on the initial derivative.

    Raises:
        ConjugatePointError: the end map of the fundamental solutions is singular.
    """
    fund = jacobi_fundamental(m, geo)
    z = fund.boundary_coefficients(v, w)
    return VariationField(geo.curve, fund.J @ z, fund.Jd @ z, fund.Jdd @ z, kind="jacobi")
