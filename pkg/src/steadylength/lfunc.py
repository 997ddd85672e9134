"""The two-point distance ``L`` and its first- and second-order data.

``L((p, s), (q, t))`` is the least value of the length functional over
curves joining the two spacetime points.  At a pair with a unique,
non-conjugate minimizer ``gamma`` (velocity ``T``) it is smooth and

    grad_p L = -2 T(s),           grad_q L = 2 T(t),
    dL/ds    = -R(p, s) + |T|^2(s),  dL/dt = R(q, t) - |T|^2(t).

Second-order data come from the quadratic form ``Q`` of the second
variation; the Hessian of ``L`` on ``M x M`` is ``Q(J, J)`` for the Jacobi
field ``J`` with the prescribed endpoint values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Curve, VariationField, _Interpolant
from .exceptions import NotComputableError, OutOfDomainError
from .geom import MetricFamily, eval_geometry, eval_geometry_batch, orthonormal_frame
from .lgeo import (
    LGeodesic,
    jacobi_fundamental,
    jacobi_solve,
    solve_bvp,
    transport,
    transported_field,
)

__all__ = [
    "EndpointPair",
    "LData",
    "distance",
    "gradients",
    "time_derivatives",
    "second_variation",
    "q_form",
    "first_variation",
    "lemma_residual",
    "jacobi_residual",
    "transport_residual",
    "h_term",
    "h_trace",
    "trace_check",
    "hessian_matrix",
    "hessian_mm",
    "hessian_mm_fd",
    "hessian_gap",
    "box_operator",
    "BoxData",
    "box_data",
]


@dataclass(frozen=True)
class EndpointPair:
    """Spacetime endpoints ``(p, s)`` and ``(q, t)`` with ``s < t``."""

    p: np.ndarray
    s: float
    q: np.ndarray
    t: float

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, float))
        q = np.atleast_1d(np.asarray(self.q, float))
        if p.shape != q.shape:
            raise ValueError(f"endpoint dimensions differ: {p.shape} vs {q.shape}")
        if not float(self.s) < float(self.t):
            raise ValueError(f"need s < t, got s={self.s}, t={self.t}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "t", float(self.t))

    def validate(self, m: MetricFamily):
        """Raise OutOfDomainError / ValueError unless both endpoints lie in ``m``'s domain."""
        m.check(self.p, self.s)
        m.check(self.q, self.t)

    def replace(self, **kw) -> "EndpointPair":
        d = dict(p=self.p, s=self.s, q=self.q, t=self.t)
        d.update(kw)
        return EndpointPair(**d)

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "s": self.s, "q": self.q.tolist(), "t": self.t}


@dataclass(frozen=True)
class LData:
    """``L`` at a pair together with its first derivatives.

    ``grad_p`` and ``grad_q`` are vectors (indices raised with ``g_s`` and
    ``g_t``).  ``grad_p_norm2`` and ``grad_q_norm2`` are their squared norms.
    """

    pair: EndpointPair
    value: float
    geodesic: LGeodesic
    grad_p: np.ndarray
    grad_q: np.ndarray
    grad_p_norm2: float
    grad_q_norm2: float
    dL_ds: float
    dL_dt: float
    R_p: float
    R_q: float

    @property
    def multiplicity_flag(self) -> bool:
        return self.geodesic.multiplicity_flag


def gradients(m: MetricFamily, geo: LGeodesic):
    """``(grad_p L, grad_q L)`` as vectors from the minimizer's end velocities."""
    c = geo.curve
    return -2.0 * c.velocity(c.s), 2.0 * c.velocity(c.t)


def time_derivatives(m: MetricFamily, geo: LGeodesic):
    """``(dL/ds, dL/dt)`` from the minimizer's end data."""
    c = geo.curve
    Ts, Tt = c.velocity(c.s), c.velocity(c.t)
    gs, gt = eval_geometry(m, c.p, c.s), eval_geometry(m, c.q, c.t)
    dL_ds = -float(gs.scalar) + float(Ts @ gs.g @ Ts)
    dL_dt = float(gt.scalar) - float(Tt @ gt.g @ Tt)
    return dL_ds, dL_dt


def distance(m: MetricFamily, e: EndpointPair, geodesic: LGeodesic | None = None, **solver) -> LData:
    """Evaluate ``L`` at ``e`` and its derivatives via the minimizing geodesic.

    Extra keyword arguments are forwarded to :func:`solve_bvp`.

    Raises:
        BVPFailure: no minimizer was found.
    """
    geo = geodesic if geodesic is not None else solve_bvp(m, e.p, e.s, e.q, e.t, **solver)
    c = geo.curve
    gp, gq = gradients(m, geo)
    gs, gt = eval_geometry(m, c.p, c.s), eval_geometry(m, c.q, c.t)
    dL_ds, dL_dt = time_derivatives(m, geo)
    return LData(
        pair=e,
        value=geo.value,
        geodesic=geo,
        grad_p=gp,
        grad_q=gq,
        grad_p_norm2=float(gp @ gs.g @ gp),
        grad_q_norm2=float(gq @ gt.g @ gq),
        dL_ds=dL_ds,
        dL_dt=dL_dt,
        R_p=float(gs.scalar),
        R_q=float(gt.scalar),
    )


# ---------------------------------------------------------------------------
# data along a curve
# ---------------------------------------------------------------------------


class _Along:
    """Curve kinematics and geometry at quadrature abscissae plus both endpoints."""

    def __init__(self, m: MetricFamily, curve: Curve, order: int = 8):
        taus, w = curve.quadrature(order)
        self.m = m
        self.curve = curve
        self.w = w
        self.taus = np.concatenate([taus, [curve.s, curve.t]])
        x = curve.position(self.taus)
        x[-2], x[-1] = curve.p, curve.q
        if m.chart_margin is not None and min(m.chart_margin(xi) for xi in x) < 0:
            raise OutOfDomainError("curve leaves the chart")
        self.x = x
        self.T = curve.velocity(self.taus)
        self.a = curve.acceleration(self.taus)
        self.geo = eval_geometry_batch(m, x, self.taus, check=False)


def _cache_along(m, geo: LGeodesic, order=8) -> _Along:
    key = ("along", order, geo.curve.segments)
    if key not in geo._cache:
        geo._cache[key] = _Along(m, geo.curve, order)
    return geo._cache[key]


def _cov(G, T, U):
    # Gamma(T, U), the connection part of D U
    return np.einsum("pkij,pi,pj...->pk...", G, T, U)


def _frozen_dd(d: _Along, U, Ud, Udd):
    """Second covariant derivative with the connection frozen in time."""
    g = d.geo
    T, a = d.T, d.a
    GTU = _cov(g.christoffel, T, U)
    return (
        Udd
        + np.einsum("pkijm,pm,pi,pj...->pk...", g.christoffel_dx, T, T, U)
        + _cov(g.christoffel, a, U)
        + 2.0 * _cov(g.christoffel, T, Ud)
        + _cov(g.christoffel, T, GTU)
    )


def _field_arrays(d: _Along, V: VariationField):
    return V.value(d.taus), V.derivative(d.taus), V.second_derivative(d.taus)


def _q_bulk_density(d: _Along, U, Ud, W, Wd):
    """Pointwise integrand of the bulk form of ``Q(U, W)``; fields carry a trailing column axis."""
    g = d.geo
    T = d.T
    DU = Ud + _cov(g.christoffel, T, U)
    DW = Wd + _cov(g.christoffel, T, W)
    out = 2.0 * np.einsum("pia,pij,pjb->pab", DU, g.g, DW)
    out -= 2.0 * np.einsum("pkij,pk,pia,pjb->pab", g.cov_ricci, T, U, W)
    out += np.einsum("pij,pia,pjb->pab", g.hess_R, U, W)
    out -= 2.0 * np.einsum("pijkl,pia,pj,pk,plb->pab", g.riemann, U, T, T, W)
    out += 2.0 * np.einsum("pkij,pka,pi,pjb->pab", g.cov_ricci, U, T, W)
    out += 2.0 * np.einsum("pkij,pkb,pi,pja->pab", g.cov_ricci, W, T, U)
    return out


def q_form(m: MetricFamily, curve: Curve, U, Ud, W=None, Wd=None, order: int = 8, along=None):
    """Bilinear second-variation form on families of fields.

    ``U`` and ``Ud`` are callables ``tau -> (n, k)`` arrays (field values and
    chart derivatives); the result is the ``k x k`` matrix ``Q(U_a, W_b)``.
    """
    d = along if along is not None else _Along(m, curve, order)
    P = len(d.w)
    Uv, Udv = U(d.taus[:P]), Ud(d.taus[:P])
    if W is None:
        Wv, Wdv = Uv, Udv
    else:
        Wv, Wdv = W(d.taus[:P]), Wd(d.taus[:P])
    sub = _Sub(d, P)
    dens = _q_bulk_density(sub, Uv, Udv, Wv, Wdv)
    return np.einsum("p,pab->ab", d.w, dens)


class _Sub:
    """View of an :class:`_Along` restricted to the first ``P`` (quadrature) points."""

    def __init__(self, d: _Along, P: int):
        self.T = d.T[:P]
        self.a = d.a[:P]
        self.taus = d.taus[:P]
        self.geo = d.geo[:P]


def second_variation(m: MetricFamily, geo, V: VariationField, order: int = 8):
    """Both forms of the second variation ``Q(V, V)`` along ``geo``.

    Returns ``(boundary_form, bulk_form)``.  The boundary form is

        2<DV, V>|_s^t + int <V, Hess R(V) - 2 R(V,T)T + 4 (nabla_V Ric)(T)
                             - 2 DDV + 4 Ric(DV)> dtau

    and the bulk form is

        int 2|DV|^2 - 2 (nabla_T Ric)(V,V) + Hess R(V,V) - 2 Rm(V,T,T,V)
            + 4 (nabla_V Ric)(T,V) dtau,

    with ``DDV`` the frozen-connection second derivative.  They agree up to
    quadrature error for any field along any curve.
    """
    curve = geo.curve if isinstance(geo, LGeodesic) else geo
    d = _cache_along(m, geo, order) if isinstance(geo, LGeodesic) else _Along(m, curve, order)
    U, Ud, Udd = _field_arrays(d, V)
    g = d.geo
    T = d.T
    DU = Ud + _cov(g.christoffel, T, U)
    DDU = _frozen_dd(d, U, Ud, Udd)
    P = len(d.w)

    bulk = (
        2.0 * np.einsum("pi,pij,pj->p", DU, g.g, DU)
        - 2.0 * np.einsum("pkij,pk,pi,pj->p", g.cov_ricci, T, U, U)
        + np.einsum("pij,pi,pj->p", g.hess_R, U, U)
        - 2.0 * np.einsum("pijkl,pi,pj,pk,pl->p", g.riemann, U, T, T, U)
        + 4.0 * np.einsum("pkij,pk,pi,pj->p", g.cov_ricci, U, T, U)
    )
    inner = (
        np.einsum("pij,pi,pj->p", g.hess_R, U, U)
        - 2.0 * np.einsum("pijkl,pi,pj,pk,pl->p", g.riemann, U, T, T, U)
        + 4.0 * np.einsum("pkij,pk,pi,pj->p", g.cov_ricci, U, T, U)
        - 2.0 * np.einsum("pi,pij,pj->p", DDU, g.g, U)
        + 4.0 * np.einsum("pij,pi,pj->p", g.ricci, DU, U)
    )
    ends = 2.0 * np.einsum("pi,pij,pj->p", DU[P:], g.g[P:], U[P:])
    boundary_form = float(ends[1] - ends[0] + d.w @ inner[:P])
    bulk_form = float(d.w @ bulk[:P])
    return boundary_form, bulk_form


def first_variation(m: MetricFamily, curve: Curve, W: VariationField, order: int = 8) -> float:
    """Directional derivative of the functional along ``W``.

    ``2<W, T>|_s^t - int <W, 2 nabla_T T - 4 Ric(T) - grad R> dtau``; for
    fields vanishing at the ends of a geodesic this is zero.
    """
    d = _Along(m, curve, order)
    U = W.value(d.taus)
    g = d.geo
    acc = d.a + np.einsum("pkij,pi,pj->pk", g.christoffel, d.T, d.T)
    defect = 2.0 * acc - 4.0 * np.einsum("pkl,plj,pj->pk", g.g_inv, g.ricci, d.T) - g.grad_R
    P = len(d.w)
    bulk = np.einsum("pi,pij,pj->p", U, g.g, defect)
    ends = 2.0 * np.einsum("pi,pij,pj->p", U[P:], g.g[P:], d.T[P:])
    return float(ends[1] - ends[0] - d.w @ bulk[:P])


def lemma_residual(m: MetricFamily, curve: Curve, V: VariationField, count: int = 16, h: float = 1e-4):
    """Max defect of the evolution identity for ``<DV, V>`` along ``curve``.

    Compares a 4th-order central difference of ``<DV, V>_{g(tau)}`` with

        |DV|^2 + <DDV, V> - 2 Ric(DV, V) - (nabla_T Ric)(V, V)

    at ``count`` interior parameters.
    """
    taus = np.linspace(curve.s, curve.t, count + 2)[1:-1]

    def pairing(ts):
        x = curve.position(ts)
        T = curve.velocity(ts)
        g = eval_geometry_batch(m, x, ts)
        U, Ud = V.value(ts), V.derivative(ts)
        DU = Ud + np.einsum("pkij,pi,pj->pk", g.christoffel, T, U)
        return np.einsum("pi,pij,pj->p", DU, g.g, U)

    stencil = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * h)
    offs = np.array([2.0, 1.0, -1.0, -2.0]) * -h
    fd = sum(c * pairing(taus + o) for c, o in zip(stencil, offs))

    d = _Along.__new__(_Along)
    d.taus = taus
    d.x = curve.position(taus)
    d.T = curve.velocity(taus)
    d.a = curve.acceleration(taus)
    d.geo = eval_geometry_batch(m, d.x, taus)
    g = d.geo
    U, Ud, Udd = V.value(taus), V.derivative(taus), V.second_derivative(taus)
    DU = Ud + _cov(g.christoffel, d.T, U)
    DDU = _frozen_dd(d, U, Ud, Udd)
    rhs = (
        np.einsum("pi,pij,pj->p", DU, g.g, DU)
        + np.einsum("pi,pij,pj->p", DDU, g.g, U)
        - 2.0 * np.einsum("pij,pi,pj->p", g.ricci, DU, U)
        - np.einsum("pkij,pk,pi,pj->p", g.cov_ricci, d.T, U, U)
    )
    return float(np.max(np.abs(fd - rhs)))


def jacobi_residual(m: MetricFamily, geo: LGeodesic, V: VariationField, order: int = 8) -> float:
    """Max g-norm of the Jacobi operator applied to ``V`` at quadrature abscissae."""
    d = _cache_along(m, geo, order)
    P = len(d.w)
    sub = _Sub(d, P)
    U, Ud, Udd = (arr[:P] for arr in _field_arrays(d, V))
    g = sub.geo
    T = sub.T
    DU = Ud + _cov(g.christoffel, T, U)
    DDU = _frozen_dd(sub, U, Ud, Udd)
    Rup = np.einsum("plm,pijkm->plijk", g.g_inv, g.riemann)  # R^l_{ijk} from Rm_{ijkl}
    res = (
        DDU
        + np.einsum("plijk,pi,pj,pk->pl", Rup, U, T, T)
        - 2.0 * np.einsum("plm,pkim,pk,pi->pl", g.g_inv, g.cov_ricci, U, T)
        - 2.0 * np.einsum("plm,pmj,pj->pl", g.g_inv, g.ricci, DU)
        - 0.5 * np.einsum("plm,pmj,pj->pl", g.g_inv, g.hess_R, U)
    )
    return float(np.max(np.sqrt(np.abs(np.einsum("pi,pij,pj->p", res, g.g, res)))))


def transport_residual(m: MetricFamily, geo: LGeodesic, V: VariationField, order: int = 8) -> float:
    """Max g-norm of ``DV - Ric(V)^#`` at quadrature abscissae."""
    d = _cache_along(m, geo, order)
    P = len(d.w)
    g = d.geo[:P]
    U, Ud = V.value(d.taus[:P]), V.derivative(d.taus[:P])
    res = Ud + _cov(g.christoffel, d.T[:P], U) - np.einsum("plm,pmj,pj->pl", g.g_inv, g.ricci, U)
    return float(np.max(np.sqrt(np.abs(np.einsum("pi,pij,pj->p", res, g.g, res)))))


# ---------------------------------------------------------------------------
# H term and its trace
# ---------------------------------------------------------------------------


def h_term(geo_data, T, V) -> float:
    """``H(T, V)`` from pointwise curvature data at a common ``(x, tau)``.

    H = 2 dRic/dtau(V,V) + 4[(nabla_T Ric)(V,V) - (nabla_V Ric)(V,T)]
        + 2 |Ric(V)|^2 + 2 Rm(V,T,T,V) - Hess R(V,V)
    """
    g = geo_data
    T = np.asarray(T, float)
    V = np.asarray(V, float)
    RicV = g.ricci @ V
    return float(
        2.0 * V @ g.dricci_dtau @ V
        + 4.0 * (np.einsum("kij,k,i,j->", g.cov_ricci, T, V, V) - np.einsum("kij,k,i,j->", g.cov_ricci, V, V, T))
        + 2.0 * RicV @ g.g_inv @ RicV
        + 2.0 * np.einsum("ijkl,i,j,k,l->", g.riemann, V, T, T, V)
        - V @ g.hess_R @ V
    )


def h_trace(geo_data, T) -> float:
    """``sum_i H(T, e_i)`` over a ``g``-orthonormal frame at the point."""
    E = orthonormal_frame(geo_data.g)
    return sum(h_term(geo_data, T, E[:, i]) for i in range(E.shape[1]))


def trace_check(m: MetricFamily, geo: LGeodesic, count: int = 16, h: float = 1e-4):
    """Compare ``sum_i H(T, e_i)`` with ``d/dtau (R + |T|^2)`` along ``geo``.

    The derivative is a 4th-order central difference along the curve.

    Returns:
        (taus, trace values, derivative values, max abs difference)
    """
    c = geo.curve
    taus = np.linspace(c.s, c.t, count + 2)[1:-1]
    taus = np.clip(taus, c.s + 2 * h, c.t - 2 * h)

    def dens(ts):
        g = eval_geometry_batch(m, c.position(ts), ts)
        T = c.velocity(ts)
        return g.scalar + np.einsum("pi,pij,pj->p", T, g.g, T)

    fd = (-dens(taus + 2 * h) + 8 * dens(taus + h) - 8 * dens(taus - h) + dens(taus - 2 * h)) / (12 * h)
    g = eval_geometry_batch(m, c.position(taus), taus)
    T = c.velocity(taus)
    tr = np.array([h_trace(g[i], T[i]) for i in range(len(taus))])
    return taus, tr, fd, float(np.max(np.abs(tr - fd)))


# ---------------------------------------------------------------------------
# Hessian on M x M and the box operator
# ---------------------------------------------------------------------------


def _require_unique(geo: LGeodesic):
    if geo.multiplicity_flag:
        raise NotComputableError("minimizer is not unique (multiplicity flagged)")


def _fundamental_gram(m: MetricFamily, geo: LGeodesic, order: int = 8):
    key = ("fund_gram", order, geo.curve.segments)
    if key not in geo._cache:
        fund = jacobi_fundamental(m, geo)
        c = geo.curve
        interp = _Interpolant(c.taus, fund.J, fund.Jd, fund.Jdd)
        d = _cache_along(m, geo, order)
        geo._cache[key] = q_form(m, c, lambda ts: interp(ts, 0), lambda ts: interp(ts, 1), along=d)
    return geo._cache[key]


def hessian_matrix(m: MetricFamily, geo: LGeodesic, order: int = 8) -> np.ndarray:
    """``2n x 2n`` matrix ``H`` with ``Hess L(v + w, v + w) = [v; w]^T H [v; w]``.

    Raises:
        ConjugatePointError: endpoints conjugate along ``geo``.
    """
    key = ("hessian", order, geo.curve.segments)
    if key not in geo._cache:
        Z = jacobi_fundamental(m, geo).boundary_map()
        Hm = Z.T @ _fundamental_gram(m, geo, order) @ Z
        geo._cache[key] = 0.5 * (Hm + Hm.T)
    return geo._cache[key]


def hessian_mm(m: MetricFamily, e: EndpointPair, v, w, geodesic: LGeodesic | None = None, **solver) -> float:
    """Second derivative of ``L`` along ``(v, w)`` at ``e``, as ``Q(J, J)``.

    Raises:
        NotComputableError: the minimizer is not unique.
        ConjugatePointError: endpoints conjugate.
    """
    geo = geodesic if geodesic is not None else solve_bvp(m, e.p, e.s, e.q, e.t, **solver)
    _require_unique(geo)
    z = np.concatenate([np.asarray(v, float), np.asarray(w, float)])
    return float(z @ hessian_matrix(m, geo) @ z)


def _geodesic_offset(m, x, tau, v, eps):
    # second-order geodesic of g(tau) through x with velocity v
    G = eval_geometry(m, x, tau).christoffel
    return x + eps * v - 0.5 * eps**2 * np.einsum("kij,i,j->k", G, v, v)


def hessian_mm_fd(m: MetricFamily, e: EndpointPair, v, w, h: float = 1e-3, geodesic=None, rtol=1e-12) -> float:
    """Finite-difference oracle for :func:`hessian_mm`.

    Central second differences of ``L`` along second-order geodesic offsets
    of both endpoints with re-solved minimizers, Richardson extrapolated over
    steps ``h`` and ``h/2``.
    """
    v = np.asarray(v, float)
    w = np.asarray(w, float)
    geo = geodesic if geodesic is not None else solve_bvp(m, e.p, e.s, e.q, e.t, rtol=rtol)
    v0 = geo.initial_velocity

    def L(eps):
        p = _geodesic_offset(m, e.p, e.s, v, eps)
        q = _geodesic_offset(m, e.q, e.t, w, eps)
        # only the value is needed, so skip refining the curve for the EL certificate
        return solve_bvp(m, p, e.s, q, e.t, starts=1, guess=v0, method="shooting", rtol=rtol, tol=np.inf).value

    L0 = geo.value

    def d2(step):
        return (L(step) - 2 * L0 + L(-step)) / step**2

    a, b = d2(h), d2(h / 2)
    return float((4 * b - a) / 3)


def hessian_gap(m: MetricFamily, geo: LGeodesic, v):
    """Hessian estimate data for the transported field with ``V(s) = v``.

    Returns:
        dict with ``q_transported`` (Q(V,V)), ``q_jacobi`` (Q(J,J) for the
        Jacobi field with the same endpoint values) and ``hessian``.
    """
    v = np.asarray(v, float)
    V = transported_field(m, geo, v)
    _, q_v = second_variation(m, geo, V)
    w = V.values[-1]
    _, q_j = second_variation(m, geo, jacobi_solve(m, geo, v, w))
    z = np.concatenate([v, w])
    return {"q_transported": q_v, "q_jacobi": q_j, "hessian": float(z @ hessian_matrix(m, geo) @ z), "w": w}


@dataclass(frozen=True)
class BoxData:
    """Ingredients of the box operator at one pair."""

    box: float
    frame: np.ndarray  # g_s-orthonormal columns at p
    transport: np.ndarray  # chart matrix of the transport map
    diagonal_hessian: np.ndarray  # n x n, Hess L(e_i + P e_i, e_j + P e_j)
    ricci_p: np.ndarray
    ricci_q: np.ndarray


def box_data(m: MetricFamily, geo: LGeodesic, frame=None) -> BoxData:
    _require_unique(geo)
    c = geo.curve
    gs = eval_geometry(m, c.p, c.s)
    gt = eval_geometry(m, c.q, c.t)
    E = orthonormal_frame(gs.g) if frame is None else np.asarray(frame, float)
    P = transport(m, geo).matrix
    Z = np.vstack([E, P @ E])
    D = Z.T @ hessian_matrix(m, geo) @ Z
    return BoxData(
        box=0.5 * float(np.trace(D)),
        frame=E,
        transport=P,
        diagonal_hessian=D,
        ricci_p=E.T @ gs.ricci @ E,
        ricci_q=(P @ E).T @ gt.ricci @ (P @ E),
    )


def box_operator(m: MetricFamily, e: EndpointPair, frame=None, geodesic: LGeodesic | None = None, **solver) -> float:
    """Trace of the ``M x M`` Hessian over ``(e_i + P e_i)/sqrt(2)``.

    ``frame`` is any ``g_s``-orthonormal basis at ``p`` (columns); the default
    is Gram-Schmidt of the chart basis.

    Raises:
        NotComputableError: the minimizer is not unique.
        ConjugatePointError: endpoints conjugate.
    """
    geo = geodesic if geodesic is not None else solve_bvp(m, e.p, e.s, e.q, e.t, **solver)
    return box_data(m, geo, frame).box
