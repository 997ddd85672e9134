"""Differential-geometry kernel for time-dependent metrics on a single chart.

Every curvature quantity is obtained from the metric callable ``g(x, tau)`` by
nested forward-mode automatic differentiation (``jax.jacfwd``).  A
finite-difference route (:func:`fd_geometry`) is kept alongside as an
independent oracle.

Index conventions (all arrays are in chart components):

* ``christoffel[k, i, j]`` is the symbol with upper index ``k``.
* ``christoffel_dx[k, i, j, m]`` is its partial derivative in ``x^m``.
* ``riemann[i, j, k, l] = g(R(d_i, d_j) d_k, d_l)`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``, so that
  ``riemann[i, j, j, i] > 0`` on a round sphere.
* ``ricci[j, k]`` contracts ``riemann`` over its first and last slots.
* ``grad_R`` is the gradient *vector* (index raised); ``hess_R`` is the
  covariant Hessian with both indices down.
* ``cov_ricci[a, b, c] = (nabla_a Ric)_{bc}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import SimpleNamespace
from typing import Callable, Optional

import jax
import jax.numpy as jnp
import numpy as np

from .exceptions import DegenerateMetricError, OutOfDomainError

jax.config.update("jax_enable_x64", True)

__all__ = [
    "MetricFamily",
    "GeometryData",
    "curvature_functions",
    "eval_geometry",
    "eval_geometry_batch",
    "covariant_derivative",
    "orthonormal_frame",
    "fd_geometry",
]


def curvature_functions(metric):
    """Build jax-traceable curvature maps ``(x, tau) -> tensor`` for ``metric``.

    Nothing here is jitted; callers compose and jit what they need.
    """

    def christoffel(x, tau):
        g = metric(x, tau)
        dg = jax.jacfwd(metric)(x, tau)  # dg[i, j, k] = d_k g_ij
        lower = 0.5 * (
            jnp.einsum("jli->lij", dg)
            + jnp.einsum("ilj->lij", dg)
            - jnp.einsum("ijl->lij", dg)
        )
        return jnp.einsum("kl,lij->kij", jnp.linalg.inv(g), lower)

    def christoffel_dx(x, tau):
        return jax.jacfwd(christoffel)(x, tau)

    def riemann_up(x, tau):
        # R^l_{ijk} with R(d_i, d_j) d_k = R^l_{ijk} d_l
        G = christoffel(x, tau)
        dG = christoffel_dx(x, tau)
        return (
            jnp.einsum("ljki->lijk", dG)
            - jnp.einsum("likj->lijk", dG)
            + jnp.einsum("lim,mjk->lijk", G, G)
            - jnp.einsum("ljm,mik->lijk", G, G)
        )

    def riemann(x, tau):
        return jnp.einsum("lm,mijk->ijkl", metric(x, tau), riemann_up(x, tau))

    def ricci(x, tau):
        return jnp.einsum("iijk->jk", riemann_up(x, tau))

    def scalar(x, tau):
        return jnp.einsum("jk,jk->", jnp.linalg.inv(metric(x, tau)), ricci(x, tau))

    def cov_ricci(x, tau):
        G = christoffel(x, tau)
        Ric = ricci(x, tau)
        dRic = jax.jacfwd(ricci)(x, tau)  # dRic[b, c, a] = d_a Ric_bc
        return (
            jnp.einsum("bca->abc", dRic)
            - jnp.einsum("lab,lc->abc", G, Ric)
            - jnp.einsum("lac,bl->abc", G, Ric)
        )

    def geometry(x, tau):
        g = metric(x, tau)
        g_inv = jnp.linalg.inv(g)
        G = christoffel(x, tau)
        dR = jax.jacfwd(scalar)(x, tau)
        ddR = jax.jacfwd(jax.jacfwd(scalar))(x, tau)
        return dict(
            g=g,
            g_inv=g_inv,
            dg_dtau=jax.jacfwd(metric, argnums=1)(x, tau),
            christoffel=G,
            christoffel_dx=christoffel_dx(x, tau),
            riemann=riemann(x, tau),
            ricci=ricci(x, tau),
            scalar=scalar(x, tau),
            grad_R=g_inv @ dR,
            hess_R=ddR - jnp.einsum("kij,k->ij", G, dR),
            cov_ricci=cov_ricci(x, tau),
            dricci_dtau=jax.jacfwd(ricci, argnums=1)(x, tau),
            dscalar_dtau=jax.jacfwd(scalar, argnums=1)(x, tau),
        )

    return SimpleNamespace(
        christoffel=christoffel,
        christoffel_dx=christoffel_dx,
        riemann_up=riemann_up,
        riemann=riemann,
        ricci=ricci,
        scalar=scalar,
        cov_ricci=cov_ricci,
        geometry=geometry,
    )


class MetricFamily:
    """A smooth one-parameter family of metrics ``g(x, tau)`` on one chart.

    Args:
        metric: jax-traceable callable ``(x, tau) -> (n, n)`` array.
        dim: manifold dimension ``n``.
        time_domain: ``(lo, hi)``; a time is admissible when ``lo <= tau < hi``.
        chart_margin: callable ``x -> float``, non-negative exactly on the chart
            domain.  ``None`` means the chart covers all of R^n.
        periods: per-coordinate period (``0`` for non-periodic coordinates).
        sample_box: ``(lo, hi)`` coordinate box used for random sampling.
        time_window: ``(lo, hi)`` time window used for random sampling.
        name: label used in reports.
    """

    def __init__(
        self,
        metric: Callable,
        dim: int,
        time_domain=(-np.inf, np.inf),
        chart_margin: Optional[Callable] = None,
        periods=None,
        sample_box=None,
        time_window=None,
        name: str = "metric",
        spec=None,
    ):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.metric = metric
        self.dim = int(dim)
        self.time_domain = (float(time_domain[0]), float(time_domain[1]))
        self.chart_margin = chart_margin
        self.periods = np.zeros(dim) if periods is None else np.asarray(periods, float)
        if sample_box is None:
            sample_box = (-np.ones(dim), np.ones(dim))
        self.sample_box = (np.asarray(sample_box[0], float), np.asarray(sample_box[1], float))
        if time_window is None:
            lo, hi = self.time_domain
            time_window = (max(lo, 0.0), min(hi, 1.0))
        self.time_window = tuple(float(v) for v in time_window)
        self.name = name
        self.spec = spec
        self._jit_cache = {}

    def __repr__(self):
        return f"MetricFamily({self.name!r}, dim={self.dim})"

    # -- domains -----------------------------------------------------------

    def in_time_domain(self, tau) -> bool:
        lo, hi = self.time_domain
        return bool(lo <= tau < hi)

    def margin(self, x) -> float:
        if self.chart_margin is None:
            return np.inf
        return float(self.chart_margin(np.asarray(x, float)))

    def in_chart(self, x) -> bool:
        x = np.asarray(x, float)
        return x.shape == (self.dim,) and bool(np.all(np.isfinite(x))) and self.margin(x) >= 0

    def check(self, x, tau):
        """Raise :class:`OutOfDomainError` unless ``(x, tau)`` is admissible."""
        x = np.asarray(x, float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        if not self.in_time_domain(tau):
            raise OutOfDomainError(f"time {tau} outside flow domain {self.time_domain}")
        if not self.in_chart(x):
            raise OutOfDomainError(f"point {x} outside chart domain")

    def wrap(self, dx):
        """Reduce a coordinate difference to the nearest periodic image."""
        dx = np.array(dx, float)
        per = self.periods
        mask = per > 0
        dx[..., mask] = dx[..., mask] - per[mask] * np.round(dx[..., mask] / per[mask])
        return dx

    # -- compiled kernels --------------------------------------------------

    def jitted(self, key, builder):
        """Return a cached compiled kernel; ``builder(self)`` creates it once."""
        fn = self._jit_cache.get(key)
        if fn is None:
            fn = self._jit_cache[key] = builder(self)
        return fn

    @cached_property
    def curvature(self):
        return curvature_functions(self.metric)

    def metric_matrix(self, x, tau) -> np.ndarray:
        fn = self.jitted("metric", lambda m: jax.jit(m.metric))
        return np.asarray(fn(jnp.asarray(x, float), float(tau)))


@dataclass(frozen=True)
class GeometryData:
    """Pointwise curvature data at ``(x, tau)``.

    Fields may carry one leading batch axis when produced by
    :func:`eval_geometry_batch`.
    """

    g: np.ndarray
    g_inv: np.ndarray
    dg_dtau: np.ndarray
    christoffel: np.ndarray
    christoffel_dx: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    grad_R: np.ndarray
    hess_R: np.ndarray
    cov_ricci: np.ndarray
    dricci_dtau: np.ndarray
    dscalar_dtau: np.ndarray
    x: np.ndarray = field(default=None, repr=False)
    tau: np.ndarray = field(default=None, repr=False)

    def __getitem__(self, idx):
        """Select entries of a batched instance."""
        return GeometryData(**{k: np.asarray(v)[idx] for k, v in self.__dict__.items()})

    def ricci_sharp(self):
        return np.einsum("...kl,...lj->...kj", self.g_inv, self.ricci)


def _geometry_kernel(m):
    return jax.jit(m.curvature.geometry)


def _geometry_batch_kernel(m):
    return jax.jit(jax.vmap(m.curvature.geometry))


def _check_metric(g):
    g = np.asarray(g)
    if not np.all(np.isfinite(g)):
        raise DegenerateMetricError("metric has non-finite entries")
    if np.max(np.abs(g - np.swapaxes(g, -1, -2))) > 1e-12 * max(1.0, np.max(np.abs(g))):
        raise DegenerateMetricError("metric is not symmetric")
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise DegenerateMetricError("metric is not positive definite")


def eval_geometry(m: MetricFamily, x, tau) -> GeometryData:
    """Evaluate every curvature quantity of ``m`` at ``(x, tau)``.

    Raises:
        OutOfDomainError: if ``(x, tau)`` is outside the flow's domains.
        DegenerateMetricError: if ``g(x, tau)`` is not positive definite.
    """
    m.check(x, tau)
    _check_metric(m.metric_matrix(x, tau))
    out = m.jitted("geometry", _geometry_kernel)(jnp.asarray(x, float), float(tau))
    return GeometryData(**{k: np.asarray(v) for k, v in out.items()}, x=np.asarray(x, float), tau=float(tau))


BATCH_CHUNK = 64  # fixed leading size of batched kernel calls


def batched(fn, *arrays, chunk: int = BATCH_CHUNK):
    """Apply a compiled batch kernel in fixed-size chunks.

    Every call sees a leading dimension of exactly ``chunk`` (the tail is
    padded by repeating the last row), so the kernel is traced once however
    many points are requested.  Outputs may be arrays or dicts of arrays.
    """
    arrays = [np.asarray(a) for a in arrays]
    total = len(arrays[0])
    if total == 0:
        raise ValueError("empty batch")
    pad = -total % chunk
    if pad:
        arrays = [np.concatenate([a, np.repeat(a[-1:], pad, axis=0)]) for a in arrays]
    parts = [fn(*(jnp.asarray(a[i : i + chunk]) for a in arrays)) for i in range(0, total + pad, chunk)]
    return jax.tree_util.tree_map(lambda *xs: np.concatenate([np.asarray(x) for x in xs])[:total], *parts)


def eval_geometry_batch(m: MetricFamily, xs, taus, check=True) -> GeometryData:
    """Vectorised :func:`eval_geometry` over points ``xs[i]`` at times ``taus[i]``."""
    xs = np.asarray(xs, float)
    taus = np.asarray(taus, float)
    if check:
        for x, tau in zip(xs, taus):
            m.check(x, tau)
    out = batched(m.jitted("geometry_batch", _geometry_batch_kernel), xs, taus)
    data = GeometryData(**out, x=xs, tau=taus)
    _check_metric(data.g)
    return data


def covariant_derivative(geo: GeometryData, along, field_value, field_jacobian):
    """Covariant derivative ``nabla_X Y`` at a single point.

    Args:
        geo: geometry at the base point.
        along: components of ``X``.
        field_value: components of ``Y`` at the base point.
        field_jacobian: ``J[k, i] = d_i Y^k`` at the base point.
    """
    X = np.asarray(along, float)
    Y = np.asarray(field_value, float)
    J = np.asarray(field_jacobian, float)
    n = geo.g.shape[-1]
    if X.shape != (n,) or Y.shape != (n,) or J.shape != (n, n):
        raise ValueError(
            f"shape mismatch: along {X.shape}, value {Y.shape}, jacobian {J.shape} for dim {n}"
        )
    return J @ X + np.einsum("kij,i,j->k", geo.christoffel, X, Y)


def orthonormal_frame(g) -> np.ndarray:
    """Gram-Schmidt of the chart basis under ``g``; columns are the frame."""
    L = np.linalg.cholesky(np.asarray(g, float))
    return np.linalg.inv(L).T


# ---------------------------------------------------------------------------
# finite-difference oracle
# ---------------------------------------------------------------------------

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFSETS = np.arange(-2, 3)


def _fd_first(f, x, h):
    """4th-order central first derivatives; ``out[..., k] = d_k f``."""
    n = len(x)
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        cols.append(sum(c * f(x + o * e) for c, o in zip(_D1, _OFFSETS) if c) / h)
    return np.stack(cols, axis=-1)


def _fd_second(f, x, h):
    """4th-order central second derivatives; ``out[..., a, b] = d_a d_b f``."""
    n = len(x)
    f0 = f(x)
    out = np.zeros(np.shape(f0) + (n, n))
    eye = np.eye(n) * h
    for a in range(n):
        out[..., a, a] = sum(c * f(x + o * eye[a]) for c, o in zip(_D2, _OFFSETS)) / h**2
        for b in range(a + 1, n):
            val = sum(
                ca * cb * f(x + oa * eye[a] + ob * eye[b])
                for ca, oa in zip(_D1, _OFFSETS)
                if ca
                for cb, ob in zip(_D1, _OFFSETS)
                if cb
            ) / h**2
            out[..., a, b] = out[..., b, a] = val
    return out


def _fd_curvature_from_jets(g, dg, ddg):
    """Christoffel symbols, Riemann, Ricci and scalar from metric jets.

    ``dg[i, j, k] = d_k g_ij`` and ``ddg[i, j, k, m] = d_k d_m g_ij``.
    """
    gi = np.linalg.inv(g)
    lower = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg))
    G = np.einsum("kl,lij->kij", gi, lower)
    dlower = 0.5 * (
        np.einsum("jlim->lijm", ddg) + np.einsum("iljm->lijm", ddg) - np.einsum("ijlm->lijm", ddg)
    )
    dgi = -np.einsum("ka,abm,bl->klm", gi, dg, gi)
    dG = np.einsum("klm,lij->kijm", dgi, lower) + np.einsum("kl,lijm->kijm", gi, dlower)
    Rup = (
        np.einsum("ljki->lijk", dG)
        - np.einsum("likj->lijk", dG)
        + np.einsum("lim,mjk->lijk", G, G)
        - np.einsum("ljm,mik->lijk", G, G)
    )
    Rm = np.einsum("lm,mijk->ijkl", g, Rup)
    Ric = np.einsum("iijk->jk", Rup)
    return G, dG, Rm, Ric, float(np.einsum("jk,jk->", gi, Ric))


def fd_geometry(m: MetricFamily, x, tau, h=1e-2, h_outer=1e-3) -> GeometryData:
    """Finite-difference estimate of every field of :func:`eval_geometry`.

    Metric derivatives use 4th-order central stencils of step ``h``.  Fields
    needing more than two metric derivatives (``grad_R``, ``hess_R``,
    ``cov_ricci``, ``dricci_dtau``) difference the lower-order FD quantities
    again with step ``h_outer`` and are correspondingly less accurate.
    """
    x = np.asarray(x, float)
    tau = float(tau)

    def jets(y, s):
        gf = lambda z: m.metric_matrix(z, s)
        return gf(y), _fd_first(gf, y, h), _fd_second(gf, y, h)

    def curv(y, s):
        return _fd_curvature_from_jets(*jets(y, s))

    g, dg, _ = jets(x, tau)
    G, dG, Rm, Ric, R = curv(x, tau)
    gi = np.linalg.inv(g)

    ric_x = lambda y: curv(y, tau)[3]
    scal_x = lambda y: np.asarray(curv(y, tau)[4])
    dR = _fd_first(scal_x, x, h_outer)
    ddR = _fd_second(scal_x, x, 10 * h_outer)
    dRic = _fd_first(ric_x, x, h_outer)  # dRic[b, c, a]
    cov = (
        np.einsum("bca->abc", dRic)
        - np.einsum("lab,lc->abc", G, Ric)
        - np.einsum("lac,bl->abc", G, Ric)
    )
    ht = h_outer
    stencil = [(c, tau + o * ht) for c, o in zip(_D1, _OFFSETS) if c]
    dric_dt = sum(c * curv(x, s)[3] for c, s in stencil) / ht
    dscal_dt = sum(c * curv(x, s)[4] for c, s in stencil) / ht
    dg_dt = sum(c * m.metric_matrix(x, s) for c, s in stencil) / ht
    return GeometryData(
        g=g,
        g_inv=gi,
        dg_dtau=dg_dt,
        christoffel=G,
        christoffel_dx=dG,
        riemann=Rm,
        ricci=Ric,
        scalar=np.asarray(R),
        grad_R=gi @ dR,
        hess_R=ddR - np.einsum("kij,k->ij", G, dR),
        cov_ricci=cov,
        dricci_dtau=dric_dt,
        dscalar_dtau=np.asarray(dscal_dt),
        x=x,
        tau=tau,
    )
