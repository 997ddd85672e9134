"""Closed-form Ricci flow solutions (sign convention dg/dtau = -2 Ric)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np

from .exceptions import InvalidParameterError, UnsupportedFlowError
from .geom import MetricFamily

__all__ = ["FlowSpec", "FLOW_NAMES", "make_flow", "verify_flow", "sample_pairs", "POLAR_MARGIN"]

FLOW_NAMES = ("euclidean", "shrinking_sphere", "cigar", "product")

# polar caps excluded from the sphere chart
POLAR_MARGIN = 0.1

_DEFAULT_PARAMS = {
    "euclidean": {},
    "shrinking_sphere": {"radius": 1.0},
    "cigar": {},
    "product": {"radius": 1.0},
}


@dataclass(frozen=True)
class FlowSpec:
    """Names one member of the catalog.

    ``params`` is stored as a sorted tuple of ``(name, value)`` pairs so that
    specs are hashable; pass a plain dict, it is normalised.
    """

    name: str
    dim: int = 2
    params: tuple = field(default=())

    def __post_init__(self):
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    @property
    def param_dict(self) -> dict:
        out = dict(_DEFAULT_PARAMS.get(self.name, {}))
        out.update(dict(self.params))
        return out

    @property
    def time_domain(self):
        p = self.param_dict
        if self.name == "shrinking_sphere":
            return (0.0, p["radius"] ** 2 / (2.0 * (self.dim - 1)))
        if self.name == "product":
            return (0.0, p["radius"] ** 2 / 2.0)
        return (-np.inf, np.inf)


def _round_sphere_diag(angles):
    # hyperspherical chart (theta_1..theta_{n-1}, phi): diag(1, s1^2, s1^2 s2^2, ...)
    s2 = jnp.sin(angles[:-1]) ** 2
    return jnp.concatenate([jnp.ones(1), jnp.cumprod(s2)])


def _polar_margin(n_polar):
    def margin(x):
        th = x[:n_polar]
        return float(np.min(np.minimum(th - POLAR_MARGIN, np.pi - POLAR_MARGIN - th)))

    return margin


def _validate(spec: FlowSpec):
    if spec.name not in FLOW_NAMES:
        raise UnsupportedFlowError(f"unknown flow {spec.name!r}; expected one of {FLOW_NAMES}")
    unknown = set(dict(spec.params)) - set(_DEFAULT_PARAMS[spec.name])
    if unknown:
        raise InvalidParameterError(f"unknown parameters for {spec.name}: {sorted(unknown)}")
    p = spec.param_dict
    if spec.name == "euclidean" and spec.dim < 1:
        raise InvalidParameterError("euclidean needs dim >= 1")
    if spec.name == "shrinking_sphere" and spec.dim < 2:
        raise InvalidParameterError("shrinking_sphere needs dim >= 2")
    if spec.name == "cigar" and spec.dim != 2:
        raise InvalidParameterError("cigar is two-dimensional")
    if spec.name == "product" and spec.dim != 3:
        raise InvalidParameterError("product (S^2 x R) is three-dimensional")
    if "radius" in p and not p["radius"] > 0:
        raise InvalidParameterError("radius must be positive")


@lru_cache(maxsize=None)
def make_flow(spec: FlowSpec) -> MetricFamily:
    """Instantiate the closed-form metric family named by ``spec``.

    Results are cached per spec so compiled kernels are shared.

    Raises:
        UnsupportedFlowError: unknown flow name.
        InvalidParameterError: bad dimension or parameter values.
    """
    _validate(spec)
    n = spec.dim
    p = spec.param_dict
    dom = spec.time_domain

    if spec.name == "euclidean":

        def metric(x, tau):
            return jnp.eye(n, dtype=x.dtype) + 0.0 * tau

        return MetricFamily(
            metric, n, dom, sample_box=(-2 * np.ones(n), 2 * np.ones(n)),
            time_window=(0.0, 2.0), name="euclidean", spec=spec,
        )

    if spec.name == "shrinking_sphere":
        r2 = p["radius"] ** 2
        k = 2.0 * (n - 1)

        def metric(x, tau):
            return (r2 - k * tau) * jnp.diag(_round_sphere_diag(x))

        lo = np.r_[np.full(n - 1, POLAR_MARGIN), 0.0]
        hi = np.r_[np.full(n - 1, np.pi - POLAR_MARGIN), 2 * np.pi]
        periods = np.r_[np.zeros(n - 1), 2 * np.pi]
        return MetricFamily(
            metric, n, dom, chart_margin=_polar_margin(n - 1), periods=periods,
            sample_box=(lo, hi), time_window=(0.0, 0.9 * dom[1]),
            name="shrinking_sphere", spec=spec,
        )

    if spec.name == "cigar":

        def metric(x, tau):
            return jnp.eye(2, dtype=x.dtype) / (jnp.exp(4.0 * tau) + x @ x)

        return MetricFamily(
            metric, 2, dom, sample_box=(-2 * np.ones(2), 2 * np.ones(2)),
            time_window=(0.0, 2.0), name="cigar", spec=spec,
        )

    # product: shrinking round S^2 times a static line, coordinates (theta, phi, z)
    r2 = p["radius"] ** 2

    def metric(x, tau):
        c = r2 - 2.0 * tau
        return jnp.diag(jnp.stack([c, c * jnp.sin(x[0]) ** 2, jnp.ones_like(c)]))

    return MetricFamily(
        metric, 3, dom, chart_margin=_polar_margin(1), periods=np.array([0.0, 2 * np.pi, 0.0]),
        sample_box=(np.array([POLAR_MARGIN, 0.0, -2.0]), np.array([np.pi - POLAR_MARGIN, 2 * np.pi, 2.0])),
        time_window=(0.0, 0.9 * dom[1]), name="product", spec=spec,
    )


def _flow_residual_kernel(m):
    curv = m.curvature

    def residual(x, tau):
        return jax.jacfwd(m.metric, argnums=1)(x, tau) + 2.0 * curv.ricci(x, tau)

    return jax.jit(jax.vmap(residual))


def sample_points(m: MetricFamily, count: int, rng) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = m.sample_box
    xs = rng.uniform(lo, hi, size=(count, m.dim))
    taus = rng.uniform(*m.time_window, size=count)
    return xs, taus


def verify_flow(m: MetricFamily, samples: int = 100, seed: int = 0) -> float:
    """Max Frobenius norm of ``dg/dtau + 2 Ric`` over random in-domain samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    xs, taus = sample_points(m, samples, rng)
    res = np.asarray(m.jitted("flow_residual", _flow_residual_kernel)(jnp.asarray(xs), jnp.asarray(taus)))
    return float(np.max(np.linalg.norm(res, axis=(-2, -1))))


def sample_pairs(m: MetricFamily, count: int, seed: int = 0) -> list:
    """Seeded endpoint pairs ``(p, s, q, t)`` suited to each catalog flow.

    Pairs are drawn well inside the injectivity region (short chart offsets,
    moderate time gaps) so that most have a unique, non-conjugate minimizer.
    """
    from .lfunc import EndpointPair

    rng = np.random.default_rng(seed)
    name = m.spec.name if m.spec is not None else m.name
    lo_t, hi_t = m.time_domain
    pairs = []
    for _ in range(count):
        if name in ("shrinking_sphere", "product"):
            n_polar = m.dim - 1 if name == "shrinking_sphere" else 1
            p = rng.uniform(m.sample_box[0], m.sample_box[1])
            p[:n_polar] = rng.uniform(0.8, np.pi - 0.8, size=n_polar)
            step = rng.uniform(-0.8, 0.8, size=m.dim)
            step[:n_polar] *= 0.6
            q = p + step
            s = rng.uniform(0.02, 0.5) * hi_t
            t = s + rng.uniform(0.1, 0.35) * hi_t
        elif name == "cigar":
            p = rng.uniform(-1.5, 1.5, size=2)
            q = p + rng.uniform(-1.0, 1.0, size=2)
            s = rng.uniform(0.0, 1.0)
            t = s + rng.uniform(0.2, 0.8)
        else:
            p = rng.uniform(-2, 2, size=m.dim)
            q = rng.uniform(-2, 2, size=m.dim)
            s = rng.uniform(0.0, 1.0)
            t = s + rng.uniform(0.2, 1.5)
        pairs.append(EndpointPair(p, float(s), q, float(t)))
    return pairs
