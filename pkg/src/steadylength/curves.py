"""Sampled spacetime curves, vector fields along them, and quadrature."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BPoly, CubicSpline

__all__ = ["gauss_legendre", "Curve", "VariationField"]

DEFAULT_SEGMENTS = 64
DEFAULT_ORDER = 8


def gauss_legendre(s, t, segments=DEFAULT_SEGMENTS, order=DEFAULT_ORDER):
    """Composite Gauss-Legendre abscissae and weights on ``[s, t]``."""
    xi, wi = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(s, t, segments + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    taus = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return taus, weights


class _Interpolant:
    """Piecewise polynomial through node data, vector valued.

    With first and second derivatives supplied this is the quintic Hermite
    interpolant; with values only, a not-a-knot cubic spline.
    """

    def __init__(self, taus, y, dy=None, ddy=None):
        y = np.asarray(y, float)
        self.shape = y.shape[1:]
        flat = y.reshape(len(taus), -1)
        if dy is None:
            self._spline = CubicSpline(taus, flat, axis=0)
            self._polys = None
        else:
            cols = [flat]
            cols.append(np.asarray(dy, float).reshape(len(taus), -1))
            if ddy is not None:
                cols.append(np.asarray(ddy, float).reshape(len(taus), -1))
            jets = np.stack(cols, axis=-1)  # (nodes, ncomp, nderiv)
            self._polys = [
                [BPoly.from_derivatives(taus, jets[:, c, :])]
                for c in range(flat.shape[1])
            ]
            for entry in self._polys:
                entry.append(entry[0].derivative(1))
                entry.append(entry[0].derivative(2))

    def __call__(self, tau, nu=0):
        tau = np.asarray(tau, float)
        if self._polys is None:
            out = self._spline(tau, nu)
        else:
            out = np.stack([entry[nu](tau) for entry in self._polys], axis=-1)
        return out.reshape(tau.shape + self.shape)


class Curve:
    """A path ``gamma`` on ``[s, t]`` sampled at ``N + 1`` uniform times.

    Args:
        s, t: endpoint times, ``s < t``.
        x: node positions, shape ``(N + 1, n)``.
        v, a: optional node velocities and accelerations.  When both are
            given the curve is the quintic Hermite interpolant of the node
            jets; otherwise a cubic spline through the positions.
    """

    def __init__(self, s, t, x, v=None, a=None):
        s, t = float(s), float(t)
        if not s < t:
            raise ValueError(f"curve needs s < t, got s={s}, t={t}")
        x = np.asarray(x, float)
        if x.ndim != 2 or len(x) < 2:
            raise ValueError("node array must have shape (N + 1, n) with N >= 1")
        self.s, self.t = s, t
        self.x = x
        self.v = None if v is None else np.asarray(v, float)
        self.a = None if a is None else np.asarray(a, float)
        self.taus = np.linspace(s, t, len(x))
        if self.v is not None and self.a is not None:
            self._interp = _Interpolant(self.taus, x, self.v, self.a)
        else:
            self._interp = _Interpolant(self.taus, x)

    @classmethod
    def from_function(cls, f, s, t, df=None, ddf=None, segments=DEFAULT_SEGMENTS):
        """Sample ``f(tau) -> point`` (and optionally its derivatives)."""
        taus = np.linspace(s, t, segments + 1)
        x = np.array([f(tau) for tau in taus])
        v = a = None
        if df is not None and ddf is not None:
            v = np.array([df(tau) for tau in taus])
            a = np.array([ddf(tau) for tau in taus])
        return cls(s, t, x, v, a)

    @classmethod
    def straight(cls, p, q, s, t, segments=DEFAULT_SEGMENTS):
        """Constant-velocity chart line from ``p`` at ``s`` to ``q`` at ``t``."""
        p, q = np.asarray(p, float), np.asarray(q, float)
        vel = (q - p) / (t - s)
        return cls.from_function(
            lambda tau: p + (tau - s) * vel, s, t,
            lambda tau: vel, lambda tau: np.zeros_like(vel), segments,
        )

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def segments(self) -> int:
        return len(self.x) - 1

    @property
    def p(self) -> np.ndarray:
        return self.x[0]

    @property
    def q(self) -> np.ndarray:
        return self.x[-1]

    def position(self, tau):
        return self._interp(tau, 0)

    def velocity(self, tau):
        return self._interp(tau, 1)

    def acceleration(self, tau):
        return self._interp(tau, 2)

    def quadrature(self, order=DEFAULT_ORDER):
        return gauss_legendre(self.s, self.t, self.segments, order)

    def perturbed(self, field, eps):
        """The chart-additive variation ``gamma + eps * W``."""
        taus = self.taus
        x = self.x + eps * field.value(taus)
        if self.v is not None and self.a is not None:
            return Curve(
                self.s, self.t, x,
                self.v + eps * field.derivative(taus),
                self.a + eps * field.second_derivative(taus),
            )
        return Curve(self.s, self.t, x)


class VariationField:
    """A vector field ``V`` along a :class:`Curve`, stored at the curve nodes.

    ``first`` and ``second`` are the plain chart derivatives ``dV/dtau`` and
    ``d^2V/dtau^2`` (not covariant derivatives).  ``kind`` is one of
    ``"transported"``, ``"jacobi"`` or ``"arbitrary"``.
    """

    KINDS = ("transported", "jacobi", "arbitrary")

    def __init__(self, curve: Curve, values, first, second, kind="arbitrary"):
        if kind not in self.KINDS:
            raise ValueError(f"kind must be one of {self.KINDS}")
        values = np.asarray(values, float)
        if values.shape != curve.x.shape:
            raise ValueError(f"field values must have shape {curve.x.shape}, got {values.shape}")
        self.curve = curve
        self.values = values
        self.first = np.asarray(first, float)
        self.second = np.asarray(second, float)
        self.kind = kind
        self._interp = _Interpolant(curve.taus, values, self.first, self.second)

    @classmethod
    def from_function(cls, curve, f, df, ddf, kind="arbitrary"):
        taus = curve.taus
        return cls(
            curve,
            np.array([f(tau) for tau in taus]),
            np.array([df(tau) for tau in taus]),
            np.array([ddf(tau) for tau in taus]),
            kind,
        )

    def value(self, tau):
        return self._interp(tau, 0)

    def derivative(self, tau):
        return self._interp(tau, 1)

    def second_derivative(self, tau):
        return self._interp(tau, 2)

    def __mul__(self, c):
        return VariationField(self.curve, c * self.values, c * self.first, c * self.second, self.kind)

    __rmul__ = __mul__
