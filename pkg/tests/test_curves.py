import numpy as np
import pytest

from steadylength.curves import Curve, VariationField, gauss_legendre


def test_gauss_legendre_integrates_polynomials_exactly():
    taus, w = gauss_legendre(0.2, 1.7, segments=3, order=4)
    assert w.sum() == pytest.approx(1.5)
    assert np.dot(w, taus**7) == pytest.approx((1.7**8 - 0.2**8) / 8, rel=1e-13)


def test_hermite_curve_reproduces_quintic():
    f = lambda t: np.array([t**5 - t, 2 * t**3])
    df = lambda t: np.array([5 * t**4 - 1, 6 * t**2])
    ddf = lambda t: np.array([20 * t**3, 12 * t])
    c = Curve.from_function(f, 0.0, 1.0, df, ddf, segments=4)
    ts = np.linspace(0, 1, 17)
    np.testing.assert_allclose(c.position(ts), np.array([f(t) for t in ts]), atol=1e-13)
    np.testing.assert_allclose(c.acceleration(ts), np.array([ddf(t) for t in ts]), atol=1e-11)


def test_spline_curve_without_derivatives():
    c = Curve(0.0, 1.0, np.outer(np.linspace(0, 1, 9), [1.0, 2.0]))
    np.testing.assert_allclose(c.velocity(0.3), [1.0, 2.0], atol=1e-12)


def test_straight_curve():
    c = Curve.straight([0.0, 1.0], [2.0, 1.0], 1.0, 3.0)
    np.testing.assert_allclose(c.velocity([1.0, 2.5]), [[1.0, 0.0], [1.0, 0.0]])
    assert c.segments == 64


def test_curve_validation():
    with pytest.raises(ValueError):
        Curve(1.0, 1.0, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        Curve(0.0, 1.0, np.zeros(3))


def test_variation_field_shape_and_kind():
    c = Curve.straight([0.0, 0.0], [1.0, 0.0], 0.0, 1.0, segments=8)
    with pytest.raises(ValueError):
        VariationField(c, np.zeros((8, 2)), np.zeros((8, 2)), np.zeros((8, 2)))
    with pytest.raises(ValueError):
        VariationField(c, np.zeros((9, 2)), np.zeros((9, 2)), np.zeros((9, 2)), kind="other")
    V = VariationField.from_function(c, lambda t: [t, 1.0], lambda t: [1.0, 0.0], lambda t: [0.0, 0.0])
    np.testing.assert_allclose((2 * V).value(0.5), [1.0, 2.0])
