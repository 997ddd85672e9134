import numpy as np
import pytest

from steadylength import (
    EndpointPair,
    FlowSpec,
    InvalidParameterError,
    UnsupportedFlowError,
    make_flow,
    sample_pairs,
    verify_flow,
)


def test_euclidean_is_identity(euclid):
    np.testing.assert_array_equal(euclid.metric_matrix([0.4, -3.0], 1.7), np.eye(2))


def test_sphere_conformal_factor(sphere):
    g = sphere.metric_matrix([np.pi / 2, 0.0], 0.25)
    np.testing.assert_allclose(g, 0.5 * np.eye(2), atol=1e-15)


def test_cigar_at_origin(cigar):
    for tau in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(cigar.metric_matrix([0.0, 0.0], tau), np.exp(-4 * tau) * np.eye(2))


@pytest.mark.parametrize(
    "spec, expected",
    [
        (FlowSpec("shrinking_sphere"), (0.0, 0.5)),
        (FlowSpec("shrinking_sphere", 3, {"radius": 2.0}), (0.0, 1.0)),
        (FlowSpec("cigar"), (-np.inf, np.inf)),
        (FlowSpec("euclidean", 3), (-np.inf, np.inf)),
    ],
)
def test_time_domains(spec, expected):
    assert make_flow(spec).time_domain == expected


def test_specs_are_hashable_and_cached():
    a = FlowSpec("shrinking_sphere", 2, {"radius": 1.0})
    b = FlowSpec("shrinking_sphere", 2, {"radius": 1.0})
    assert hash(a) == hash(b)
    assert make_flow(a) is make_flow(b)


@pytest.mark.parametrize(
    "spec, exc",
    [
        (FlowSpec("bryant"), UnsupportedFlowError),
        (FlowSpec("shrinking_sphere", 2, {"radius": -1.0}), InvalidParameterError),
        (FlowSpec("cigar", 3), InvalidParameterError),
        (FlowSpec("euclidean", 2, {"radius": 1.0}), InvalidParameterError),
    ],
)
def test_invalid_specs(spec, exc):
    with pytest.raises(exc):
        make_flow(spec)


@pytest.mark.parametrize(
    "spec",
    [
        FlowSpec("euclidean"),
        FlowSpec("shrinking_sphere"),
        FlowSpec("shrinking_sphere", 3),
        FlowSpec("cigar"),
        FlowSpec("product", 3),
    ],
)
def test_verify_flow(spec):
    assert verify_flow(make_flow(spec), samples=100, seed=0) <= 1e-8


def test_verify_flow_euclidean_is_exact(euclid):
    assert verify_flow(euclid, 10) == 0.0


def test_verify_flow_rejects_empty(euclid):
    with pytest.raises(ValueError):
        verify_flow(euclid, 0)


@pytest.mark.parametrize("name", ["euclidean", "shrinking_sphere", "cigar"])
def test_sample_pairs_are_seeded_and_in_domain(flows, name):
    m = flows[name]
    a = sample_pairs(m, 10, seed=4)
    b = sample_pairs(m, 10, seed=4)
    for e, f in zip(a, b):
        assert isinstance(e, EndpointPair)
        np.testing.assert_array_equal(e.p, f.p)
        assert e.s < e.t
        e.validate(m)
