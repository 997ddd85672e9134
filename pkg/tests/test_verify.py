import numpy as np
import pytest

from steadylength import (
    BVPFailure,
    EndpointPair,
    GridSpec,
    check_inequalities,
    fd_crosscheck,
    monotonicity_scan,
    saturation_residual,
)
from steadylength import lgeo
from steadylength.verify import InequalityReport, check_many, saturation_matrix, summarize

from conftest import certified_geodesics


def test_flat_space_saturates(euclid, flat_geo):
    e, geo = flat_geo
    r = check_inequalities(euclid, e, geodesic=geo)
    assert not r.skipped
    assert abs(r.ineq1) <= 1e-6
    assert abs(r.ineq2) <= 1e-6
    assert r.saturation <= 1e-6
    assert saturation_residual(euclid, e, geodesic=geo) <= 1e-6


def test_flat_space_saturates_for_sampled_pairs(euclid):
    from steadylength import FlowSpec, sample_pairs

    pairs = sample_pairs(euclid, 4, seed=7)
    reps = check_many(FlowSpec("euclidean"), pairs)
    assert [r.pair for r in reps] == pairs
    for r in reps:
        assert abs(r.ineq1) <= 1e-6 and abs(r.ineq2) <= 1e-6 and r.saturation <= 1e-6


@pytest.mark.parametrize("name", ["shrinking_sphere", "cigar"])
def test_saturation_matrix_is_symmetric(flows, name):
    m = flows[name]
    for _, geo in certified_geodesics(m, 2):
        S = saturation_matrix(m, geo)
        assert np.max(np.abs(S - S.T)) <= 1e-8


@pytest.mark.parametrize("name", ["shrinking_sphere", "cigar"])
def test_first_inequality_holds_on_samples(flows, name):
    m = flows[name]
    for e, geo in certified_geodesics(m, 3):
        assert check_inequalities(m, e, geodesic=geo).ineq1 >= -1e-4


def test_second_inequality_fails_on_sphere_diagonal(sphere):
    # known violation: at p = q the minimizer is the constant curve, so
    # ineq2 = 2 box + R(q) - R(p) with box = n (1 - k)^2 / (c_s Sigma) > 0
    s, t = 0.0, 0.25
    p = np.array([1.3, 0.4])
    r = check_inequalities(sphere, EndpointPair(p, s, p.copy(), t))
    cs, ct = 1 - 2 * s, 1 - 2 * t
    k = np.sqrt(cs / ct)
    box = 2 * (1 - k) ** 2 / (cs * (-0.5 * np.log(ct / cs)))
    expected = 2 * box + 2 / ct - 2 / cs
    assert r.ineq2 == pytest.approx(expected, rel=1e-6)
    assert r.ineq2 > 1e-4
    assert not r.ineq2_ok


def test_multiplicity_is_skipped(sphere):
    r = check_inequalities(sphere, EndpointPair(np.array([np.pi / 2, 0.0]), 0.0, np.array([np.pi / 2, np.pi]), 0.1))
    assert r.skipped
    assert r.reason.startswith("multiplicity")
    assert np.isnan(r.ineq1) and r.ok


def test_solver_failure_is_skipped(euclid, monkeypatch):
    def stall(*args, **kw):
        raise BVPFailure("stalled")

    monkeypatch.setattr(lgeo, "_newton", stall)
    monkeypatch.setattr(lgeo, "_direct", stall)
    r = check_inequalities(euclid, EndpointPair(np.zeros(2), 0.0, np.ones(2), 1.0))
    assert r.skipped and r.reason.startswith("bvp-failure")


def test_summarize_applies_skip_limit():
    e = EndpointPair(np.zeros(2), 0.0, np.ones(2), 1.0)
    good = InequalityReport(e, ineq1=0.1, ineq2=-0.1, saturation=0.0)
    skip = InequalityReport(e, skipped=True, reason="multiplicity: tie")
    assert summarize([good] * 3 + [skip])["passed"]
    out = summarize([good] * 2 + [skip] * 2)
    assert out["skip_fraction"] == 0.5 and not out["passed"]
    bad = InequalityReport(e, ineq1=0.1, ineq2=0.5, saturation=0.0)
    out = summarize([good, bad])
    assert out["ineq1_ok"] and not out["ineq2_ok"] and not out["passed"]
    assert out["max_ineq2"] == 0.5


def test_fd_crosscheck_flat(euclid, flat_geo):
    e, geo = flat_geo
    out = fd_crosscheck(euclid, e, geodesic=geo)
    assert set(out) == {"grad_p", "grad_q", "grad_p_norm", "grad_q_norm", "dL_ds", "dL_dt", "hessian", "trace_identity"}
    assert all(v["pass"] for v in out.values())


def test_monotonicity_flat_is_constant(euclid):
    tr = monotonicity_scan(euclid, 0.5, [0.0, 0.5, 1.0], GridSpec(points=2, descend=1))
    assert tr.spread <= 1e-8
    assert tr.non_decreasing


def test_monotonicity_rejects_bad_times(sphere):
    with pytest.raises(ValueError):
        monotonicity_scan(sphere, 0.0, [0.0])
    from steadylength import OutOfDomainError

    with pytest.raises(OutOfDomainError):
        monotonicity_scan(sphere, 0.3, [0.1, 0.3])
