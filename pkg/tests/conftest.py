import time

import numpy as np
import pytest

from steadylength import BVPFailure, EndpointPair, FlowSpec, make_flow, sample_pairs, solve_bvp

# lines collected by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES = []
SUITE_BUDGET = 900.0  # seconds for the whole test session
_START = {}


def pytest_sessionstart(session):
    _START["t"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        elapsed = time.perf_counter() - _START.get("t", time.perf_counter())
        status = "PASS" if elapsed < SUITE_BUDGET else "FAIL"
        terminalreporter.write_line(f"[{status}] C8 full suite runtime: {elapsed:.0f} s (limit {SUITE_BUDGET:.0f} s)")


@pytest.fixture(scope="session")
def euclid():
    return make_flow(FlowSpec("euclidean"))


@pytest.fixture(scope="session")
def sphere():
    return make_flow(FlowSpec("shrinking_sphere"))


@pytest.fixture(scope="session")
def cigar():
    return make_flow(FlowSpec("cigar"))


@pytest.fixture(scope="session")
def flows(euclid, sphere, cigar):
    return {"euclidean": euclid, "shrinking_sphere": sphere, "cigar": cigar}


_SOLVED = {}


def solved_pairs(m, count=20, seed=0):
    """``(pair, geodesic or None, reason)`` for seeded sampled pairs, solved once per session."""
    key = (m.name, count, seed)
    if key not in _SOLVED:
        out = []
        for e in sample_pairs(m, count, seed=seed):
            try:
                out.append((e, solve_bvp(m, e.p, e.s, e.q, e.t), ""))
            except BVPFailure as exc:
                out.append((e, None, f"bvp-failure: {exc}"))
        _SOLVED[key] = out
    return _SOLVED[key]


def certified_geodesics(m, count=5):
    """Certified unique minimizers among the shared sampled pairs."""
    out = [(e, g) for e, g, _ in solved_pairs(m) if g is not None and g.certified and not g.multiplicity_flag]
    return out[:count]


@pytest.fixture(scope="session")
def cigar_geo(cigar):
    return certified_geodesics(cigar, 5)[0]


@pytest.fixture(scope="session")
def sphere_geo(sphere):
    return certified_geodesics(sphere, 5)[0]


@pytest.fixture(scope="session")
def flat_geo(euclid):
    e = EndpointPair(np.array([0.0, 0.0]), 0.0, np.array([1.0, 0.0]), 1.0)
    return e, solve_bvp(euclid, e.p, e.s, e.q, e.t)
