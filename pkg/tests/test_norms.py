import math

import numpy as np
import pytest
from hypothesis import given

from chaincalc import norms as nm
from chaincalc import rep
from chaincalc import samplers as sm
from chaincalc.chain import DiracChain, ball_region
from chaincalc.multivec import KVector, mass

from conftest import dim_grade, seeds


def dipole(h, n=2):
    pts = np.zeros((2, n))
    pts[1, 0] = h
    return DiracChain(n, pts, np.zeros((2, n), int), np.array([1, 1]), np.array([1.0, -1.0]))


def test_mass_norm_of_element_is_mass():
    a = KVector.from_terms(4, 2, [((1, 2), 1.0), ((3, 4), 1.0)])
    A = DiracChain.element((0.0,) * 4, a)
    assert math.isclose(nm.massNorm(A), mass(a))


def test_mass_norm_adds_over_distinct_points():
    A = dipole(0.3)
    assert nm.massNorm(A) == 2.0


@pytest.mark.parametrize("h", [0.1, 0.01, 1e-4])
def test_dipole_norm_is_its_length(h):
    # |(0; e1) - (h e1; e1)|_{B^1} = h: the difference chain is one order-1 term
    est = nm.estimateNorm(dipole(h), 1)
    assert math.isclose(est.upper, h, rel_tol=1e-12)
    assert est.lower <= est.upper + 1e-15
    assert math.isclose(est.lower, h, rel_tol=1e-6)


@given(seeds, dim_grade(n_max=3))
def test_sandwich(seed, nk):
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, *nk, size=5, spread=0.5)
    for r in (0, 1, 2):
        est = nm.estimateNorm(A, r)
        assert est.lower <= est.upper * (1 + 1e-9) + 1e-12


@given(seeds, dim_grade(n_max=3))
def test_upper_bound_monotone_in_r(seed, nk):
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, *nk, size=5, spread=0.5)
    ubs = [nm.normUB(A, r) for r in (0, 1, 2, 3)]
    assert ubs[0] <= nm.massNorm(A) * (1 + 1e-12)
    assert all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(ubs, ubs[1:]))


@given(seeds, dim_grade(n_max=3))
def test_region_restriction_never_helps(seed, nk):
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, *nk, size=4, spread=0.3)
    U = ball_region((0.0,) * nk[0], 2.0)
    assert nm.normUB(A, 1, U) >= nm.normUB(A, 1) * (1 - 1e-12)


def test_decomposition_reconstructs_chain():
    rng = np.random.default_rng(5)
    A = sm.random_chain(rng, 2, 1, size=6, spread=0.2)
    est = nm.estimateUB(A, 2)
    assert est.decomposition is not None
    B = nm.reconstruct(2, est.decomposition)
    assert (A - B).max_abs() <= est.remainder + 1e-12


def test_order_error_for_low_r():
    A = sm.random_chain(np.random.default_rng(1), 2, 0, orders=[2])
    with pytest.raises(nm.OrderError):
        nm.normUB(A, 1)


def test_tiled_chain_matches_materialized_bound():
    T = rep.cube_difference((0.0, 0.0), (1.0, 1.0), 2)
    assert isinstance(T, nm.TiledChain)
    direct = nm.normUB(T.materialize(), 1)
    assert direct <= T.normUB(1) * (1 + 1e-12)
    # the pattern is centre minus children, so its pairing with constants vanishes
    from chaincalc import form as fm
    assert abs(T.evaluate(fm.constant_form(2, (1, 2)))) < 1e-15


def test_norm_estimate_json():
    est = nm.estimateNorm(dipole(0.5), 1)
    obj = est.to_json()
    assert obj["upper"] == pytest.approx(0.5)
    assert obj["strategy"] == "matching"
