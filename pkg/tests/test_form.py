import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaincalc import form as fm
from chaincalc import samplers as sm
from chaincalc.chain import DiracChain, box_region
from chaincalc.multivec import SymTensor, blade, scalar

from conftest import dim_grade, seeds


def x_cubed():
    return fm.poly_scalar(1, {(3,): 1.0})


def test_point_evaluation():
    w = fm.PolyForm.from_terms(2, 1, [((1,), (1, 2), 3.0), ((2,), (0, 0), -1.0)])
    # omega = 3 x y^2 dx - dy at (2, 1)
    assert w((2.0, 1.0), blade(2, 1)) == 6.0
    assert w((2.0, 1.0), blade(2, 2)) == -1.0


def test_order_one_and_two_elements_pair_with_derivatives():
    f = x_cubed()
    assert f((2.0,), scalar(1), SymTensor(1, ((1.0,),))) == 12.0
    assert f((2.0,), scalar(1), SymTensor(1, ((1.0,), (1.0,)))) == 12.0
    assert f((2.0,), scalar(1), SymTensor(1, ((2.0,), (1.0,)))) == 24.0


def test_trig_form_derivatives():
    w = fm.TrigForm(1, 0, {0: [(1.0, [2.0], 0.0)]})  # sin(2x)
    p = 0.3
    assert math.isclose(w((p,), scalar(1)), math.sin(2 * p))
    assert math.isclose(w((p,), scalar(1), SymTensor(1, ((1.0,),))), 2 * math.cos(2 * p))


def test_grade_mismatch_rejected():
    with pytest.raises(ValueError):
        fm.evalChain(x_cubed(), DiracChain.element((0.0,), blade(1, 1)))


def test_exterior_derivative_of_coordinate_product():
    # d(x y) = y dx + x dy
    f = fm.poly_scalar(2, {(1, 1): 1.0})
    df = fm.exteriorD(f)
    assert df((2.0, 5.0), blade(2, 1)) == 5.0
    assert df((2.0, 5.0), blade(2, 2)) == 2.0


@given(seeds, dim_grade(k_min=0))
def test_dd_is_zero(seed, nk):
    n, k = nk
    if k + 2 > n:
        return
    rng = np.random.default_rng(seed)
    w = sm.random_poly_form(rng, n, k, 4)
    A = sm.random_chain(rng, n, k + 2, max_order=1)
    assert abs(fm.evalChain(fm.exteriorD(fm.exteriorD(w)), A)) < 1e-10


@given(seeds, dim_grade())
def test_hodge_twice(seed, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    w = sm.random_poly_form(rng, n, k)
    A = sm.random_chain(rng, n, k)
    lhs = fm.evalChain(fm.hodge(fm.hodge(w)), A)
    assert math.isclose(lhs, (-1.0) ** (k * (n - k)) * fm.evalChain(w, A), rel_tol=1e-12, abs_tol=1e-12)


@given(seeds, dim_grade(k_min=1))
def test_cartan_formula_constant_field(seed, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n)
    w = sm.random_poly_form(rng, n, k)
    A = sm.random_chain(rng, n, k, max_order=1)
    lie = fm.evalChain(fm.interiorLie(v, w, "lie"), A)
    parts = fm.evalChain(fm.exteriorD(fm.interiorLie(v, w, "interior")), A)
    if k < n:
        parts += fm.evalChain(fm.interiorLie(v, fm.exteriorD(w), "interior"), A)
    assert math.isclose(lie, parts, rel_tol=1e-10, abs_tol=1e-10)


@given(seeds, st.integers(1, 3))
def test_pullback_by_identity(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, n + 1))
    w = sm.random_poly_form(rng, n, k)
    A = sm.random_chain(rng, n, k, max_order=2)
    assert math.isclose(fm.evalChain(fm.pullback(fm.SmoothMap.identity(n), w), A), fm.evalChain(w, A),
                        rel_tol=1e-12, abs_tol=1e-12)


def test_bracket_of_linear_fields():
    # [V, W] = DW V - DV W = (BA - AB) x for V = A x, W = B x
    A = np.array([[0.0, -1.0], [1.0, 0.0]])
    B = np.array([[1.0, 0.0], [0.0, 0.0]])
    V, W = fm.VectorFieldB.linear(A), fm.VectorFieldB.linear(B)
    x = np.array([[0.3, -0.7]])
    assert np.allclose(V.bracket(W).values(x), ((B @ A - A @ B) @ x.T).T)


@given(seeds, st.integers(1, 3), st.integers(0, 2))
def test_certified_norm_dominates_samples(seed, n, r):
    rng = np.random.default_rng(seed)
    w = sm.random_poly_form(rng, n, 0, 3)
    box = (np.full(n, -1.0), np.full(n, 1.0))
    bound = fm.certifiedNorm(w, r, box)
    pts = rng.uniform(-1, 1, (30, n))
    for p in pts:
        assert abs(w(p, scalar(n))) <= bound + 1e-12
        if r >= 1:
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            assert abs(w(p, scalar(n), SymTensor(n, (tuple(u),)))) <= bound + 1e-12


def test_certified_norm_uses_region_box():
    w = fm.poly_scalar(1, {(2,): 1.0}, region=box_region((0.0,), (2.0,)))
    assert fm.certifiedNorm(w, 0) >= 4.0


def test_time_form():
    w0, w1 = fm.constant_form(2, (1, 2), 1.0), fm.constant_form(2, (1, 2), 2.0)
    T = fm.TimeForm((w0, w1))
    e = blade(2, 1, 2)
    assert T.at(3.0)((0.0, 0.0), e) == 7.0
    assert T.dt(3.0)((0.0, 0.0), e) == 2.0


def test_form_json_roundtrip():
    obj = {"family": "poly", "grade": 1, "n": 2,
           "terms": [{"idx": [2], "monomial": {"exps": [1, 0]}, "c": 2.0}]}
    w = fm.form_from_json(obj)
    assert w((3.0, 0.0), blade(2, 2)) == 6.0
    with pytest.raises(ValueError):
        fm.form_from_json({"family": "nope"})


def test_exact_sum_is_correctly_rounded():
    assert fm.exact_sum(np.array([1e16, 1.0, -1e16])) == 1.0
