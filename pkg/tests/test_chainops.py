import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaincalc import chainops as co
from chaincalc import form as fm
from chaincalc import samplers as sm
from chaincalc.chain import DiracChain
from chaincalc.multivec import blade, scalar, wedge_sign

from conftest import dim_grade, seeds


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@given(seeds, dim_grade(k_min=1))
def test_stokes(seed, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, n, k, max_order=2, size=6)
    w = sm.random_poly_form(rng, n, k - 1)
    assert close(fm.evalChain(w, co.boundary(A)), fm.evalChain(fm.exteriorD(w), A))


@given(seeds, st.sampled_from(["extrude", "retract", "prederiv", "perp", "coboundary", "geomLaplace",
                               "dirBoundary"]), dim_grade())
def test_operator_duals(seed, name, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    op = co.make_operator(name, v=rng.normal(size=n))
    if not 0 <= k + op.dk <= n:
        return
    A = sm.random_chain(rng, n, k, max_order=1)
    w = sm.random_poly_form(rng, n, n - k if name == "perp" else k + op.dk, 4)
    assert close(fm.evalChain(w, op(A)), fm.evalChain(op.dual(w), A))


@given(seeds, dim_grade(n_min=1))
def test_pushforward_dual_to_pullback(seed, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    F = sm.random_quadratic_map(rng, n)
    A = sm.random_chain(rng, n, k)
    w = sm.random_poly_form(rng, n, k)
    assert close(fm.evalChain(w, co.pushforward(F, A)), fm.evalChain(fm.pullback(F, w), A))


def test_pushforward_rejects_higher_order_through_nonlinear_map():
    F = fm.SmoothMap([fm.poly_scalar(1, {(2,): 1.0})])
    A = sm.random_chain(np.random.default_rng(0), 1, 0, orders=[1])
    with pytest.raises(co.UnsupportedPushforward):
        co.pushforward(F, A)


@given(seeds, dim_grade())
def test_boundary_squared(seed, nk):
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, *nk, max_order=2)
    if nk[1] < 2:
        return
    assert co.boundary(co.boundary(A)).max_abs() < 1e-12


@given(seeds, dim_grade())
def test_car_and_clifford(seed, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, n, k, max_order=1)
    v, u = rng.normal(size=n), rng.normal(size=n)
    car = co._extrude(v, co._retract(u, A)) + co._retract(u, co._extrude(v, A))
    assert car.allclose(A * float(v @ u), 1e-12)
    assert co.clifford(v, co.clifford(v, A)).allclose(A * float(v @ v), 1e-12)


@given(seeds, dim_grade())
def test_prederivative_is_boundary_anticommutator(seed, nk):
    n, k = nk
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, n, k, max_order=1)
    v = rng.normal(size=n)
    lhs = co.boundary(co._extrude(v, A))
    if k > 0:
        lhs = lhs + co._extrude(v, co.boundary(A))
    assert lhs.allclose(co.prederiv(v, A), 1e-12)


def test_prederiv_of_point_pairs_with_directional_derivative():
    f = fm.poly_scalar(2, {(2, 1): 1.0})  # x^2 y
    A = co.prederiv([1.0, 0.0], DiracChain.element((3.0, 2.0), scalar(2)))
    assert fm.evalChain(f, A) == 12.0


def test_extrude_point_into_segment_direction():
    A = co.extrude([0.0, 2.0], DiracChain.element((1.0, 1.0), scalar(2)))
    assert A.size == 1 and A.blade[0] == 0b10 and A.coef[0] == 2.0


def test_perp_sign_table_matches_wedge_relation():
    # alpha ^ perp(alpha) = |alpha|^2 e_{1..n} in odd n
    for m in range(8):
        A = DiracChain(3, np.zeros((1, 3)), np.zeros((1, 3), np.int64), np.array([m]), np.array([1.0]))
        P = co.perp(A)
        assert wedge_sign(m, int(P.blade[0])) * P.coef[0] == 1.0


def test_operator_product_table_is_a_sign_pattern():
    t = co.perp_operator_product_table(3)
    assert set(t.values()) <= {-1.0, 1.0}
    assert len(t) == 8


def test_multiply_chain_by_function():
    f = fm.poly_scalar(1, {(1,): 1.0})
    A = co.multiplyChain(f, DiracChain.element((4.0,), blade(1, 1)))
    assert A.coef[0] == 4.0


def test_cartesian_product_of_segments_pairs_like_product_form():
    A = DiracChain.element((0.5,), blade(1, 1))
    B = DiracChain.element((2.0,), blade(1, 1))
    C = co.cartesian(A, B)
    w = fm.PolyForm.from_terms(2, 2, [((1, 2), (1, 1), 1.0)])
    assert fm.evalChain(w, C) == 1.0


@given(seeds, dim_grade())
def test_geom_dirac_squares_to_laplace(seed, nk):
    A = sm.random_chain(np.random.default_rng(seed), *nk, max_order=1)
    assert co.geomDirac(co.geomDirac(A)).allclose(co.geomLaplace(A), 1e-11)


def test_unknown_operator():
    with pytest.raises(KeyError):
        co.make_operator("nope")


@given(seeds, dim_grade())
def test_multiplication_commutator_with_prederivative(seed, nk):
    # [m_f, P_v] = m_{L_v f} on chains, paired against a random form
    n, k = nk
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n)
    f = sm.random_poly_form(rng, n, 0, 3)
    A = sm.random_chain(rng, n, k, max_order=1)
    w = sm.random_poly_form(rng, n, k)
    lhs = co.multiplyChain(f, co.prederiv(v, A)) - co.prederiv(v, co.multiplyChain(f, A))
    rhs = co.multiplyChain(fm.lie_const(v, f), A)
    assert close(fm.evalChain(w, lhs), fm.evalChain(w, rhs))
