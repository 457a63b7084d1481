import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaincalc import flow as fl
from chaincalc import form as fm
from chaincalc import rep
from chaincalc.chain import DiracChain
from chaincalc.multivec import blade

from conftest import seeds


def rot(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


@pytest.mark.parametrize("t", [0.3, 1.0, -0.7])
def test_rotation_flow_and_jacobian(t):
    V = fl.rotation_field()
    p = np.array([0.4, -1.2])
    assert np.allclose(fl.flowPoint(V, t, p), rot(t) @ p, atol=1e-9)
    assert np.allclose(fl.flowJacobian(V, t, p), rot(t), atol=1e-9)


def test_nonlinear_flow_matches_closed_form():
    # x' = x^2: phi_t(x) = x / (1 - t x), D phi_t = (1 - t x)^-2
    V = fm.VectorFieldB([fm.poly_scalar(1, {(2,): 1.0})])
    x = np.array([[0.5], [-1.0]])
    x_t, J = fl.FlowMap(V).point_and_jacobian(0.8, x)
    assert np.allclose(x_t[:, 0], x[:, 0] / (1 - 0.8 * x[:, 0]), atol=1e-9)
    assert np.allclose(J[:, 0, 0], (1 - 0.8 * x[:, 0]) ** -2, atol=1e-8)


@given(seeds, st.floats(0.05, 0.6), st.floats(0.05, 0.6))
def test_flow_group_property(seed, s, t):
    rng = np.random.default_rng(seed)
    V = fm.VectorFieldB.linear(0.5 * rng.normal(size=(2, 2)))
    p = rng.normal(size=(3, 2))
    F = fl.FlowMap(V)
    assert np.allclose(F(s, F(t, p)), F(s + t, p), atol=1e-8)


def test_trajectory_rejects_decreasing_times():
    with pytest.raises(ValueError):
        list(fl.FlowMap(fl.rotation_field()).trajectory([[1.0, 0.0]], [1.0, 0.5]))


def test_stiff_request_raises_flow_error():
    V = fm.VectorFieldB([fm.poly_scalar(1, {(2,): 1.0})])
    with pytest.raises(fl.FlowError):
        fl.FlowMap(V, tol=1e-14, max_halvings=2)(0.99, [[1.0]])


def test_pushforward_flow_dilation_scales_blades():
    A = DiracChain.element((1.0, 2.0), blade(2, 1, 2))
    B = fl.pushforwardFlow(fl.dilation_field(), 0.5, A)
    assert np.allclose(B.points, [[math.exp(0.5), 2 * math.exp(0.5)]], atol=1e-9)
    assert math.isclose(B.coef[0], math.exp(1.0), rel_tol=1e-9)
    assert fl.pushforwardFlow(fl.dilation_field(), 0.0, A) is A


def test_push_rows_rejects_higher_order():
    A = DiracChain(1, np.zeros((1, 1)), np.ones((1, 1), int), np.array([0]), np.array([1.0]))
    with pytest.raises(ValueError):
        fl.push_rows(A, np.zeros((1, 1)), np.ones((1, 1, 1)))


def test_time_midpoints():
    ts, dt = fl.time_midpoints(0.0, 1.0, 2)
    assert dt == 0.25 and ts.tolist() == [0.125, 0.375, 0.625, 0.875]


def test_evolving_chain_of_a_point_is_the_trajectory():
    # {J_t} for J0 = (p; 1) under a constant field is the segment from p to p + (b - a) v
    V = fm.VectorFieldB.constant([2.0, 0.0])
    J0 = DiracChain.element((0.0, 0.0), blade(2))
    S = fl.evolvingChain(J0, V, 0.0, 1.0)
    x = fm.coordinate(2, 0)
    # int_{J_t} x dt over t in [0,1] with x(t) = 2t
    assert math.isclose(S.evaluate(x, 4), 1.0, rel_tol=1e-12)


def test_ftc_converges_at_second_order():
    J0 = rep.cubeStream((0.2,), (1.0,))
    emb = DiracChain(2, np.c_[J0.snapshot(3).points, np.zeros(8)], np.zeros((8, 2), int),
                     np.full(8, 1), J0.snapshot(3).coef)
    w = fm.PolyForm.from_terms(2, 1, [((1,), (1, 1), 1.0), ((2,), (2, 0), 0.5)])
    T = fl.ftcTable(emb, fl.rotation_field(), w, 0.0, 1.0, [2, 3, 4, 5])
    ratios = [r["ratio"] for r in T.table[1:]]
    assert all(3.5 < q < 4.5 for q in ratios)
    assert T.csv().splitlines()[0] == "depth_time,residual,ratio"


def test_stokes_for_evolving_square():
    S = rep.cubeStream((0.0, 0.0), (1.0, 1.0))
    w = fm.PolyForm.from_terms(2, 1, [((1,), (0, 2), 1.0), ((2,), (1, 1), 1.0)])
    res = fl.stokesEvolvingCheck(S, fl.rotation_field(), w, 0.0, 0.5, 6, space_depth=4)
    assert res.residual < 1e-3


def test_leibniz_static_chain():
    A = rep.cubeStream((0.0, 0.0), (1.0, 1.0)).snapshot(2)
    T = fm.TimeForm((fm.constant_form(2, (1, 2), 0.0), fm.PolyForm.from_terms(2, 2, [((1, 2), (1, 0), 1.0)])))
    res = fl.leibnizCheck(lambda t: A, T, fm.VectorFieldB.constant([0.0, 0.0]), 0.5)
    assert res.residual < 1e-10


def test_reynolds_dilation_area_growth():
    A = rep.cubeStream((0.0, 0.0), (1.0, 1.0)).snapshot(3)
    V = fl.dilation_field()
    fam = fl.flow_family(A, V)
    T = fm.TimeForm((fm.constant_form(2, (1, 2)),))
    res = fl.reynoldsCheck(fam, T, V, 0.25, oracle=lambda t: 2 * math.exp(2 * t))
    assert res.residual < 1e-4
    with pytest.raises(ValueError):
        fl.reynoldsCheck(fam, fm.TimeForm((fm.constant_form(2, (1,)),)), V, 0.25)


def test_field_parser():
    V = fl.field_from_json({"kind": "linear", "matrix": [[0, 1], [0, 0]]}, 2)
    assert np.allclose(V.values([[1.0, 2.0]]), [[2.0, 0.0]])
    with pytest.raises(ValueError):
        fl.field_from_json({"kind": "vortex"}, 2)
