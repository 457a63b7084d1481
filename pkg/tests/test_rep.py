import math
import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaincalc import chainops as co
from chaincalc import form as fm
from chaincalc import norms as nm
from chaincalc import rep
from chaincalc import samplers as sm
from chaincalc.chain import ball_region
from chaincalc.multivec import blade

from conftest import seeds

VOL2 = fm.constant_form(2, (1, 2))


def test_cube_stream_volume_is_exact_at_every_level():
    S = rep.cubeStream((0.0, 0.0), (2.0, 1.5))
    for j in range(4):
        assert S.evaluate(VOL2, j) == 3.0
    assert S.snapshot(3).size == 4 ** 3


def test_cube_stream_midpoint_rule():
    # x^2 over [0,1]: midpoint sum at level j is 1/3 - 4^{-j}/12
    S = rep.cubeStream((0.0,), (1.0,))
    w = fm.PolyForm.from_terms(1, 1, [((1,), (2,), 1.0)])
    for j in range(6):
        assert math.isclose(S.evaluate(w, j), 1 / 3 - 4.0 ** -j / 12, rel_tol=1e-14)


@given(seeds, st.integers(1, 3))
def test_cube_rate_bounds_consecutive_differences(seed, n):
    rng = np.random.default_rng(seed)
    S = rep.cubeStream((0.0,) * n, (1.0,) * n)
    w = sm.random_poly_form(rng, n, n, 3)
    box = (np.zeros(n), np.ones(n))
    norm = fm.certifiedNorm(w, 1, box)
    for j in range(3):
        diff = abs(S.evaluate(w, j) - S.evaluate(w, j + 1))
        assert diff <= S.cauchy_rate(j) * norm + 1e-12


@pytest.mark.parametrize("n,j", [(1, 3), (2, 2), (3, 1)])
def test_cube_rate_dominates_norm_bound(n, j):
    S = rep.cubeStream((0.0,) * n, (1.0,) * n)
    T = rep.cube_difference((0.0,) * n, (1.0,) * n, j)
    diff = S.snapshot(j) - S.snapshot(j + 1)
    assert T.materialize().allclose(diff, 1e-14)
    assert nm.normUB(diff, 1) <= S.cauchy_rate(j) * (1 + 1e-12)


def test_phased_cube_agrees_in_the_limit():
    w = fm.PolyForm.from_terms(2, 2, [((1, 2), (2, 1), 1.0)])
    a = rep.cubeStream((0.0, 0.0), (1.0, 1.0)).evaluate(w, 7)
    b = rep.cubeStream((0.0, 0.0), (1.0, 1.0), phase=0.37).evaluate(w, 7)
    assert abs(a - 1 / 6) < 1e-4 and abs(b - 1 / 6) < 1e-3


def test_cube_boundary_stokes():
    S = rep.cubeStream((0.0, 0.0), (1.0, 1.0))
    w = fm.PolyForm.from_terms(2, 1, [((1,), (0, 1), -1.0), ((2,), (1, 0), 1.0)])  # -y dx + x dy
    assert math.isclose(S.boundary().evaluate(w, 3), 2.0, rel_tol=1e-14)
    assert math.isclose(S.evaluate(fm.exteriorD(w), 3), 2.0, rel_tol=1e-14)


def test_simplex_area_and_parallelepiped_volume():
    T = rep.cellStream((0.0, 0.0), [[1.0, 0.0], [0.0, 1.0]], "simplex")
    assert math.isclose(T.evaluate(VOL2, 3), 0.5, rel_tol=1e-14)
    P = rep.cellStream((0.0, 0.0), [[2.0, 0.0], [1.0, 1.0]])
    assert math.isclose(P.evaluate(VOL2, 2), 2.0, rel_tol=1e-14)
    # reversed orientation flips the sign
    Q = rep.cellStream((0.0, 0.0), [[1.0, 1.0], [2.0, 0.0]])
    assert math.isclose(Q.evaluate(VOL2, 2), -2.0, rel_tol=1e-14)


def test_polyhedral_combines_cells():
    A = rep.cubeStream((0.0, 0.0), (1.0, 1.0))
    B = rep.cubeStream((1.0, 0.0), (2.0, 1.0))
    S = rep.polyhedral([(1.0, A), (-0.5, B)])
    assert math.isclose(S.evaluate(VOL2, 2), 0.5)


def test_open_set_area_converges():
    S = rep.openSetStream(ball_region((0.0, 0.0), 1.0))
    vals = [S.evaluate(VOL2, j) for j in (4, 6, 8)]
    errs = [abs(v - math.pi) for v in vals]
    assert errs[-1] < 0.02 and errs[-1] < errs[0]
    assert S.cauchy_rate(3) is None


def test_cantor_intervals():
    ks = rep.cantor_intervals(2)
    assert ks.tolist() == [0, 2, 6, 8]
    # no digit 1 in base 3
    ks = rep.cantor_intervals(6)
    assert len(ks) == 64 and all("1" not in np.base_repr(int(k), 3) for k in ks)


@pytest.mark.parametrize("n", [1, 5, 12])
def test_cantor_boundary_pairs_with_x_to_one(n):
    # the scaled endpoint chain of stage n integrates x to (3/2)^n * (2/3)^n = 1
    S = rep.cantorStream(precision="extended")
    x = fm.coordinate(1, 0)
    assert abs(S.boundary().evaluate(x, n) - 1.0) < 1e-12


def test_cantor_unscaled_mass():
    S = rep.cantorStream(scaled=False)
    for n in (1, 4, 10):
        assert math.isclose(S.evaluate(fm.constant_form(1, (1,)), n), (2 / 3) ** n, rel_tol=4e-15)


def test_sierpinski_scaled_area_is_constant():
    S = rep.sierpinskiStream()
    vals = [S.evaluate(VOL2, k) for k in range(5)]
    assert np.allclose(vals, math.sqrt(3) / 4, rtol=1e-13)


def test_circle_pushforward_length():
    S = rep.domain_from_json({"kind": "pushforward", "map": "circle",
                              "base": {"kind": "cube", "lo": [0.0], "hi": [2 * math.pi]}})
    w = fm.PolyForm.from_terms(2, 1, [((1,), (0, 1), -1.0), ((2,), (1, 0), 1.0)])
    assert abs(S.evaluate(w, 8) - 2 * math.pi) < 1e-4


def test_vector_field_rep_pairs_like_volume_integral():
    # X = e1 on the unit disk: int dx(X) dA = pi, int dy(X) dA = 0
    U = ball_region((0.0, 0.0), 1.0)
    S = rep.vectorFieldRep([(fm.poly_scalar(2, {(0, 0): 1.0}), blade(2, 1))], U)
    assert abs(S.evaluate(fm.constant_form(2, (1,)), 7) - math.pi) < 0.02
    assert S.evaluate(fm.constant_form(2, (2,)), 7) == 0.0


def test_aitken_removes_geometric_error():
    xs = [1.0 + 0.5 ** j for j in range(6)]
    est, used = rep.aitken(xs)
    assert used and abs(est - 1.0) < 1e-14
    assert rep.aitken([1.0, 2.0]) == (2.0, False)


def test_richardson_removes_h2_error():
    xs = [2.0 + 4.0 ** -j for j in range(3)]
    assert abs(rep.richardson(xs) - 2.0) < 1e-14


def test_integrate_stream_reports_rows_and_bound():
    S = rep.cubeStream((0.0,), (1.0,))
    w = fm.PolyForm.from_terms(1, 1, [((1,), (2,), 1.0)])
    res = rep.integrateStream(w, S, rep.IntegrationConfig(j_max=6))
    assert len(res.rows) == 7
    assert abs(res.accelerated - 1 / 3) < 1e-12
    assert res.error_bound is not None and abs(res.value - 1 / 3) <= res.error_bound
    assert res.csv().splitlines()[0] == "j,value,diff,accelerated,certified_bound"


def test_map_stream_applies_operator():
    S = rep.cubeStream((0.0, 0.0), (1.0, 1.0))
    P = rep.map_stream(S, co.perp, name="perp")
    assert P.snapshot(2).allclose(co.perp(S.snapshot(2)))


def test_domain_parser_errors():
    with pytest.raises(ValueError):
        rep.domain_from_json({"kind": "torus"})
    with pytest.raises(ValueError):
        rep.region_from_json({"kind": "blob"})
