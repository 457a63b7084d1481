import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaincalc import multivec as mv
from chaincalc.multivec import KVector, SymTensor, blade, perpKV, retractKV, vector, wedge

from conftest import dim_grade, seeds


def random_kv(rng, n, k):
    return KVector.from_masks(n, k, {m: float(rng.normal()) for m in mv.blades_of_grade(n, k)})


def test_from_terms_sorts_with_sign_and_drops_repeats():
    a = KVector.from_terms(3, 2, [((2, 1), 1.0), ((3, 3), 5.0)])
    assert a.coeffs == {(1, 2): -1.0}


def test_from_terms_rejects_bad_index():
    with pytest.raises(ValueError):
        KVector.from_terms(2, 1, [((3,), 1.0)])


def test_wedge_of_basis_vectors():
    e1, e2 = blade(3, 1), blade(3, 2)
    assert wedge(e2, e1).coeffs == {(1, 2): -1.0}
    assert wedge(e1, e1).is_zero()


@given(seeds, dim_grade(n_min=2))
def test_wedge_associative_and_graded_commutative(seed, nk):
    rng = np.random.default_rng(seed)
    n, k = nk
    a, b = random_kv(rng, n, k), vector(rng.normal(size=n))
    c = vector(rng.normal(size=n))
    assert wedge(wedge(a, b), c).allclose(wedge(a, wedge(b, c)), 1e-10)
    assert wedge(a, b).allclose(wedge(b, a) * (-1.0) ** k, 1e-12)


@given(seeds, dim_grade())
def test_perp_twice(seed, nk):
    rng = np.random.default_rng(seed)
    n, k = nk
    a = random_kv(rng, n, k)
    assert perpKV(perpKV(a)).allclose(a * (-1.0) ** (k * (n - k)), 1e-12)


@given(seeds, dim_grade())
def test_perp_is_an_isometry(seed, nk):
    rng = np.random.default_rng(seed)
    a = random_kv(rng, *nk)
    assert math.isclose(perpKV(a).norm(), a.norm(), rel_tol=1e-12)


@given(seeds, dim_grade(k_min=1))
def test_retract_is_an_antiderivation(seed, nk):
    rng = np.random.default_rng(seed)
    n, k = nk
    v = rng.normal(size=n)
    a, b = random_kv(rng, n, k), vector(rng.normal(size=n))
    if k + 1 > n:
        return
    lhs = retractKV(v, wedge(a, b))
    rhs = wedge(retractKV(v, a), b) + wedge(a, retractKV(v, b)) * (-1.0) ** k
    assert lhs.allclose(rhs, 1e-10)


def test_perp_sign_table_r3():
    # (-1)^{k(n+1)} sign(I, I^c); n = 3 so the first factor is always +1
    got = {mv.indices_of(m): mv.perp_sign(m, 3) for m in range(8)}
    assert got == {(): 1, (1,): 1, (2,): -1, (3,): 1, (1, 2): 1, (1, 3): -1, (2, 3): 1, (1, 2, 3): 1}


def test_mass_simple_equals_norm():
    a = wedge(vector([1.0, 2.0, 0.0, 0.0]), vector([0.0, 1.0, 3.0, 0.0]))
    assert mv.is_simple(a)
    assert math.isclose(mv.mass(a), a.norm())


def test_mass_of_non_simple_two_vector():
    # e12 + e34 is two orthogonal unit planes: comass duality gives mass 2
    a = KVector.from_terms(4, 2, [((1, 2), 1.0), ((3, 4), 1.0)])
    assert not mv.is_simple(a)
    assert math.isclose(mv.mass(a), 2.0, rel_tol=1e-12)
    assert mv.mass(a) >= a.norm()


def test_mass_undetermined_grade_three_in_r6():
    a = KVector.from_terms(6, 3, [((1, 2, 3), 1.0), ((4, 5, 6), 1.0)])
    with pytest.raises(mv.MassUndetermined):
        mv.mass(a)
    assert mv.massUpper(a) == 2.0


@given(seeds, st.integers(2, 5))
def test_two_vector_mass_bounds(seed, n):
    rng = np.random.default_rng(seed)
    a = random_kv(rng, n, 2)
    m = mv.mass(a)
    assert a.norm() - 1e-12 <= m <= sum(abs(c) for c in a.coeffs.values()) + 1e-12


def test_kvector_json_roundtrip():
    a = KVector.from_terms(3, 2, [((1, 3), 0.5), ((2, 3), -2.0)])
    assert KVector.from_json(a.to_json()) == a


def test_symtensor_monomials():
    s = SymTensor(2, ((1.0, 1.0), (1.0, -1.0)))
    # (x + y)(x - y) = x^2 - y^2
    assert s.monomials() == {(2, 0): 1.0, (0, 2): -1.0}
    assert SymTensor.from_exponents((2, 1)).order == 3
    assert math.isclose(mv.symNorm(s), 2.0)


def test_symtensor_factor_order_is_irrelevant():
    a = SymTensor(2, ((1.0, 0.0), (0.0, 2.0)))
    b = SymTensor(2, ((0.0, 2.0), (1.0, 0.0)))
    assert a == b
    assert mv.symCompose(a, b).order == 4


def test_blades_of_grade_count():
    for n in range(5):
        for k in range(n + 1):
            assert len(mv.blades_of_grade(n, k)) == math.comb(n, k)
