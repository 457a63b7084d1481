import json

import numpy as np
import pytest
from hypothesis import given

from chaincalc import samplers as sm
from chaincalc.chain import ChainElement, DiracChain, ball_region, box_region, differenceChain, slit_disk_region
from chaincalc.multivec import KVector, SymTensor, blade, scalar

from conftest import dim_grade, seeds


def test_canonicalization_merges_and_prunes():
    e1 = blade(2, 1)
    A = DiracChain.element((0.0, 0.0), e1) + DiracChain.element((0.0, 0.0), e1 * 2.0)
    assert A.size == 1 and A.coef[0] == 3.0
    Z = A - A
    assert Z.is_zero() and Z.size == 0


def test_element_expands_symmetric_product():
    A = DiracChain.element((0.0, 0.0), scalar(2), SymTensor(2, ((1.0, 1.0),)))
    assert A.size == 2
    assert sorted(map(tuple, A.sym.tolist())) == [(0, 1), (1, 0)]


def test_immutable():
    A = DiracChain.element((0.0,), blade(1, 1))
    with pytest.raises(AttributeError):
        A.coef = None
    with pytest.raises(ValueError):
        A.coef[0] = 2.0


@given(seeds, dim_grade())
def test_canonical_form_is_order_independent(seed, nk):
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, *nk, max_order=2, size=8)
    perm = rng.permutation(A.size)
    B = DiracChain(A.dim, A.points[perm], A.sym[perm], A.blade[perm], A.coef[perm])
    assert A == B


@given(seeds, dim_grade())
def test_vector_space_laws(seed, nk):
    rng = np.random.default_rng(seed)
    A, B = (sm.random_chain(rng, *nk, max_order=1, size=5) for _ in range(2))
    assert (A + B).allclose(B + A, 0.0)
    assert (A * 2.0 - A).allclose(A, 1e-15)
    assert (A + B - B).allclose(A, 1e-14)


@given(seeds, dim_grade())
def test_json_roundtrip(seed, nk):
    rng = np.random.default_rng(seed)
    A = sm.random_chain(rng, *nk, max_order=2, size=5)
    B = DiracChain.from_json(json.loads(json.dumps(A.to_json())))
    assert B.allclose(A, 1e-12)


def test_translate_and_support():
    A = DiracChain.element((0.0, 1.0), blade(2, 1, 2))
    B = A.translate((1.0, -1.0))
    assert np.array_equal(B.support(), [[1.0, 0.0]])
    with pytest.raises(ValueError):
        A.translate((1.0,))


def test_difference_chain_order_one():
    # Delta_u (p; a) = (p + u; a) - (p; a)
    D = differenceChain([(1.0, 0.0)], (0.5, 0.5), blade(2, 1))
    assert D.size == 2
    assert np.isclose(D.coef.sum(), 0.0)
    assert sorted(D.points[:, 0].tolist()) == [0.5, 1.5]


def test_regions():
    B = ball_region((0.0, 0.0), 1.0)
    assert B.contains([[0.2, 0.1], [1.5, 0.0]]).tolist() == [True, False]
    Q = box_region((0.0, 0.0), (1.0, 1.0))
    assert Q.contains_box([[0.1, 0.1]], [[0.9, 0.9]]).tolist() == [True]
    S = slit_disk_region()
    # the slit removes points on the positive x axis
    assert not S.contains([[0.5, 0.0]])[0]
    assert S.contains([[-0.5, 0.0]])[0]


def test_restrict():
    A = DiracChain(1, np.array([[0.1], [2.0]]), np.zeros((2, 1), int), np.array([0, 0]), np.array([1.0, 1.0]))
    R = A.restrict(ball_region((0.0,), 1.0))
    assert R.size == 1 and R.points[0, 0] == 0.1


def test_mixed_dimensions_rejected():
    with pytest.raises(ValueError):
        DiracChain.from_elements(2, [ChainElement((0.0,), SymTensor(1), KVector.from_terms(1, 0, [((), 1.0)]))])
